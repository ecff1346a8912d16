//! Closed-loop time integration, frame reconstructions and trajectory
//! recording.
//!
//! The golden path integrates the driftless flattened-frame state
//! `N(t, w)` (explicit Euler with per-node renormalization, controls
//! evaluated once per step from the pre-step state). The frame and
//! impulse machinery of the original lab system is kept alive by two
//! alternative integrator paths — the rotating M1 frame with the
//! `epsilon(t) w e3` drift, and the raw lab frame with explicit
//! pi-impulses about e1 at t = kT — which are exactly equivalent to each
//! other by the P(t) frame change; the cross-check (`lab_frame_check`)
//! runs both and reports their mismatch together with the distance from
//! either to the golden path.
//!
//! Time is addressed by integer step index with `h = T / steps_per_period`,
//! so period boundaries (impulse instants, sigma zeros) are exact.

use std::time::Instant;

use crate::control::{feedback, frame_at_sigma, ControlClock, FrameField};
use crate::error::{Error, Result};
use crate::geometry::{exp_s_apply, rot_about_e1, Vec3};
use crate::grid::{lyapunov, norms, OmegaGrid, SpinProfile};
use crate::rotation_field::{build_ode, build_sweep, RotationField};

/// Which construction provides R(omega).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMethod {
    Sweep,
    Ode,
}

impl std::fmt::Display for RotationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RotationMethod::Sweep => write!(f, "sweep"),
            RotationMethod::Ode => write!(f, "ode"),
        }
    }
}

/// Full description of one closed-loop run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: OmegaGrid,
    /// Impulse period T, by default coupled to the band width as
    /// T = 2 pi / (omega_hi - omega_lo); see [`SimConfig::default_period`].
    pub period: f64,
    pub steps_per_period: u32,
    /// Final time is `periods * period`.
    pub periods: u32,
    pub record_stride: u32,
    pub m0: SpinProfile,
    pub mf: SpinProfile,
    /// Hand-picked rotation field instead of a built one (equator
    /// counterexample). Must live on `grid`.
    pub rotation_override: Option<RotationField>,
    pub method: RotationMethod,
    /// Run the M1-frame and lab-frame integrators alongside the golden
    /// path and record their mutual mismatch at t = 2kT.
    pub lab_frame_check: bool,
}

impl SimConfig {
    /// The default band coupling T = 2 pi / (omega_hi - omega_lo).
    pub fn default_period(grid: &OmegaGrid) -> f64 {
        std::f64::consts::TAU / grid.span()
    }

    pub fn step_size(&self) -> f64 {
        self.period / self.steps_per_period as f64
    }

    pub fn total_steps(&self) -> u64 {
        self.steps_per_period as u64 * self.periods as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !self.period.is_finite() || self.period <= 0.0 {
            return Err(Error::InvalidConfig("period must be positive".into()));
        }
        if self.steps_per_period == 0 {
            return Err(Error::InvalidConfig("steps_per_period must be >= 1".into()));
        }
        if self.periods == 0 {
            return Err(Error::InvalidConfig("periods must be >= 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be >= 1".into()));
        }
        if self.grid.n_nodes() < 3 {
            return Err(Error::InvalidConfig(
                "grid must have at least 3 nodes".into(),
            ));
        }
        if self.m0.grid() != &self.grid || self.mf.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        self.m0.check_on_sphere(1e-9)?;
        self.mf.check_on_sphere(1e-9)?;
        if let Some(r) = &self.rotation_override {
            if r.grid() != &self.grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(())
    }

    /// Builds (or clones) the rotation field and attaches derivatives.
    pub fn rotation_field(&self) -> Result<RotationField> {
        let field = match &self.rotation_override {
            Some(r) => r.clone(),
            None => match self.method {
                RotationMethod::Sweep => build_sweep(&self.mf)?,
                RotationMethod::Ode => build_ode(&self.mf)?,
            },
        };
        field.with_derivatives()
    }
}

/// One recorded sample of the closed loop.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub lyapunov: f64,
    pub u1: f64,
    pub u2: f64,
    /// `max_i |M(t, w_i) - Mf(w_i)|`, populated at t = 2kT where the lab
    /// profile equals the M1 profile exactly.
    pub linf_to_target: Option<f64>,
    /// Discrete L2 distance of the N-frame state to the south pole.
    pub l2_to_minus_e3: f64,
}

/// Mismatch diagnostics from the alternative integrator paths, measured
/// at every t = 2kT sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabCheck {
    /// Max L-infinity gap between the lab-frame path (explicit impulses)
    /// and the M1-frame path. The two are the same discrete flow in exact
    /// arithmetic.
    pub max_lab_vs_m1: f64,
    /// Max L-infinity gap between the M1-frame path and the golden
    /// N-frame path (mapped to the lab frame). This is the measured
    /// integration-variable discrepancy of the Euler scheme, O(h).
    pub max_m1_vs_n: f64,
    pub samples: u32,
}

/// Scalar summary of a run.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub lyapunov_initial: f64,
    pub lyapunov_final: f64,
    pub steps: u64,
    pub wall_seconds: f64,
    pub u1_min: f64,
    pub u1_max: f64,
    pub u2_min: f64,
    pub u2_max: f64,
    pub lab_check: Option<LabCheck>,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "lyapunov_initial: {}", self.lyapunov_initial)?;
        writeln!(f, "lyapunov_final: {}", self.lyapunov_final)?;
        writeln!(f, "steps: {}", self.steps)?;
        writeln!(f, "wall_seconds: {:.3}", self.wall_seconds)?;
        writeln!(f, "u1_min: {}", self.u1_min)?;
        writeln!(f, "u1_max: {}", self.u1_max)?;
        writeln!(f, "u2_min: {}", self.u2_min)?;
        write!(f, "u2_max: {}", self.u2_max)?;
        if let Some(lc) = &self.lab_check {
            writeln!(f)?;
            writeln!(f, "lab_check_samples: {}", lc.samples)?;
            writeln!(f, "lab_check_max_lab_vs_m1: {:e}", lc.max_lab_vs_m1)?;
            write!(f, "lab_check_max_m1_vs_n: {:e}", lc.max_m1_vs_n)?;
        }
        Ok(())
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<TrajectoryRecord>,
    /// Lab-frame profile at t = 0 (the initial condition).
    pub initial_lab: SpinProfile,
    /// Lab-frame profile at t = Tf (a 2kT instant, so equal to M1).
    pub final_lab: SpinProfile,
    /// N-frame state at t = Tf.
    pub final_n: SpinProfile,
    pub summary: RunSummary,
}

/// N = R exp(sigma w S) M1, node-wise.
pub fn to_n_frame(m1: &SpinProfile, rotation: &RotationField, sigma: f64) -> Result<SpinProfile> {
    if m1.grid() != rotation.grid() {
        return Err(Error::GridMismatch);
    }
    let values = m1
        .values()
        .iter()
        .zip(rotation.grid().nodes())
        .zip(rotation.mats())
        .map(|((&v, &w), r)| r.mul_vec(exp_s_apply(sigma * w, v)))
        .collect();
    SpinProfile::from_values(m1.grid().clone(), values)
}

/// Inverse of [`to_n_frame`]: M1 = exp(-sigma w S) R^T N.
pub fn from_n_frame(n: &SpinProfile, rotation: &RotationField, sigma: f64) -> Result<SpinProfile> {
    if n.grid() != rotation.grid() {
        return Err(Error::GridMismatch);
    }
    let values = n
        .values()
        .iter()
        .zip(rotation.grid().nodes())
        .zip(rotation.mats())
        .map(|((&v, &w), r)| exp_s_apply(-sigma * w, r.transpose().mul_vec(v)))
        .collect();
    SpinProfile::from_values(n.grid().clone(), values)
}

/// M = P(t) M1 with P = diag(1, eps, eps). For eps = +1 the input is
/// returned bit-for-bit (M and M1 coincide on [2kT, (2k+1)T]).
pub fn reconstruct_lab(m1: &SpinProfile, epsilon: f64) -> SpinProfile {
    if epsilon > 0.0 {
        return m1.clone();
    }
    let values = m1
        .values()
        .iter()
        .map(|v| Vec3::new(v.x, -v.y, -v.z))
        .collect();
    SpinProfile::from_values(m1.grid().clone(), values).expect("same grid")
}

/// One explicit Euler step with per-node renormalization:
/// `v <- normalize(v + h * w(i) ^ v)`. The renormalization failure mode
/// (zero vector) aborts with the offending step and node.
pub fn euler_rotate(
    values: &mut [Vec3],
    axis: impl Fn(usize) -> Vec3,
    h: f64,
    step: u64,
) -> Result<()> {
    for (i, v) in values.iter_mut().enumerate() {
        let next = *v + h * axis(i).wedge(*v);
        *v = next
            .renormalized()
            .map_err(|_| Error::DegenerateState { step, node: i })?;
    }
    Ok(())
}

/// Golden-path step: Euler on dN/dt = u1 (F e1) ^ N + u2 (F e2) ^ N.
pub fn step_n_frame(
    state: &mut SpinProfile,
    frame: &FrameField,
    u: (f64, f64),
    h: f64,
    step: u64,
) -> Result<()> {
    let f = frame.f_mats();
    euler_rotate(
        state.values_mut(),
        |i| f[i].column(0) * u.0 + f[i].column(1) * u.1,
        h,
        step,
    )
}

/// M1-frame step: Euler on dM1/dt = [u1 e1 + u2 e2 + eps(t) w e3] ^ M1.
pub fn step_m1_frame(
    state: &mut SpinProfile,
    u: (f64, f64),
    epsilon: f64,
    h: f64,
    step: u64,
) -> Result<()> {
    let (grid, values) = state.split_mut();
    let nodes = grid.nodes();
    euler_rotate(values, |i| Vec3::new(u.0, u.1, epsilon * nodes[i]), h, step)
}

/// Lab-frame step: Euler on dM/dt = [u1 e1 + eps u2 e2 + w e3] ^ M with
/// the smooth lab controls; impulses are applied separately.
pub fn step_lab_frame(
    state: &mut SpinProfile,
    lab_u: (f64, f64),
    h: f64,
    step: u64,
) -> Result<()> {
    let (grid, values) = state.split_mut();
    let nodes = grid.nodes();
    euler_rotate(values, |i| Vec3::new(lab_u.0, lab_u.1, nodes[i]), h, step)
}

/// Instantaneous pi-rotation about e1 at every node (the impulse-train
/// kick at t = kT).
pub fn apply_pi_impulse(state: &mut SpinProfile) {
    let rot = rot_about_e1(std::f64::consts::PI);
    for v in state.values_mut() {
        *v = rot.mul_vec(*v);
    }
}

/// Runs the closed loop from t = 0 to t = periods * T.
pub fn run(config: &SimConfig) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let clock = ControlClock::new(config.period)?;
    let rotation = config.rotation_field()?;
    let h = config.step_size();
    let spp = config.steps_per_period as u64;
    let total = config.total_steps();
    let stride = config.record_stride as u64;
    let minus_e3 = SpinProfile::constant(config.grid.clone(), -Vec3::E3);

    let mut n_state = to_n_frame(&config.m0, &rotation, 0.0)?;
    let mut cross = if config.lab_frame_check {
        Some((config.m0.clone(), config.m0.clone(), LabCheck::default()))
    } else {
        None
    };

    let mut records = Vec::with_capacity((total / stride + 2) as usize);
    let (mut u1_min, mut u1_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut u2_min, mut u2_max) = (f64::INFINITY, f64::NEG_INFINITY);

    for step in 0..=total {
        let t = step as f64 * h;
        let sigma = clock.sigma_at_step(step, spp);
        let epsilon = clock.epsilon_at_step(step, spp);
        let frame = frame_at_sigma(&rotation, sigma, t)?;
        let u = feedback(&n_state, &frame)?;
        u1_min = u1_min.min(u.0);
        u1_max = u1_max.max(u.0);
        u2_min = u2_min.min(u.1);
        u2_max = u2_max.max(u.1);

        let on_full_cycle = step % (2 * spp) == 0;
        if step % stride == 0 || step == total {
            let linf = if on_full_cycle {
                // sigma = 0 and P = I here, so M = M1 = R^T N
                let lab = from_n_frame(&n_state, &rotation, sigma)?;
                Some(lab.linf_distance(&config.mf)?)
            } else {
                None
            };
            records.push(TrajectoryRecord {
                t,
                lyapunov: lyapunov(&n_state)?,
                u1: u.0,
                u2: u.1,
                linf_to_target: linf,
                l2_to_minus_e3: norms(&n_state, &minus_e3)?.l2,
            });
        }

        if let Some((m1_state, lab_state, check)) = cross.as_mut() {
            if on_full_cycle {
                // P(2kT) = I: the lab and M1 profiles sample the same frame
                check.max_lab_vs_m1 = check.max_lab_vs_m1.max(lab_state.linf_distance(m1_state)?);
                let n_as_m1 = from_n_frame(&n_state, &rotation, sigma)?;
                check.max_m1_vs_n = check.max_m1_vs_n.max(n_as_m1.linf_distance(m1_state)?);
                check.samples += 1;
            }
        }

        if step == total {
            break;
        }

        step_n_frame(&mut n_state, &frame, u, h, step)?;

        if let Some((m1_state, lab_state, _)) = cross.as_mut() {
            // Each path computes its own feedback from its own state.
            let n_of_m1 = to_n_frame(m1_state, &rotation, sigma)?;
            let u_m1 = feedback(&n_of_m1, &frame)?;
            step_m1_frame(m1_state, u_m1, epsilon, h, step)?;

            let m1_of_lab = reconstruct_lab(lab_state, epsilon);
            let n_of_lab = to_n_frame(&m1_of_lab, &rotation, sigma)?;
            let u_lab = feedback(&n_of_lab, &frame)?;
            step_lab_frame(lab_state, (u_lab.0, epsilon * u_lab.1), h, step)?;
            // impulse fires after completing the step that lands on kT
            if (step + 1) % spp == 0 {
                apply_pi_impulse(lab_state);
            }
        }
    }

    let final_sigma = clock.sigma_at_step(total, spp);
    let final_lab = from_n_frame(&n_state, &rotation, final_sigma)?;
    let summary = RunSummary {
        lyapunov_initial: records.first().map(|r| r.lyapunov).unwrap_or(f64::NAN),
        lyapunov_final: records.last().map(|r| r.lyapunov).unwrap_or(f64::NAN),
        steps: total,
        wall_seconds: start.elapsed().as_secs_f64(),
        u1_min,
        u1_max,
        u2_min,
        u2_max,
        lab_check: cross.map(|(_, _, check)| check),
    };
    Ok(RunResult {
        records,
        initial_lab: config.m0.clone(),
        final_lab,
        final_n: n_state,
        summary,
    })
}
