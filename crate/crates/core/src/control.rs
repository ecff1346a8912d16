//! Time-periodic frame functions, the moving frame F(t, omega), and the
//! Lyapunov feedback.
//!
//! The impulse train flips the sense of the free precession every period,
//! which the frame change encodes as the alternating sign
//! `epsilon(t) = (-1)^floor(t/T)` and its integral, the triangle wave
//! `sigma(t)`. Both are evaluated in closed form; the simulator addresses
//! them by integer step index so that period boundaries are exact.

use crate::error::{Error, Result};
use crate::geometry::{exp_s, Mat3, Vec3, GENERATOR_S};
use crate::grid::SpinProfile;
use crate::rotation_field::RotationField;

/// Period bookkeeping for the impulse train.
#[derive(Debug, Clone, Copy)]
pub struct ControlClock {
    period: f64,
}

impl ControlClock {
    pub fn new(period: f64) -> Result<ControlClock> {
        if !period.is_finite() || period <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "period must be positive, got {period}"
            )));
        }
        Ok(ControlClock { period })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Alternating sign: +1 on [2kT, (2k+1)T), -1 on [(2k+1)T, (2k+2)T).
    pub fn epsilon(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        if (t / self.period).floor() as i64 % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Integral of epsilon: the triangle wave. With tau = t mod 2T this is
    /// tau on [0, T] and 2T - tau on [T, 2T]; in particular sigma(2kT) = 0.
    /// Closed form, never numerical quadrature: exactness at period
    /// boundaries is an asserted invariant.
    pub fn sigma(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let two_t = 2.0 * self.period;
        let tau = t.rem_euclid(two_t);
        if tau <= self.period {
            tau
        } else {
            two_t - tau
        }
    }

    /// `epsilon` at step `n` of a run with `steps_per_period` steps per
    /// period. Integer arithmetic: exact at boundaries.
    pub fn epsilon_at_step(&self, step: u64, steps_per_period: u64) -> f64 {
        if (step / steps_per_period).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `sigma` at step `n`; returns exactly 0.0 whenever `n` is a multiple
    /// of `2 * steps_per_period`.
    pub fn sigma_at_step(&self, step: u64, steps_per_period: u64) -> f64 {
        let h = self.period / steps_per_period as f64;
        let m = step % (2 * steps_per_period);
        if m <= steps_per_period {
            m as f64 * h
        } else {
            (2 * steps_per_period - m) as f64 * h
        }
    }
}

/// The moving frame F(t, w) = R(w) exp(sigma(t) w S) and its w-derivative,
/// sampled on the grid at one instant.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub at_time: f64,
    pub sigma: f64,
    f_mats: Vec<Mat3>,
    df_mats: Vec<Mat3>,
}

impl FrameField {
    pub fn f_mats(&self) -> &[Mat3] {
        &self.f_mats
    }

    pub fn df_mats(&self) -> &[Mat3] {
        &self.df_mats
    }

    pub fn len(&self) -> usize {
        self.f_mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_mats.is_empty()
    }
}

/// Frame at time `t`; requires the rotation field to carry derivatives.
pub fn frame_at(clock: &ControlClock, t: f64, rotation: &RotationField) -> Result<FrameField> {
    frame_at_sigma(rotation, clock.sigma(t), t)
}

/// Frame for a given `sigma` value (the simulator computes sigma from the
/// step index so period boundaries are exact).
///
/// F = R exp(sigma w S); dF/dw = R' exp(sigma w S) + sigma R S exp(sigma w S).
pub fn frame_at_sigma(rotation: &RotationField, sigma: f64, at_time: f64) -> Result<FrameField> {
    let dmats = rotation.dmats().ok_or(Error::MissingDerivativeField)?;
    let nodes = rotation.grid().nodes();
    let mut f_mats = Vec::with_capacity(nodes.len());
    let mut df_mats = Vec::with_capacity(nodes.len());
    for (i, &w) in nodes.iter().enumerate() {
        let e = exp_s(sigma * w);
        let r = rotation.mat(i);
        f_mats.push(r.mul(&e));
        let df = dmats[i].mul(&e).add(&r.mul(&GENERATOR_S.mul(&e)).scale(sigma));
        df_mats.push(df);
    }
    Ok(FrameField {
        at_time,
        sigma,
        f_mats,
        df_mats,
    })
}

/// Feedback laws u_i = -H_i[t, N] with
///
/// `H_i = integral( <N', (dF/dw e_i) ^ N> + <e3, (F e_i) ^ N> ) dw`.
///
/// Both terms use the same basis vector e_i; that is what makes
/// dL/dt = -(u1^2 + u2^2) an identity.
pub fn feedback(n_prof: &SpinProfile, frame: &FrameField) -> Result<(f64, f64)> {
    if frame.len() != n_prof.grid().n_nodes() {
        return Err(Error::GridMismatch);
    }
    let grid = n_prof.grid();
    let deriv = n_prof.derivative()?;
    let n_nodes = grid.n_nodes();
    let mut integrand1 = Vec::with_capacity(n_nodes);
    let mut integrand2 = Vec::with_capacity(n_nodes);
    let frames = frame.f_mats.iter().zip(&frame.df_mats);
    for ((&n, &np), (f, df)) in n_prof.values().iter().zip(&deriv).zip(frames) {
        integrand1.push(np.dot(df.column(0).wedge(n)) + Vec3::E3.dot(f.column(0).wedge(n)));
        integrand2.push(np.dot(df.column(1).wedge(n)) + Vec3::E3.dot(f.column(1).wedge(n)));
    }
    Ok((-grid.integrate(&integrand1)?, -grid.integrate(&integrand2)?))
}

/// Lab-frame view of the controls at time `t`: the smooth parts of the
/// impulse-train control, plus whether a pi-impulse about e1 fires at this
/// exact instant (t a positive multiple of T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabControls {
    pub u1: f64,
    pub u2: f64,
    pub impulse_pending: bool,
}

pub fn lab_controls(clock: &ControlClock, t: f64, u1: f64, u2: f64) -> LabControls {
    LabControls {
        u1,
        u2: clock.epsilon(t) * u2,
        impulse_pending: t > 0.0 && t.rem_euclid(clock.period) == 0.0,
    }
}
