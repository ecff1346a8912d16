//! Built-in experiment setups.

use crate::error::Result;
use crate::geometry::{Mat3, Vec3};
use crate::grid::{OmegaGrid, SpinProfile};
use crate::rotation_field::RotationField;
use crate::simulator::{RotationMethod, SimConfig};

/// A named, fully specified run setup.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub config: SimConfig,
}

/// Initial profile of the published experiment:
/// x0 = 0, y0 = -sqrt(1 - z0^2),
/// z0 = -cos(pi/8) + 0.05 (1 - cos(pi/8) cos(w pi/2)).
pub fn paper_initial_profile(grid: &OmegaGrid) -> SpinProfile {
    let c8 = (std::f64::consts::PI / 8.0).cos();
    SpinProfile::from_fn(grid.clone(), |w| {
        let z = -c8 + 0.05 * (1.0 - c8 * (w * std::f64::consts::FRAC_PI_2).cos());
        Vec3::new(0.0, -(1.0 - z * z).sqrt(), z)
    })
}

/// Target profile of the published experiment:
/// x_f = -sqrt(1 - z_f^2), y_f = 0,
/// z_f = -cos(pi/16) + 0.1 (1 - cos(pi/16) sin(w pi/4)).
pub fn paper_target_profile(grid: &OmegaGrid) -> SpinProfile {
    let c16 = (std::f64::consts::PI / 16.0).cos();
    SpinProfile::from_fn(grid.clone(), |w| {
        let z = -c16 + 0.1 * (1.0 - c16 * (w * std::f64::consts::FRAC_PI_4).sin());
        Vec3::new(-(1.0 - z * z).sqrt(), 0.0, z)
    })
}

/// The closed-loop experiment of the source study: w in [0, 1], N = 100
/// cells, T = 2 pi, h = T/1000, final time 20 T, both profiles in the
/// south hemisphere.
pub fn paper_scenario() -> Result<Scenario> {
    let grid = OmegaGrid::new(0.0, 1.0, 100)?;
    let m0 = paper_initial_profile(&grid);
    let mf = paper_target_profile(&grid);
    let period = SimConfig::default_period(&grid);
    Ok(Scenario {
        name: "paper",
        config: SimConfig {
            grid,
            period,
            steps_per_period: 1000,
            periods: 20,
            record_stride: 10,
            m0,
            mf,
            rotation_override: None,
            method: RotationMethod::Sweep,
            lab_frame_check: false,
        },
    })
}

/// The hand-picked constant rotation sending e1 to -e3, used by the
/// equator counterexample.
pub const EQUATOR_ROTATION: Mat3 = Mat3([
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0],
    [-1.0, 0.0, 0.0],
]);

/// Counterexample for a target on the equator: Mf = e1 violates the
/// hemisphere condition <Mf, e3> != 0. With the constant rotation
/// override and N0 a constant unit vector in Span(e2, e3), the feedback
/// vanishes identically and the Lyapunov value never moves, so the
/// trajectory stays at a fixed distance from the target.
pub fn equator_scenario() -> Result<Scenario> {
    let grid = OmegaGrid::new(0.0, 1.0, 100)?;
    let mf = SpinProfile::constant(grid.clone(), Vec3::E1);
    let rotation = RotationField::constant(grid.clone(), EQUATOR_ROTATION)?;
    // N0 = (0, 1/sqrt2, -1/sqrt2); M0 = R^T N0
    let s = 0.5_f64.sqrt();
    let n0 = Vec3::new(0.0, s, -s);
    let m0 = SpinProfile::constant(grid.clone(), EQUATOR_ROTATION.transpose().mul_vec(n0));
    let period = SimConfig::default_period(&grid);
    Ok(Scenario {
        name: "equator",
        config: SimConfig {
            grid,
            period,
            steps_per_period: 1000,
            periods: 20,
            record_stride: 10,
            m0,
            mf,
            rotation_override: Some(rotation),
            method: RotationMethod::Sweep,
            lab_frame_check: false,
        },
    })
}
