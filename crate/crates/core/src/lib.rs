//! Lyapunov-feedback stabilization of an ensemble of half-spins.
//!
//! An ensemble of non-interacting spins, one per Larmor frequency omega in
//! a band, obeys the Bloch equation under two shared transverse controls.
//! An impulse-train/rotating-frame change of variables turns the dynamics
//! driftless, a frequency-dependent rotation field flattens an arbitrary
//! target profile onto the south pole, and an explicit feedback descends
//! the H1 Lyapunov functional of the flattened state. This crate builds
//! each piece, integrates the closed loop, and verifies the structural
//! identities (Lyapunov decay, frame and impulse equivalences, the
//! equator counterexample) numerically.
//!
//! ```
//! use bloch_ensemble::{paper_scenario, run};
//!
//! let mut config = paper_scenario().unwrap().config;
//! config.periods = 2; // shorten the 20-period experiment
//! let result = run(&config).unwrap();
//! assert!(result.summary.lyapunov_final < 0.5 * result.summary.lyapunov_initial);
//! ```

pub mod control;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod rotation_field;
pub mod scenarios;
pub mod simulator;

pub use control::{feedback, frame_at, frame_at_sigma, lab_controls, ControlClock, FrameField, LabControls};
pub use error::{Error, Result};
pub use geometry::{exp_s, rot_about_e1, skew, Mat3, Vec3};
pub use grid::{h1_norm, lyapunov, norms, OmegaGrid, ProfileNorms, SpinProfile};
pub use rotation_field::{build_ode, build_sweep, FieldReport, RotationField};
pub use scenarios::{equator_scenario, paper_scenario, Scenario};
pub use simulator::{
    reconstruct_lab, run, to_n_frame, from_n_frame, RotationMethod, RunResult, RunSummary,
    SimConfig, TrajectoryRecord,
};
