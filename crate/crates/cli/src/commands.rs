//! Command implementations.

use std::fs;
use std::path::{Path, PathBuf};

use bloch_ensemble::error::{Error, Result};
use bloch_ensemble::grid::{lyapunov, OmegaGrid, SpinProfile};
use bloch_ensemble::io;
use bloch_ensemble::rotation_field::{build_ode, build_sweep, RotationField};
use bloch_ensemble::scenarios::{
    equator_scenario, paper_initial_profile, paper_scenario, paper_target_profile,
};
use bloch_ensemble::simulator::{run, RotationMethod, RunResult, SimConfig};
use bloch_ensemble::to_n_frame;

use crate::config::{self, FileConfig, ScenarioKind};

/// Source of the run configuration: a file or a builtin scenario flag.
pub enum ConfigSource {
    File(PathBuf),
    Builtin(ScenarioKind),
}

pub struct RunOptions {
    pub source: ConfigSource,
    pub out_dir: Option<PathBuf>,
    pub stride: Option<u32>,
    pub method: Option<RotationMethod>,
    pub lab_frame_check: bool,
}

struct ResolvedRun {
    sim: SimConfig,
    kind: ScenarioKind,
    out_dir: PathBuf,
    file_config: FileConfig,
}

fn resolve(opts: &RunOptions) -> Result<ResolvedRun> {
    let (mut file_config, base_dir) = match &opts.source {
        ConfigSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            (config::parse(&text, path)?, base)
        }
        ConfigSource::Builtin(kind) => (
            FileConfig {
                scenario: *kind,
                ..FileConfig::default()
            },
            PathBuf::from("."),
        ),
    };
    if let Some(stride) = opts.stride {
        file_config.record_stride = Some(stride);
    }
    if let Some(method) = opts.method {
        file_config.method = method;
    }
    if opts.lab_frame_check {
        file_config.lab_frame_check = true;
    }
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| file_config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let sim = config::to_sim_config(&file_config, &base_dir)?;
    Ok(ResolvedRun {
        sim,
        kind: file_config.scenario,
        out_dir,
        file_config,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_run_outputs(dir: &Path, result: &RunResult) -> Result<()> {
    io::write_trajectory(&dir.join("trajectory.csv"), &result.records)?;
    io::write_profile(&dir.join("initial_profile.csv"), &result.initial_lab)?;
    io::write_profile(&dir.join("final_profile.csv"), &result.final_lab)?;
    io::write_summary(&dir.join("summary.txt"), &result.summary)?;
    Ok(())
}

pub fn cmd_simulate(opts: &RunOptions) -> Result<()> {
    let resolved = resolve(opts)?;
    ensure_dir(&resolved.out_dir)?;
    let result = run(&resolved.sim)?;
    write_run_outputs(&resolved.out_dir, &result)?;
    // echo the resolved configuration for reproducibility
    let path = resolved.out_dir.join("config.txt");
    fs::write(&path, config::serialize(&resolved.file_config))
        .map_err(|source| Error::Io { path, source })?;
    println!("{}", result.summary);
    println!("records: {}", result.records.len());
    println!("outputs: {}", resolved.out_dir.display());
    Ok(())
}

/// Rebuilds the scenario on a once-refined grid. Builtin scenarios
/// regenerate their profiles from the defining formulas; custom profiles
/// are interpolated (normalized chord midpoints), which is second-order
/// accurate and adequate for a sensitivity study.
fn refine_grid_config(sim: &SimConfig, kind: ScenarioKind) -> Result<SimConfig> {
    let fine_grid = sim.grid.refined();
    let mut fine = sim.clone();
    match kind {
        ScenarioKind::Paper => {
            fine.m0 = paper_initial_profile(&fine_grid);
            fine.mf = paper_target_profile(&fine_grid);
            fine.rotation_override = None;
        }
        ScenarioKind::Equator => {
            let template = equator_scenario()?.config;
            fine.m0 = SpinProfile::constant(fine_grid.clone(), template.m0.values()[0]);
            fine.mf = SpinProfile::constant(fine_grid.clone(), template.mf.values()[0]);
            let mat = *template.rotation_override.expect("equator override").mat(0);
            fine.rotation_override = Some(RotationField::constant(fine_grid.clone(), mat)?);
        }
        ScenarioKind::Custom => {
            fine.m0 = interpolate_profile(&sim.m0, &fine_grid)?;
            fine.mf = interpolate_profile(&sim.mf, &fine_grid)?;
            fine.rotation_override = match &sim.rotation_override {
                Some(r) => Some(interpolate_rotation(r, &fine_grid)?),
                None => None,
            };
        }
    }
    fine.grid = fine_grid;
    Ok(fine)
}

fn interpolate_profile(p: &SpinProfile, fine: &OmegaGrid) -> Result<SpinProfile> {
    let coarse = p.values();
    let mut values = Vec::with_capacity(fine.n_nodes());
    for i in 0..coarse.len() - 1 {
        values.push(coarse[i]);
        values.push(((coarse[i] + coarse[i + 1]) * 0.5).renormalized()?);
    }
    values.push(coarse[coarse.len() - 1]);
    SpinProfile::unit(fine.clone(), values, 1e-6)
}

fn interpolate_rotation(r: &RotationField, fine: &OmegaGrid) -> Result<RotationField> {
    let coarse = r.mats();
    let mut mats = Vec::with_capacity(fine.n_nodes());
    for i in 0..coarse.len() - 1 {
        mats.push(coarse[i]);
        mats.push(coarse[i].add(&coarse[i + 1]).scale(0.5).nearest_rotation());
    }
    mats.push(coarse[coarse.len() - 1]);
    RotationField::new(fine.clone(), mats)
}

pub fn cmd_refine(opts: &RunOptions) -> Result<()> {
    let resolved = resolve(opts)?;
    ensure_dir(&resolved.out_dir)?;
    let base = run(&resolved.sim)?;

    let fine_config = refine_grid_config(&resolved.sim, resolved.kind)?;
    let fine = run(&fine_config)?;
    let mut grid_delta = 0.0_f64;
    for i in 0..resolved.sim.grid.n_nodes() {
        let d = (base.final_lab.values()[i] - fine.final_lab.values()[2 * i]).norm();
        grid_delta = grid_delta.max(d);
    }
    let grid_dl = (fine.summary.lyapunov_final - base.summary.lyapunov_final).abs();

    let mut half_config = resolved.sim.clone();
    half_config.steps_per_period = resolved
        .sim
        .steps_per_period
        .checked_mul(2)
        .ok_or_else(|| Error::InvalidConfig("steps_per_period overflow in step study".into()))?;
    let half = run(&half_config)?;
    let step_delta = base.final_lab.linf_distance(&half.final_lab)?;
    let step_dl = (half.summary.lyapunov_final - base.summary.lyapunov_final).abs();

    let report = format!(
        "cells: {} vs {}\ngrid_delta_linf: {grid_delta:e}\ngrid_delta_lyapunov_final: {grid_dl:e}\n\
         steps_per_period: {} vs {}\nstep_delta_linf: {step_delta:e}\nstep_delta_lyapunov_final: {step_dl:e}\n",
        resolved.sim.grid.n_cells(),
        fine_config.grid.n_cells(),
        resolved.sim.steps_per_period,
        half_config.steps_per_period,
    );
    let path = resolved.out_dir.join("refine.txt");
    fs::write(&path, &report).map_err(|source| Error::Io { path, source })?;
    print!("{report}");
    Ok(())
}

pub fn cmd_rotation_field(target: &Path, method: RotationMethod, out_dir: &Path) -> Result<()> {
    let mf = io::read_profile(target, Some(1e-6))?;
    let field = match method {
        RotationMethod::Sweep => build_sweep(&mf)?,
        RotationMethod::Ode => build_ode(&mf)?,
    };
    let report = field.validate(&mf)?;
    ensure_dir(out_dir)?;
    io::write_rotation_field(&out_dir.join("rotation_field.csv"), &field)?;
    let report_text = format!("method: {method}\n{report}\n");
    let path = out_dir.join("rotation_report.txt");
    fs::write(&path, &report_text).map_err(|source| Error::Io { path, source })?;
    print!("{report_text}");
    Ok(())
}

/// Evaluates the Lyapunov functional of a profile against a target: the
/// target is flattened by its rotation field and the profile mapped into
/// the same frame.
pub fn cmd_lyapunov(profile: &Path, target: &Path, method: RotationMethod) -> Result<()> {
    let m = io::read_profile(profile, Some(1e-6))?;
    let mf = io::read_profile(target, Some(1e-6))?;
    if m.grid() != mf.grid() {
        return Err(Error::GridMismatch);
    }
    let field = match method {
        RotationMethod::Sweep => build_sweep(&mf)?,
        RotationMethod::Ode => build_ode(&mf)?,
    };
    let n = to_n_frame(&m, &field, 0.0)?;
    println!("lyapunov: {}", lyapunov(&n)?);
    Ok(())
}

/// Writes a gnuplot script that plots the CSVs a simulate run leaves in
/// the same directory.
pub fn cmd_plot_script(out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let script = r#"# gnuplot script for bloch-ensemble outputs
set datafile separator ","
set terminal pngcairo size 1200,500
set key autotitle columnhead

set output "lyapunov.png"
set logscale y
set xlabel "t"
set ylabel "L(t)"
plot "trajectory.csv" using 1:2 with lines title "Lyapunov"

unset logscale y
set output "controls.png"
set ylabel "u"
plot "trajectory.csv" using 1:3 with lines title "u1", \
     "trajectory.csv" using 1:4 with lines title "u2"

set output "profiles.png"
set xlabel "omega"
set ylabel "component"
plot "initial_profile.csv" using 1:2 with lines title "x(0)", \
     "initial_profile.csv" using 1:3 with lines title "y(0)", \
     "initial_profile.csv" using 1:4 with lines title "z(0)", \
     "final_profile.csv" using 1:2 with lines dt 2 title "x(Tf)", \
     "final_profile.csv" using 1:3 with lines dt 2 title "y(Tf)", \
     "final_profile.csv" using 1:4 with lines dt 2 title "z(Tf)"
"#;
    let path = out_dir.join("plots.gp");
    fs::write(&path, script).map_err(|source| Error::Io { path: path.clone(), source })?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_version() {
    println!("bloch-ensemble {}", env!("CARGO_PKG_VERSION"));
}

/// Writes the two builtin target/initial profiles, handy for seeding a
/// custom run. Used by tests as well.
pub fn cmd_export_scenario(kind: ScenarioKind, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let sim = match kind {
        ScenarioKind::Paper => paper_scenario()?.config,
        ScenarioKind::Equator => equator_scenario()?.config,
        ScenarioKind::Custom => {
            return Err(Error::InvalidConfig(
                "only builtin scenarios can be exported".into(),
            ))
        }
    };
    io::write_profile(&out_dir.join("m0.csv"), &sim.m0)?;
    io::write_profile(&out_dir.join("mf.csv"), &sim.mf)?;
    if let Some(r) = &sim.rotation_override {
        io::write_rotation_field(&out_dir.join("rotation.csv"), r)?;
    }
    println!("wrote scenario {} profiles to {}", kind.name(), out_dir.display());
    Ok(())
}
