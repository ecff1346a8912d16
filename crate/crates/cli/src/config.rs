//! Key-value run configuration files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Builtin scenarios pin every physical parameter, so
//! grid, timing and profile keys are rejected alongside them; a custom
//! scenario must spell all of them out. Parsing then serializing then
//! parsing again yields an identical configuration.
//!
//! ```text
//! scenario = custom
//! omega_min = 0.0
//! omega_max = 1.0
//! cells = 100
//! # period defaults to 2*pi / (omega_max - omega_min)
//! steps_per_period = 1000        # or: step = <h>, which must divide period
//! periods = 20
//! record_stride = 10
//! method = sweep                 # or: ode
//! lab_frame_check = false
//! m0 = initial.csv
//! mf = target.csv
//! rotation = rotation.csv        # optional override
//! out_dir = out
//! ```

use std::path::{Path, PathBuf};

use bloch_ensemble::error::{Error, Result};
use bloch_ensemble::scenarios::{equator_scenario, paper_scenario};
use bloch_ensemble::simulator::{RotationMethod, SimConfig};
use bloch_ensemble::OmegaGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Paper,
    Equator,
    Custom,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Paper => "paper",
            ScenarioKind::Equator => "equator",
            ScenarioKind::Custom => "custom",
        }
    }
}

/// Parsed configuration file, one field per schema key.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub scenario: ScenarioKind,
    pub method: RotationMethod,
    pub lab_frame_check: bool,
    pub record_stride: Option<u32>,
    pub out_dir: Option<PathBuf>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub cells: Option<u32>,
    pub period: Option<f64>,
    pub steps_per_period: Option<u32>,
    pub step: Option<f64>,
    pub periods: Option<u32>,
    pub m0: Option<PathBuf>,
    pub mf: Option<PathBuf>,
    pub rotation: Option<PathBuf>,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            scenario: ScenarioKind::Paper,
            method: RotationMethod::Sweep,
            lab_frame_check: false,
            record_stride: None,
            out_dir: None,
            omega_min: None,
            omega_max: None,
            cells: None,
            period: None,
            steps_per_period: None,
            step: None,
            periods: None,
            m0: None,
            mf: None,
            rotation: None,
        }
    }
}

fn bad(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn parse(text: &str, path: &Path) -> Result<FileConfig> {
    let mut config = FileConfig::default();
    let mut seen: Vec<String> = Vec::new();
    let mut scenario_set = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(path, line_no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(bad(path, line_no, format!("duplicate key {key:?}")));
        }
        seen.push(key.to_string());
        let parse_f64 = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| bad(path, line_no, format!("{key}: not a number: {value:?}")))
        };
        let parse_u32 = || -> Result<u32> {
            value
                .parse()
                .map_err(|_| bad(path, line_no, format!("{key}: not an integer: {value:?}")))
        };
        match key {
            "scenario" => {
                config.scenario = match value {
                    "paper" => ScenarioKind::Paper,
                    "equator" => ScenarioKind::Equator,
                    "custom" => ScenarioKind::Custom,
                    other => {
                        return Err(bad(
                            path,
                            line_no,
                            format!("scenario must be paper, equator or custom, got {other:?}"),
                        ))
                    }
                };
                scenario_set = true;
            }
            "method" => {
                config.method = match value {
                    "sweep" => RotationMethod::Sweep,
                    "ode" => RotationMethod::Ode,
                    other => {
                        return Err(bad(
                            path,
                            line_no,
                            format!("method must be sweep or ode, got {other:?}"),
                        ))
                    }
                };
            }
            "lab_frame_check" => {
                config.lab_frame_check = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(bad(
                            path,
                            line_no,
                            format!("lab_frame_check must be true or false, got {other:?}"),
                        ))
                    }
                };
            }
            "record_stride" => config.record_stride = Some(parse_u32()?),
            "out_dir" => config.out_dir = Some(PathBuf::from(value)),
            "omega_min" => config.omega_min = Some(parse_f64()?),
            "omega_max" => config.omega_max = Some(parse_f64()?),
            "cells" => config.cells = Some(parse_u32()?),
            "period" => config.period = Some(parse_f64()?),
            "steps_per_period" => config.steps_per_period = Some(parse_u32()?),
            "step" => config.step = Some(parse_f64()?),
            "periods" => config.periods = Some(parse_u32()?),
            "m0" => config.m0 = Some(PathBuf::from(value)),
            "mf" => config.mf = Some(PathBuf::from(value)),
            "rotation" => config.rotation = Some(PathBuf::from(value)),
            other => return Err(bad(path, line_no, format!("unknown key {other:?}"))),
        }
    }
    if !scenario_set {
        return Err(bad(path, 1, "missing required key \"scenario\""));
    }
    validate_keys(&config, path)?;
    Ok(config)
}

/// Builtin scenarios pin physics; only output/method knobs may accompany
/// them.
fn validate_keys(config: &FileConfig, path: &Path) -> Result<()> {
    if config.scenario != ScenarioKind::Custom {
        let pinned: [(&str, bool); 10] = [
            ("omega_min", config.omega_min.is_some()),
            ("omega_max", config.omega_max.is_some()),
            ("cells", config.cells.is_some()),
            ("period", config.period.is_some()),
            ("steps_per_period", config.steps_per_period.is_some()),
            ("step", config.step.is_some()),
            ("periods", config.periods.is_some()),
            ("m0", config.m0.is_some()),
            ("mf", config.mf.is_some()),
            ("rotation", config.rotation.is_some()),
        ];
        let offending: Vec<&str> = pinned.iter().filter(|(_, s)| *s).map(|(k, _)| *k).collect();
        if !offending.is_empty() {
            return Err(bad(
                path,
                1,
                format!(
                    "scenario = {} pins the physical parameters; remove: {}",
                    config.scenario.name(),
                    offending.join(", ")
                ),
            ));
        }
    } else {
        let required: [(&str, bool); 6] = [
            ("omega_min", config.omega_min.is_some()),
            ("omega_max", config.omega_max.is_some()),
            ("cells", config.cells.is_some()),
            ("periods", config.periods.is_some()),
            ("m0", config.m0.is_some()),
            ("mf", config.mf.is_some()),
        ];
        let missing: Vec<&str> = required.iter().filter(|(_, s)| !*s).map(|(k, _)| *k).collect();
        if !missing.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "custom scenario missing keys: {}",
                missing.join(", ")
            )));
        }
        if config.steps_per_period.is_none() && config.step.is_none() {
            return Err(Error::InvalidConfig(
                "custom scenario needs steps_per_period or step".into(),
            ));
        }
        if config.steps_per_period.is_some() && config.step.is_some() {
            return Err(Error::InvalidConfig(
                "give steps_per_period or step, not both".into(),
            ));
        }
    }
    Ok(())
}

/// Canonical serialization; `parse(serialize(c))` equals `c`.
pub fn serialize(config: &FileConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario = {}\n", config.scenario.name()));
    out.push_str(&format!("method = {}\n", config.method));
    out.push_str(&format!("lab_frame_check = {}\n", config.lab_frame_check));
    if let Some(v) = config.record_stride {
        out.push_str(&format!("record_stride = {v}\n"));
    }
    if let Some(v) = &config.out_dir {
        out.push_str(&format!("out_dir = {}\n", v.display()));
    }
    if let Some(v) = config.omega_min {
        out.push_str(&format!("omega_min = {v}\n"));
    }
    if let Some(v) = config.omega_max {
        out.push_str(&format!("omega_max = {v}\n"));
    }
    if let Some(v) = config.cells {
        out.push_str(&format!("cells = {v}\n"));
    }
    if let Some(v) = config.period {
        out.push_str(&format!("period = {v}\n"));
    }
    if let Some(v) = config.steps_per_period {
        out.push_str(&format!("steps_per_period = {v}\n"));
    }
    if let Some(v) = config.step {
        out.push_str(&format!("step = {v}\n"));
    }
    if let Some(v) = config.periods {
        out.push_str(&format!("periods = {v}\n"));
    }
    if let Some(v) = &config.m0 {
        out.push_str(&format!("m0 = {}\n", v.display()));
    }
    if let Some(v) = &config.mf {
        out.push_str(&format!("mf = {}\n", v.display()));
    }
    if let Some(v) = &config.rotation {
        out.push_str(&format!("rotation = {}\n", v.display()));
    }
    out
}

/// Resolves a file configuration into a runnable [`SimConfig`], loading
/// profile files for custom scenarios. Relative profile paths are taken
/// relative to `base_dir` (the config file's directory).
pub fn to_sim_config(config: &FileConfig, base_dir: &Path) -> Result<SimConfig> {
    let mut sim = match config.scenario {
        ScenarioKind::Paper => paper_scenario()?.config,
        ScenarioKind::Equator => equator_scenario()?.config,
        ScenarioKind::Custom => custom_sim_config(config, base_dir)?,
    };
    sim.method = config.method;
    sim.lab_frame_check = config.lab_frame_check;
    if let Some(stride) = config.record_stride {
        sim.record_stride = stride;
    }
    sim.validate()?;
    Ok(sim)
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

fn custom_sim_config(config: &FileConfig, base_dir: &Path) -> Result<SimConfig> {
    let grid = OmegaGrid::new(
        config.omega_min.expect("validated"),
        config.omega_max.expect("validated"),
        config.cells.expect("validated") as usize,
    )?;
    let default_period = SimConfig::default_period(&grid);
    let period = match config.period {
        Some(p) => {
            if (p - default_period).abs() > 1e-12 * default_period {
                eprintln!(
                    "warning: period {p} overrides the band coupling 2*pi/(omega_max - omega_min) = {default_period}"
                );
            }
            p
        }
        None => default_period,
    };
    let steps_per_period = match (config.steps_per_period, config.step) {
        (Some(n), None) => n,
        (None, Some(h)) => {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::InvalidConfig("step must be positive".into()));
            }
            let ratio = period / h;
            let rounded = ratio.round();
            if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.abs() {
                return Err(Error::InvalidConfig(format!(
                    "step must divide period exactly: period/step = {ratio}"
                )));
            }
            rounded as u32
        }
        _ => unreachable!("validated"),
    };
    let m0 = bloch_ensemble::io::read_profile(
        &resolve(base_dir, config.m0.as_ref().expect("validated")),
        Some(1e-6),
    )?;
    let mf = bloch_ensemble::io::read_profile(
        &resolve(base_dir, config.mf.as_ref().expect("validated")),
        Some(1e-6),
    )?;
    let rotation_override = match &config.rotation {
        Some(p) => Some(bloch_ensemble::io::read_rotation_field(&resolve(base_dir, p))?),
        None => None,
    };
    Ok(SimConfig {
        grid,
        period,
        steps_per_period,
        periods: config.periods.expect("validated"),
        record_stride: config.record_stride.unwrap_or(10),
        m0,
        mf,
        rotation_override,
        method: config.method,
        lab_frame_check: config.lab_frame_check,
    })
}
