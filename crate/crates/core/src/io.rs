//! Plain-text CSV formats for profiles, rotation fields and trajectories,
//! and the key-value run summary.
//!
//! Floats are written in Rust's shortest round-trip form, which parses
//! back to the identical bit pattern, so a write/read cycle is lossless.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::grid::{OmegaGrid, SpinProfile};
use crate::rotation_field::RotationField;
use crate::simulator::{RunSummary, TrajectoryRecord};

pub const PROFILE_HEADER: &str = "omega,x,y,z";
pub const ROTATION_HEADER: &str = "omega,r11,r12,r13,r21,r22,r23,r31,r32,r33";
pub const TRAJECTORY_HEADER: &str = "t,lyapunov,u1,u2,linf_to_target";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("not a number: {field:?}")))
}

/// Rebuilds the regular grid from the omega column, checking regularity.
fn grid_from_nodes(path: &Path, nodes: &[f64]) -> Result<OmegaGrid> {
    if nodes.len() < 2 {
        return Err(parse_err(path, 1, "need at least two nodes"));
    }
    let lo = nodes[0];
    let hi = nodes[nodes.len() - 1];
    let grid = OmegaGrid::new(lo, hi, nodes.len() - 1)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let tol = 1e-9 * grid.span().abs().max(1.0);
    for (i, (&a, &b)) in nodes.iter().zip(grid.nodes()).enumerate() {
        if (a - b).abs() > tol {
            return Err(parse_err(
                path,
                i + 2,
                format!("irregular grid: node {a} expected near {b}"),
            ));
        }
    }
    Ok(grid)
}

pub fn write_profile(path: &Path, profile: &SpinProfile) -> Result<()> {
    let mut out = String::with_capacity(profile.values().len() * 64);
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for (w, v) in profile.grid().nodes().iter().zip(profile.values()) {
        out.push_str(&format!("{w},{},{},{}\n", v.x, v.y, v.z));
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Reads a profile; when `on_sphere_tol` is given, every node must be a
/// unit vector within that tolerance.
pub fn read_profile(path: &Path, on_sphere_tol: Option<f64>) -> Result<SpinProfile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PROFILE_HEADER => {}
        Some((_, h)) => {
            return Err(parse_err(path, 1, format!("expected header {PROFILE_HEADER:?}, got {h:?}")))
        }
        None => return Err(parse_err(path, 1, "empty file")),
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(path, idx + 1, format!("expected 4 fields, got {}", fields.len())));
        }
        nodes.push(parse_f64(path, idx + 1, fields[0])?);
        values.push(Vec3::new(
            parse_f64(path, idx + 1, fields[1])?,
            parse_f64(path, idx + 1, fields[2])?,
            parse_f64(path, idx + 1, fields[3])?,
        ));
    }
    let grid = grid_from_nodes(path, &nodes)?;
    let profile = SpinProfile::from_values(grid, values)?;
    if let Some(tol) = on_sphere_tol {
        profile.check_on_sphere(tol)?;
    }
    Ok(profile)
}

pub fn write_rotation_field(path: &Path, field: &RotationField) -> Result<()> {
    let mut out = String::with_capacity(field.mats().len() * 180);
    out.push_str(ROTATION_HEADER);
    out.push('\n');
    for (w, m) in field.grid().nodes().iter().zip(field.mats()) {
        out.push_str(&w.to_string());
        for row in &m.0 {
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Reads a rotation field; every matrix is validated as a rotation.
pub fn read_rotation_field(path: &Path) -> Result<RotationField> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ROTATION_HEADER => {}
        Some((_, h)) => {
            return Err(parse_err(path, 1, format!("expected header {ROTATION_HEADER:?}, got {h:?}")))
        }
        None => return Err(parse_err(path, 1, "empty file")),
    }
    let mut nodes = Vec::new();
    let mut mats = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(parse_err(path, idx + 1, format!("expected 10 fields, got {}", fields.len())));
        }
        nodes.push(parse_f64(path, idx + 1, fields[0])?);
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = parse_f64(path, idx + 1, fields[1 + 3 * i + j])?;
            }
        }
        mats.push(Mat3(m));
    }
    let grid = grid_from_nodes(path, &nodes)?;
    RotationField::new(grid, mats)
}

/// Writes the trajectory CSV; `linf_to_target` is left empty except on
/// the 2kT rows.
pub fn write_trajectory(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let mut out = String::with_capacity(records.len() * 80 + 40);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{},", r.t, r.lyapunov, r.u1, r.u2));
        if let Some(linf) = r.linf_to_target {
            out.push_str(&linf.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    writeln!(file, "{summary}").map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{equator_scenario, paper_scenario};

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("bloch-ensemble-io-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn profile_round_trip_is_bit_exact() {
        let s = paper_scenario().unwrap();
        let path = tmp("profile.csv");
        write_profile(&path, &s.config.m0).unwrap();
        let back = read_profile(&path, Some(1e-9)).unwrap();
        assert_eq!(back.grid(), s.config.m0.grid());
        for (a, b) in back.values().iter().zip(s.config.m0.values()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
        fs::remove_file(&path).ok();
    }

    #[test]
    fn profile_read_rejects_off_sphere() {
        let path = tmp("offsphere.csv");
        fs::write(&path, "omega,x,y,z\n0,1,0,0\n0.5,0.9,0,0\n1,1,0,0\n").unwrap();
        let err = read_profile(&path, Some(1e-6)).unwrap_err();
        assert!(matches!(err, Error::OffSphere { node: 1, .. }), "{err}");
        // without the tolerance the same file loads
        assert!(read_profile(&path, None).is_ok());
        fs::remove_file(&path).ok();
    }

    #[test]
    fn profile_read_rejects_bad_header_and_fields() {
        let path = tmp("badheader.csv");
        fs::write(&path, "w,x,y,z\n0,1,0,0\n").unwrap();
        assert!(matches!(read_profile(&path, None), Err(Error::Parse { line: 1, .. })));
        fs::write(&path, "omega,x,y,z\n0,1,0\n").unwrap();
        assert!(matches!(read_profile(&path, None), Err(Error::Parse { line: 2, .. })));
        fs::write(&path, "omega,x,y,z\n0,1,0,zero\n").unwrap();
        assert!(matches!(read_profile(&path, None), Err(Error::Parse { line: 2, .. })));
        fs::remove_file(&path).ok();
    }

    #[test]
    fn profile_read_rejects_irregular_grid() {
        let path = tmp("irregular.csv");
        fs::write(&path, "omega,x,y,z\n0,1,0,0\n0.4,1,0,0\n1,1,0,0\n").unwrap();
        let err = read_profile(&path, None).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        fs::remove_file(&path).ok();
    }

    #[test]
    fn rotation_field_round_trip_and_validation() {
        let s = equator_scenario().unwrap();
        let field = s.config.rotation_override.unwrap();
        let path = tmp("rotation.csv");
        write_rotation_field(&path, &field).unwrap();
        let back = read_rotation_field(&path).unwrap();
        assert_eq!(back.mats(), field.mats());
        fs::remove_file(&path).ok();
    }

    #[test]
    fn rotation_field_read_rejects_non_rotation() {
        let path = tmp("notrot.csv");
        fs::write(
            &path,
            "omega,r11,r12,r13,r21,r22,r23,r31,r32,r33\n0,2,0,0,0,1,0,0,0,1\n1,1,0,0,0,1,0,0,0,1\n",
        )
        .unwrap();
        let err = read_rotation_field(&path).unwrap_err();
        assert!(matches!(err, Error::NotARotation { node: 0, .. }), "{err}");
        fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_profile(Path::new("/nonexistent/nowhere.csv"), None).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn trajectory_format_blank_linf() {
        let path = tmp("traj.csv");
        let records = vec![
            TrajectoryRecord {
                t: 0.0,
                lyapunov: 0.5,
                u1: 0.1,
                u2: -0.2,
                linf_to_target: Some(0.25),
                l2_to_minus_e3: 0.7,
            },
            TrajectoryRecord {
                t: 1.0,
                lyapunov: 0.4,
                u1: 0.0,
                u2: 0.0,
                linf_to_target: None,
                l2_to_minus_e3: 0.6,
            },
        ];
        write_trajectory(&path, &records).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines[1], "0,0.5,0.1,-0.2,0.25");
        assert_eq!(lines[2], "1,0.4,0,0,");
        fs::remove_file(&path).ok();
    }
}
