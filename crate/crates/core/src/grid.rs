//! Discrete frequency grid, sampled spin profiles, finite differences,
//! quadrature and the Lyapunov functional.
//!
//! Nodes are `omega_i = omega_lo + i * eps` for `i = 0..=n_cells` with
//! `eps = (omega_hi - omega_lo) / n_cells` (node `i` here is node `i + 1`
//! in 1-based conventions). Quadrature assigns each node its cell of width `eps`,
//! clipped at the domain ends, so the endpoint weights are `eps/2`.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Regular grid on the Larmor-frequency band.
#[derive(Debug, Clone)]
pub struct OmegaGrid {
    omega_lo: f64,
    omega_hi: f64,
    n_cells: usize,
    nodes: Vec<f64>,
}

impl PartialEq for OmegaGrid {
    fn eq(&self, other: &Self) -> bool {
        self.omega_lo == other.omega_lo
            && self.omega_hi == other.omega_hi
            && self.n_cells == other.n_cells
    }
}

impl OmegaGrid {
    pub fn new(omega_lo: f64, omega_hi: f64, n_cells: usize) -> Result<OmegaGrid> {
        if !omega_lo.is_finite() || !omega_hi.is_finite() || omega_hi <= omega_lo {
            return Err(Error::InvalidGrid(format!(
                "need omega_lo < omega_hi, got [{omega_lo}, {omega_hi}]"
            )));
        }
        if n_cells == 0 {
            return Err(Error::InvalidGrid("need at least one cell".into()));
        }
        let eps = (omega_hi - omega_lo) / n_cells as f64;
        let nodes = (0..=n_cells).map(|i| omega_lo + i as f64 * eps).collect();
        Ok(OmegaGrid {
            omega_lo,
            omega_hi,
            n_cells,
            nodes,
        })
    }

    pub fn omega_lo(&self) -> f64 {
        self.omega_lo
    }

    pub fn omega_hi(&self) -> f64 {
        self.omega_hi
    }

    pub fn span(&self) -> f64 {
        self.omega_hi - self.omega_lo
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// Mesh step `eps_N`.
    pub fn spacing(&self) -> f64 {
        (self.omega_hi - self.omega_lo) / self.n_cells as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Grid with the same span and twice the cells; shares every node of
    /// `self` at even indices.
    pub fn refined(&self) -> OmegaGrid {
        OmegaGrid::new(self.omega_lo, self.omega_hi, 2 * self.n_cells)
            .expect("refinement of a valid grid is valid")
    }

    /// Node-wise derivative: central differences at interior nodes,
    /// one-sided first-order differences at the two boundary nodes.
    pub fn derivative(&self, values: &[Vec3]) -> Result<Vec<Vec3>> {
        self.check_len(values.len())?;
        let n = values.len();
        if n < 3 {
            return Err(Error::GridTooSmall { nodes: n });
        }
        let eps = self.spacing();
        let mut d = Vec::with_capacity(n);
        d.push((values[1] - values[0]) / eps);
        for i in 1..n - 1 {
            d.push((values[i + 1] - values[i - 1]) / (2.0 * eps));
        }
        d.push((values[n - 1] - values[n - 2]) / eps);
        Ok(d)
    }

    /// Midpoint-cell quadrature with cells clipped to the domain:
    /// weight `eps` at interior nodes, `eps/2` at the endpoints.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples.len())?;
        let eps = self.spacing();
        let sum: f64 = samples.iter().sum();
        Ok(eps * (sum - 0.5 * samples[0] - 0.5 * samples[samples.len() - 1]))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Sampled map omega -> unit vector; houses M, M1, M2, N, M0 and Mf.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinProfile {
    grid: OmegaGrid,
    values: Vec<Vec3>,
}

impl SpinProfile {
    /// Wraps raw values without any norm check.
    pub fn from_values(grid: OmegaGrid, values: Vec<Vec3>) -> Result<SpinProfile> {
        grid.check_len(values.len())?;
        Ok(SpinProfile { grid, values })
    }

    /// Wraps values after checking every node is on the unit sphere
    /// within `tol`.
    pub fn unit(grid: OmegaGrid, values: Vec<Vec3>, tol: f64) -> Result<SpinProfile> {
        let p = SpinProfile::from_values(grid, values)?;
        p.check_on_sphere(tol)?;
        Ok(p)
    }

    pub fn constant(grid: OmegaGrid, v: Vec3) -> SpinProfile {
        let values = vec![v; grid.n_nodes()];
        SpinProfile { grid, values }
    }

    pub fn from_fn(grid: OmegaGrid, f: impl Fn(f64) -> Vec3) -> SpinProfile {
        let values = grid.nodes().iter().map(|&w| f(w)).collect();
        SpinProfile { grid, values }
    }

    pub fn grid(&self) -> &OmegaGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    /// Split borrow for node-wise updates that need the grid coordinates.
    pub fn split_mut(&mut self) -> (&OmegaGrid, &mut [Vec3]) {
        (&self.grid, &mut self.values)
    }

    pub fn check_on_sphere(&self, tol: f64) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            let n = v.norm();
            if (n - 1.0).abs() > tol {
                return Err(Error::OffSphere { node: i, norm: n });
            }
        }
        Ok(())
    }

    pub fn derivative(&self) -> Result<Vec<Vec3>> {
        self.grid.derivative(&self.values)
    }

    /// Max node-wise Euclidean distance to `other`.
    pub fn linf_distance(&self, other: &SpinProfile) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max))
    }
}

/// Discrete L2, H1 and L-infinity distances between two profiles.
#[derive(Debug, Clone, Copy)]
pub struct ProfileNorms {
    pub l2: f64,
    pub h1: f64,
    pub linf: f64,
}

/// Distances from `p` to `target` on their common grid.
pub fn norms(p: &SpinProfile, target: &SpinProfile) -> Result<ProfileNorms> {
    if p.grid() != target.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = p.grid();
    let diff: Vec<Vec3> = p
        .values()
        .iter()
        .zip(target.values())
        .map(|(a, b)| *a - *b)
        .collect();
    let sq: Vec<f64> = diff.iter().map(|d| d.norm_squared()).collect();
    let l2_sq = grid.integrate(&sq)?;
    let ddiff = grid.derivative(&diff)?;
    let dsq: Vec<f64> = ddiff.iter().map(|d| d.norm_squared()).collect();
    let h1_sq = l2_sq + grid.integrate(&dsq)?;
    let linf = diff.iter().map(|d| d.norm()).fold(0.0, f64::max);
    Ok(ProfileNorms {
        l2: l2_sq.sqrt(),
        h1: h1_sq.sqrt(),
        linf,
    })
}

/// Lyapunov functional
/// `L(N) = integral( |N'|^2 / 2 + 1 + <N, e3> ) d omega`.
///
/// Zero exactly at the constant profile `-e3`; nonnegative on the sphere
/// up to quadrature error.
pub fn lyapunov(n_prof: &SpinProfile) -> Result<f64> {
    let grid = n_prof.grid();
    let d = n_prof.derivative()?;
    let integrand: Vec<f64> = n_prof
        .values()
        .iter()
        .zip(&d)
        .map(|(v, dv)| 0.5 * dv.norm_squared() + 1.0 + v.z)
        .collect();
    grid.integrate(&integrand)
}

/// Discrete H1 norm of a single profile (values plus derivative).
pub fn h1_norm(p: &SpinProfile) -> Result<f64> {
    let grid = p.grid();
    let sq: Vec<f64> = p.values().iter().map(|v| v.norm_squared()).collect();
    let d = p.derivative()?;
    let dsq: Vec<f64> = d.iter().map(|v| v.norm_squared()).collect();
    Ok((grid.integrate(&sq)? + grid.integrate(&dsq)?).sqrt())
}
