//! Exact 3-vector and 3x3 rotation primitives.
//!
//! Matrices are row-major: `m[i][j]` is row `i`, column `j`, so `mul_vec`
//! computes the usual matrix-times-column-vector product. The only two
//! rotation families needed are built in closed trigonometric form.

use crate::error::{Error, Result};

/// Magnetization vector in the lab basis (e1, e2, e3).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E2: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Wedge (cross) product `self ^ other`.
    pub fn wedge(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `self / |self|`. A zero vector is a degenerate state the caller
    /// must abort on, not a value to patch over.
    pub fn renormalized(self) -> Result<Vec3> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self / n)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl std::ops::Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        rhs * self
    }
}

impl std::ops::Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x / rhs, self.y / rhs, self.z / rhs)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    /// Matrix whose columns are `c1, c2, c3`.
    pub fn from_columns(c1: Vec3, c2: Vec3, c3: Vec3) -> Mat3 {
        Mat3([
            [c1.x, c2.x, c3.x],
            [c1.y, c2.y, c3.y],
            [c1.z, c2.z, c3.z],
        ])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.0[i][0], self.0[i][1], self.0[i][2])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.row(0).dot(v),
            self.row(1).dot(v),
            self.row(2).dot(v),
        )
    }

    #[allow(clippy::needless_range_loop)]
    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = self.0[i][0] * other.0[0][j]
                    + self.0[i][1] * other.0[1][j]
                    + self.0[i][2] * other.0[2][j];
            }
        }
        Mat3(r)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        let mut r = self.0;
        for (row, other_row) in r.iter_mut().zip(&other.0) {
            for (v, o) in row.iter_mut().zip(other_row) {
                *v += o;
            }
        }
        Mat3(r)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        let mut r = self.0;
        for (row, other_row) in r.iter_mut().zip(&other.0) {
            for (v, o) in row.iter_mut().zip(other_row) {
                *v -= o;
            }
        }
        Mat3(r)
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut r = self.0;
        for row in &mut r {
            for v in row {
                *v *= s;
            }
        }
        Mat3(r)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral norm: largest singular value, via the closed-form
    /// eigenvalues of the symmetric matrix `A^T A`. Accuracy degrades to
    /// ~1e-8 near degenerate spectra (acos sensitivity), which is ample
    /// for the norm comparisons this crate makes.
    pub fn operator_norm(&self) -> f64 {
        let a = self.transpose().mul(self);
        max_symmetric_eigenvalue(&a.0).max(0.0).sqrt()
    }

    /// Frobenius norm of `R^T R - I`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose().mul(self).sub(&Mat3::IDENTITY).frobenius_norm()
    }

    /// Orthonormal to `tol` with determinant +1 to `tol`.
    pub fn is_rotation(&self, tol: f64) -> bool {
        self.orthogonality_defect() <= tol && (self.det() - 1.0).abs() <= tol
    }

    /// Inverse via the adjugate; intended for near-rotation matrices where
    /// the determinant is close to one.
    pub fn inverse(&self) -> Mat3 {
        let m = &self.0;
        let det = self.det();
        let mut c = [[0.0; 3]; 3];
        c[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        c[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
        c[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
        c[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        c[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
        c[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
        c[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        c[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
        c[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        Mat3(c).scale(1.0 / det)
    }

    /// Nearest rotation: the orthogonal polar factor, by the Newton
    /// iteration `X <- (X + X^-T) / 2`. Converges quadratically from any
    /// near-rotation start; used to pull ODE-integrated frames back onto
    /// SO(3) after each cell.
    pub fn nearest_rotation(&self) -> Mat3 {
        let mut x = *self;
        for _ in 0..20 {
            let next = x.add(&x.inverse().transpose()).scale(0.5);
            if next.sub(&x).frobenius_norm() <= 1e-15 {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Largest eigenvalue of a symmetric 3x3 matrix, trigonometric closed form.
fn max_symmetric_eigenvalue(a: &[[f64; 3]; 3]) -> f64 {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        return a[0][0].max(a[1][1]).max(a[2][2]);
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = *a;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (Mat3(b).det() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

/// Rotation by `alpha` about e1:
/// `[[1,0,0],[0,cos a,-sin a],[0,sin a,cos a]]`.
pub fn rot_about_e1(alpha: f64) -> Mat3 {
    let (s, c) = alpha.sin_cos();
    Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
}

/// Skew generator `S = [[0,1,0],[-1,0,0],[0,0,0]]` of the planar rotation
/// family used by the rotating-frame change of variables.
pub const GENERATOR_S: Mat3 = Mat3([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);

/// Closed form of `exp(theta * S)`:
/// `[[cos t, sin t, 0], [-sin t, cos t, 0], [0, 0, 1]]`. Fixes e3.
pub fn exp_s(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// Applies `exp(theta * S)` to a vector without forming the matrix.
pub fn exp_s_apply(theta: f64, v: Vec3) -> Vec3 {
    let (s, c) = theta.sin_cos();
    Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
}

/// Skew-symmetric matrix of `f`, i.e. the operator `x -> f ^ x`.
pub fn skew(f: Vec3) -> Mat3 {
    Mat3([
        [0.0, -f.z, f.y],
        [f.z, 0.0, -f.x],
        [-f.y, f.x, 0.0],
    ])
}
