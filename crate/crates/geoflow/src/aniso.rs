//! Anisotropic surface-energy densities built from ellipsoidal norms.
//!
//! `γ(p) = (Σ_ℓ γ_ℓ(p)^r)^{1/r}` with `γ_ℓ(p) = √(p · G_ℓ p)` for symmetric
//! positive definite `G_ℓ` and `r ≥ 1`. Matrices are stored as 3×3 blocks;
//! for planar problems only the leading 2×2 block is used and the third
//! diagonal entry is 1.

use nalgebra::{Matrix2, Matrix3, Vector3};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// An anisotropic energy density of the ellipsoidal-norm family.
#[derive(Debug, Clone, PartialEq)]
pub struct Anisotropy {
    dim: usize,
    r: f64,
    g: Vec<Matrix3<f64>>,
    g_tilde: Vec<Matrix3<f64>>,
}

/// Sampled boundaries of the Frank diagram and of the Wulff shape.
#[derive(Debug, Clone)]
pub struct Shapes {
    /// Points `p / γ(p)` for unit directions `p`.
    pub frank: Vec<Vector3<f64>>,
    /// Points `γ'(p)` for unit directions `p`.
    pub wulff: Vec<Vector3<f64>>,
}

fn embed2(m: Matrix2<f64>) -> Matrix3<f64> {
    Matrix3::new(
        m[(0, 0)],
        m[(0, 1)],
        0.0,
        m[(1, 0)],
        m[(1, 1)],
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

fn rot_plane(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_xz(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

impl Anisotropy {
    /// Builds a density from exponent `r` and matrices whose leading `dim × dim`
    /// blocks are the `G_ℓ`.
    pub fn new(dim: usize, r: f64, matrices: Vec<Matrix3<f64>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponent r must be >= 1, got {r}"
            )));
        }
        if matrices.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one matrix is required".into(),
            ));
        }
        let mut g = Vec::with_capacity(matrices.len());
        let mut g_tilde = Vec::with_capacity(matrices.len());
        for (l, m) in matrices.into_iter().enumerate() {
            let m = if dim == 2 {
                embed2(m.fixed_view::<2, 2>(0, 0).into_owned())
            } else {
                m
            };
            if (m - m.transpose()).abs().max() > 1e-14 * m.abs().max() {
                return Err(Error::InvalidParameter(format!(
                    "matrix {l} is not symmetric"
                )));
            }
            let (det, inv) = if dim == 2 {
                let b = m.fixed_view::<2, 2>(0, 0).into_owned();
                if b.cholesky().is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "matrix {l} is not positive definite"
                    )));
                }
                (
                    b.determinant(),
                    embed2(b.try_inverse().expect("SPD block is invertible")),
                )
            } else {
                if m.cholesky().is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "matrix {l} is not positive definite"
                    )));
                }
                (
                    m.determinant(),
                    m.try_inverse().expect("SPD matrix is invertible"),
                )
            };
            let scale = det.powf(1.0 / (dim as f64 - 1.0));
            let mut gt = inv * scale;
            if dim == 2 {
                gt[(2, 2)] = 1.0;
            }
            g.push(m);
            g_tilde.push(gt);
        }
        Ok(Anisotropy { dim, r, g, g_tilde })
    }

    /// The isotropic density `γ(p) = |p|`.
    pub fn iso(dim: usize) -> Self {
        Anisotropy::new(dim, 1.0, vec![Matrix3::identity()]).expect("identity is SPD")
    }

    /// A single weighted norm `G = diag(weights)`, `r = 1`.
    pub fn weighted(weights: &[f64]) -> Result<Self> {
        let dim = weights.len();
        let mut m = Matrix3::identity();
        for (i, w) in weights.iter().enumerate().take(3) {
            m[(i, i)] = *w;
        }
        Anisotropy::new(dim, 1.0, vec![m])
    }

    /// Regularized `l¹` norm `Σ_ℓ [ε²|p|² + p_ℓ²(1 − ε²)]^{1/2}`.
    pub fn l1reg(dim: usize, eps: f64) -> Result<Self> {
        Anisotropy::cubic(dim, eps, 1.0)
    }

    /// Cubic anisotropy: the regularized `l¹` matrices combined with exponent `r`.
    pub fn cubic(dim: usize, eps: f64, r: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        let mats = (0..dim)
            .map(|l| {
                let mut m = Matrix3::identity() * (eps * eps);
                m[(l, l)] = 1.0;
                m
            })
            .collect();
        Anisotropy::new(dim, r, mats)
    }

    /// Hexagonal anisotropy with in-plane rotation `theta0`.
    ///
    /// For `dim = 3` this is the four-matrix density whose Wulff shape
    /// approximates a regular hexagonal prism; for `dim = 2` three rotated
    /// copies of `diag(1, ε²)` at angles `theta0 + ℓπ/3`.
    pub fn hexagonal(dim: usize, eps: f64, theta0: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        let base = Matrix3::from_diagonal(&Vector3::new(1.0, eps * eps, eps * eps));
        let mut mats = Vec::new();
        if dim == 3 {
            let r2 = rot_xz(PI / 2.0);
            mats.push(r2.transpose() * base * r2);
            for l in 1..=3 {
                let r1 = rot_plane(theta0 + l as f64 * PI / 3.0);
                mats.push(r1.transpose() * base * r1 / 3.0);
            }
        } else {
            for l in 1..=3 {
                let r1 = rot_plane(theta0 + l as f64 * PI / 3.0);
                mats.push(r1.transpose() * base * r1);
            }
        }
        Anisotropy::new(dim, 1.0, mats)
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exponent `r`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Number of matrices `L`.
    pub fn len(&self) -> usize {
        self.g.len()
    }

    /// Whether the family is empty (never true for a constructed density).
    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// The matrices `G_ℓ`.
    pub fn matrices(&self) -> &[Matrix3<f64>] {
        &self.g
    }

    /// The matrices `G̃_ℓ = det(G_ℓ)^{1/(d−1)} G_ℓ^{−1}`.
    pub fn g_tilde(&self) -> &[Matrix3<f64>] {
        &self.g_tilde
    }

    /// Whether this is exactly the isotropic density.
    pub fn is_isotropic(&self) -> bool {
        self.g.len() == 1 && self.g[0] == Matrix3::identity()
    }

    /// Component norms `γ_ℓ(p)`.
    pub fn components(&self, p: &Vector3<f64>) -> Vec<f64> {
        self.g
            .iter()
            .map(|g| p.dot(&(g * p)).max(0.0).sqrt())
            .collect()
    }

    /// Evaluates `γ(p)` without the domain check.
    pub fn gamma_unchecked(&self, p: &Vector3<f64>) -> f64 {
        let c = self.components(p);
        if self.r == 1.0 {
            c.iter().sum()
        } else {
            let m = c.iter().copied().fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            m * c
                .iter()
                .map(|x| (x / m).powf(self.r))
                .sum::<f64>()
                .powf(1.0 / self.r)
        }
    }

    fn check_nonzero(&self, p: &Vector3<f64>) -> Result<()> {
        let n = if self.dim == 2 {
            (p.x * p.x + p.y * p.y).sqrt()
        } else {
            p.norm()
        };
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain(
                "γ is evaluated at a zero or non-finite vector".into(),
            ));
        }
        Ok(())
    }

    /// Evaluates `γ(p)` for `p ≠ 0`.
    pub fn gamma(&self, p: &Vector3<f64>) -> Result<f64> {
        self.check_nonzero(p)?;
        Ok(self.gamma_unchecked(p))
    }

    /// Evaluates the gradient `γ'(p)` for `p ≠ 0`.
    pub fn gamma_grad(&self, p: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.check_nonzero(p)?;
        let c = self.components(p);
        let gam = self.gamma_unchecked(p);
        let mut out = Vector3::zeros();
        for (g, cl) in self.g.iter().zip(&c) {
            let w = (cl / gam).powf(self.r - 1.0) / cl;
            out += (g * p) * w;
        }
        if self.dim == 2 {
            out.z = 0.0;
        }
        Ok(out)
    }

    /// Sampled dual function `γ*(q) = max_p (p · q) / γ(p)` over `n_dirs`
    /// unit directions.
    pub fn dual_gamma(&self, q: &Vector3<f64>, n_dirs: usize) -> Result<f64> {
        if n_dirs < 8 {
            return Err(Error::InvalidParameter(format!(
                "at least 8 directions are required, got {n_dirs}"
            )));
        }
        Ok(unit_directions(self.dim, n_dirs)
            .iter()
            .map(|p| p.dot(q) / self.gamma_unchecked(p))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Samples the Frank-diagram and Wulff-shape boundaries over `n_dirs` directions.
    pub fn sample_shapes(&self, n_dirs: usize) -> Result<Shapes> {
        if n_dirs < 8 {
            return Err(Error::InvalidParameter(format!(
                "at least 8 directions are required, got {n_dirs}"
            )));
        }
        let dirs = unit_directions(self.dim, n_dirs);
        let frank = dirs.iter().map(|p| p / self.gamma_unchecked(p)).collect();
        let wulff = dirs
            .iter()
            .map(|p| self.gamma_grad(p).expect("unit direction is nonzero"))
            .collect();
        Ok(Shapes { frank, wulff })
    }
}

/// Deterministic unit directions: equally spaced angles for `d = 2`, a
/// Fibonacci lattice on the sphere for `d = 3`.
pub fn unit_directions(dim: usize, n: usize) -> Vec<Vector3<f64>> {
    if dim == 2 {
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vector3::new(t.cos(), t.sin(), 0.0)
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let rho = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                Vector3::new(rho * t.cos(), rho * t.sin(), z)
            })
            .collect()
    }
}
