//! Two-by-two block systems and their direct or Schur-complement solution.

use super::cg::{cg_solve, jacobi};
use super::lu::{lu_solve_cached, OrderingCache};
use super::sparse::{CsrMatrix, TripletBuilder};
use crate::error::{Error, Result};

/// The block system `[[A11, A12], [A21, A22]] (x1, x2) = (rhs1, rhs2)`.
///
/// In the curvature-driven schemes `x1` collects the curvature-type unknowns
/// and `x2` the vertex displacements; for mean curvature flow
/// `A11 = Δt M`, `A12 = −Nᵀ`, `A21 = N` and `A22` is the vector stiffness.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a11: CsrMatrix,
    pub a12: CsrMatrix,
    pub a21: CsrMatrix,
    pub a22: CsrMatrix,
    pub rhs1: Vec<f64>,
    pub rhs2: Vec<f64>,
}

/// Solution of a [`SaddleSystem`].
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// CG iterations (zero for the direct path).
    pub iterations: usize,
}

/// How block systems are solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    /// Sparse LU of the assembled block matrix.
    Direct,
    /// Elimination of `x1` through the diagonal block `A11`, followed by
    /// Jacobi-preconditioned CG on the symmetric positive definite Schur
    /// complement `A22 − A21 A11⁻¹ A12`.
    SchurCg { tol: f64, maxit: usize },
}

impl SolveMethod {
    /// Schur-complement CG with the default tolerance `1e−13` and an
    /// iteration budget proportional to the problem size.
    pub fn schur_cg() -> Self {
        SolveMethod::SchurCg {
            tol: 1e-13,
            maxit: 0,
        }
    }
}

impl SaddleSystem {
    /// Checks that block dimensions are consistent.
    pub fn validate(&self) -> Result<()> {
        let n1 = self.a11.nrows();
        let n2 = self.a22.nrows();
        let check = |expected: usize, found: usize| -> Result<()> {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected, found })
            }
        };
        check(n1, self.a11.ncols())?;
        check(n2, self.a22.ncols())?;
        check(n1, self.a12.nrows())?;
        check(n2, self.a12.ncols())?;
        check(n2, self.a21.nrows())?;
        check(n1, self.a21.ncols())?;
        check(n1, self.rhs1.len())?;
        check(n2, self.rhs2.len())
    }

    /// The assembled block matrix and right-hand side.
    pub fn assemble(&self) -> (CsrMatrix, Vec<f64>) {
        let n1 = self.a11.nrows();
        let n = n1 + self.a22.nrows();
        let mut b = TripletBuilder::with_capacity(
            n,
            n,
            self.a11.nnz() + self.a12.nnz() + self.a21.nnz() + self.a22.nnz(),
        );
        b.add_matrix(0, 0, &self.a11, 1.0);
        b.add_matrix(0, n1, &self.a12, 1.0);
        b.add_matrix(n1, 0, &self.a21, 1.0);
        b.add_matrix(n1, n1, &self.a22, 1.0);
        let mut rhs = self.rhs1.clone();
        rhs.extend_from_slice(&self.rhs2);
        (b.build(), rhs)
    }

    /// Solves the system with the given method.
    pub fn solve(&self, method: SolveMethod, cache: &mut OrderingCache) -> Result<SaddleSolution> {
        self.validate()?;
        match method {
            SolveMethod::Direct => {
                let (m, rhs) = self.assemble();
                let x = lu_solve_cached(&m, &rhs, cache)?;
                let n1 = self.a11.nrows();
                Ok(SaddleSolution {
                    x1: x[..n1].to_vec(),
                    x2: x[n1..].to_vec(),
                    iterations: 0,
                })
            }
            SolveMethod::SchurCg { tol, maxit } => self.solve_schur(tol, maxit),
        }
    }

    fn solve_schur(&self, tol: f64, maxit: usize) -> Result<SaddleSolution> {
        if !self.a11.is_diagonal() {
            return Err(Error::Unsupported(
                "the Schur-complement path needs a diagonal leading block".into(),
            ));
        }
        let d = self.a11.diagonal();
        if d.iter().any(|&v| v == 0.0) {
            return Err(Error::Unsupported(
                "the Schur-complement path needs a nonsingular diagonal leading block".into(),
            ));
        }
        let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        let elim = self.a21.matmul(&self.a12.scale_rows(&dinv));
        let s = self.a22.add(1.0, &elim, -1.0);
        if !s.is_symmetric(1e-12) {
            return Err(Error::Unsupported(
                "the Schur complement of this system is not symmetric".into(),
            ));
        }
        let t: Vec<f64> = self.rhs1.iter().zip(&dinv).map(|(r, di)| r * di).collect();
        let corr = self.a21.mul_vec(&t);
        let rhs: Vec<f64> = self.rhs2.iter().zip(&corr).map(|(a, b)| a - b).collect();
        let pre = jacobi(&s);
        let maxit = if maxit == 0 {
            20 * s.nrows() + 100
        } else {
            maxit
        };
        let out = cg_solve(&s, &rhs, tol, maxit, Some(&pre), None)?;
        let a12x = self.a12.mul_vec(&out.x);
        let x1 = self
            .rhs1
            .iter()
            .zip(&a12x)
            .zip(&dinv)
            .map(|((r, a), di)| (r - a) * di)
            .collect();
        Ok(SaddleSolution {
            x1,
            x2: out.x,
            iterations: out.iterations,
        })
    }
}
