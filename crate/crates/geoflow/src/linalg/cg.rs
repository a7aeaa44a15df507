//! Preconditioned conjugate gradients.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Outcome of a converged CG run.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    /// Approximate solution.
    pub x: Vec<f64>,
    /// Number of iterations performed.
    pub iterations: usize,
    /// Relative residual `‖r_i‖₂ / ‖b‖₂` after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Inverse diagonal of `a`, for use as a Jacobi preconditioner.
///
/// Zero diagonal entries are replaced by 1 so that the preconditioner stays
/// well defined.
pub fn jacobi(a: &CsrMatrix) -> Vec<f64> {
    a.diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A` by conjugate gradients.
///
/// Stops once `‖b − A x‖₂ ≤ tol ‖b‖₂`. `inv_diag` is an optional Jacobi
/// preconditioner (see [`jacobi`]); `x0` an optional initial guess.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    maxit: usize,
    inv_diag: Option<&[f64]>,
    x0: Option<&[f64]>,
) -> Result<CgOutcome> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let bnorm = dot(b, b).sqrt();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            history: vec![0.0],
        });
    }
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let precond = |r: &[f64]| -> Vec<f64> {
        match inv_diag {
            Some(d) => r.iter().zip(d).map(|(x, y)| x * y).collect(),
            None => r.to_vec(),
        }
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![dot(&r, &r).sqrt() / bnorm];
    let mut ap = vec![0.0; n];
    for it in 1..=maxit {
        if *history.last().unwrap() <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it - 1,
                history,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        history.push(dot(&r, &r).sqrt() / bnorm);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let last = *history.last().unwrap();
    if last <= tol {
        Ok(CgOutcome {
            x,
            iterations: maxit,
            history,
        })
    } else {
        Err(Error::NotConverged {
            iterations: maxit,
            residual: last,
            history,
        })
    }
}
