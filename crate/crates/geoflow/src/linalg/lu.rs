//! Sparse LU factorization with threshold partial pivoting.
//!
//! The matrix is first permuted symmetrically by a minimum-degree ordering of
//! `A + Aᵀ`; columns are then factored left to right, each by a sparse
//! triangular solve against the already computed part of `L` whose nonzero
//! pattern is found by depth-first search. Row pivots prefer the diagonal
//! entry when it is within [`DIAGONAL_PREFERENCE`] of the column maximum.

use std::collections::HashMap;
use std::sync::Arc;

use super::ordering::{invert, minimum_degree};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this multiple of `max |a_ij|` signal singularity.
pub const PIVOT_TOL: f64 = 1e-13;

/// Relative size at which the diagonal candidate is accepted as pivot.
pub const DIAGONAL_PREFERENCE: f64 = 0.001;

/// Relative residual bound checked after every solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

const NONE: usize = usize::MAX;

/// A computed factorization `Q P A Pᵀ = L U`.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    perm: Arc<Vec<usize>>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
}

/// Caches orderings by sparsity pattern so that repeated factorizations of
/// matrices with the same structure skip the ordering phase.
#[derive(Debug, Default, Clone)]
pub struct OrderingCache {
    map: HashMap<u64, Arc<Vec<usize>>>,
}

impl OrderingCache {
    /// Creates an empty cache.
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the ordering for `a`, computing it on first use.
    pub fn ordering(&mut self, a: &CsrMatrix) -> Arc<Vec<usize>> {
        let key = a.pattern_fingerprint();
        self.map
            .entry(key)
            .or_insert_with(|| Arc::new(minimum_degree(a)))
            .clone()
    }
}

impl SparseLu {
    /// Factors `a` with a freshly computed ordering.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = Arc::new(minimum_degree(a));
        Self::factor_with_ordering(a, perm)
    }

    /// Factors `a` using the given symmetric ordering (`perm[new] = old`).
    pub fn factor_with_ordering(a: &CsrMatrix, perm: Arc<Vec<usize>>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.ncols(),
            });
        }
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let iperm = invert(&perm);
        // Column j of B = P A Pᵀ is column perm[j] of A, i.e. row perm[j] of Aᵀ.
        let at = a.transpose();
        let mut bp = Vec::with_capacity(n + 1);
        let mut bi = Vec::with_capacity(a.nnz());
        let mut bx = Vec::with_capacity(a.nnz());
        bp.push(0);
        for j in 0..n {
            let (idx, val) = at.row(perm[j]);
            for (&i, &v) in idx.iter().zip(val) {
                bi.push(iperm[i]);
                bx.push(v);
            }
            bp.push(bi.len());
        }
        let tol = PIVOT_TOL * a.max_abs();

        let mut lp = vec![0usize; n + 1];
        let mut up = vec![0usize; n + 1];
        let mut li: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut lx = Vec::with_capacity(4 * a.nnz());
        let mut ui: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut ux = Vec::with_capacity(4 * a.nnz());
        let mut pinv = vec![NONE; n];
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut marked = vec![false; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];

        for k in 0..n {
            lp[k] = li.len();
            up[k] = ui.len();
            // Nonzero pattern of L \ B(:,k) by depth-first search.
            let mut top = n;
            for &start in &bi[bp[k]..bp[k + 1]] {
                if marked[start] {
                    continue;
                }
                let mut head = 0usize;
                stack[0] = start;
                loop {
                    let j = stack[head];
                    let jn = pinv[j];
                    if !marked[j] {
                        marked[j] = true;
                        pstack[head] = if jn == NONE { 0 } else { lp[jn] + 1 };
                    }
                    let end = if jn == NONE { 0 } else { lp[jn + 1] };
                    let mut descended = false;
                    let mut p = pstack[head];
                    while p < end {
                        let i: usize = li[p];
                        p += 1;
                        if !marked[i] {
                            pstack[head] = p;
                            head += 1;
                            stack[head] = i;
                            descended = true;
                            break;
                        }
                    }
                    if !descended {
                        top -= 1;
                        xi[top] = j;
                        if head == 0 {
                            break;
                        }
                        head -= 1;
                    }
                }
            }
            for &j in &xi[top..n] {
                marked[j] = false;
            }
            // Numerical triangular solve.
            for p in bp[k]..bp[k + 1] {
                x[bi[p]] = bx[p];
            }
            for px in top..n {
                let j = xi[px];
                let jn = pinv[j];
                if jn == NONE {
                    continue;
                }
                let xj = x[j];
                for p in lp[jn] + 1..lp[jn + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }
            // Pivot selection.
            let mut ipiv = NONE;
            let mut amax = -1.0f64;
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            if ipiv == NONE || amax <= tol {
                return Err(Error::Singular {
                    pivot: k,
                    value: amax.max(0.0),
                });
            }
            if pinv[k] == NONE && x[k].abs() >= DIAGONAL_PREFERENCE * amax {
                ipiv = k;
            }
            let pivot = x[ipiv];
            ui.push(k);
            ux.push(pivot);
            pinv[ipiv] = k;
            li.push(ipiv);
            lx.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    li.push(i);
                    lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lp[n] = li.len();
        up[n] = ui.len();
        for r in &mut li {
            *r = pinv[*r];
        }
        Ok(SparseLu {
            n,
            perm,
            pinv,
            lp,
            li,
            lx,
            up,
            ui,
            ux,
        })
    }

    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in `L` and `U`.
    pub fn fill(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut z = vec![0.0; n];
        for i in 0..n {
            z[self.pinv[i]] = b[self.perm[i]];
        }
        for j in 0..n {
            let zj = z[j];
            if zj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    z[self.li[p]] -= self.lx[p] * zj;
                }
            }
        }
        for j in (0..n).rev() {
            let d = self.up[j + 1] - 1;
            z[j] /= self.ux[d];
            let zj = z[j];
            if zj != 0.0 {
                for p in self.up[j]..d {
                    z[self.ui[p]] -= self.ux[p] * zj;
                }
            }
        }
        let mut x = vec![0.0; n];
        for j in 0..n {
            x[self.perm[j]] = z[j];
        }
        Ok(x)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Whether `x` satisfies `‖A x − b‖∞ ≤ 1e−10 (‖A‖∞ ‖x‖∞ + ‖b‖∞)`, together
/// with the residual vector.
pub fn residual_ok(a: &CsrMatrix, x: &[f64], b: &[f64]) -> (bool, Vec<f64>) {
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let bound = RESIDUAL_TOL * (a.norm_inf() * inf_norm(x) + inf_norm(b));
    (inf_norm(&r) <= bound, r)
}

/// Solves `A x = b` by sparse LU, refining iteratively if the residual bound
/// is not met at once.
pub fn lu_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    lu_solve_cached(a, b, &mut OrderingCache::new())
}

/// As [`lu_solve`], reusing orderings from `cache`.
///
/// The matrix is equilibrated symmetrically before factorization,
/// `D A D y = D b` with `D = diag(|a_ii|^{−1/2})` (row maxima stand in for
/// zero diagonals), so that diagonal pivots of block systems whose leading
/// block is small stay acceptable and the fill-reducing ordering survives.
pub fn lu_solve_cached(a: &CsrMatrix, b: &[f64], cache: &mut OrderingCache) -> Result<Vec<f64>> {
    let d = equilibration(a);
    let scaled = a.scale_symmetric(&d);
    let perm = cache.ordering(a);
    let lu = SparseLu::factor_with_ordering(&scaled, perm)?;
    let solve = |rhs: &[f64]| -> Result<Vec<f64>> {
        let db: Vec<f64> = rhs.iter().zip(&d).map(|(v, s)| v * s).collect();
        Ok(lu.solve(&db)?.iter().zip(&d).map(|(v, s)| v * s).collect())
    };
    let mut x = solve(b)?;
    for _ in 0..3 {
        let (ok, r) = residual_ok(a, &x, b);
        if ok {
            return Ok(x);
        }
        let dx = solve(&r)?;
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi -= d;
        }
    }
    let (ok, r) = residual_ok(a, &x, b);
    if ok {
        Ok(x)
    } else {
        Err(Error::NotConverged {
            iterations: 3,
            residual: inf_norm(&r),
            history: Vec::new(),
        })
    }
}

/// Symmetric scaling factors `|a_ii|^{−1/2}`, falling back to the row maximum
/// for zero diagonals and to 1 for empty rows.
fn equilibration(a: &CsrMatrix) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| {
            let (_, vals) = a.row(i);
            let diag = a.get(i, i).abs();
            let s = if diag > 0.0 { diag } else { inf_norm(vals) };
            if s > 0.0 && s.is_finite() {
                1.0 / s.sqrt()
            } else {
                1.0
            }
        })
        .collect()
}
