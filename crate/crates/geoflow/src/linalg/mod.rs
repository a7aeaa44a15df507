//! Sparse linear algebra: storage, direct and iterative solvers, and the
//! block systems produced by the schemes.

mod cg;
mod lu;
mod ordering;
mod saddle;
mod sparse;

pub use cg::{cg_solve, jacobi, CgOutcome};
pub use lu::{
    lu_solve, lu_solve_cached, residual_ok, OrderingCache, SparseLu, DIAGONAL_PREFERENCE,
    PIVOT_TOL, RESIDUAL_TOL,
};
pub use ordering::{invert, minimum_degree};
pub use saddle::{SaddleSolution, SaddleSystem, SolveMethod};
pub use sparse::{CsrMatrix, TripletBuilder};

use crate::error::Result;

/// A solver front end owning the ordering cache used across time steps.
///
/// One solver belongs to one run; it is not shared between threads.
#[derive(Debug, Clone)]
pub struct Solver {
    method: SolveMethod,
    cache: OrderingCache,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(SolveMethod::Direct)
    }
}

impl Solver {
    /// Creates a solver using `method` for block systems.
    pub fn new(method: SolveMethod) -> Self {
        Solver {
            method,
            cache: OrderingCache::new(),
        }
    }

    /// The configured block-system method.
    pub fn method(&self) -> SolveMethod {
        self.method
    }

    /// Solves a general square system by sparse LU.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        lu_solve_cached(a, b, &mut self.cache)
    }

    /// Solves a block system with the configured method.
    pub fn solve_saddle(&mut self, sys: &SaddleSystem) -> Result<SaddleSolution> {
        sys.solve(self.method, &mut self.cache)
    }

    /// Solves a block system with the direct method regardless of configuration.
    pub fn solve_saddle_direct(&mut self, sys: &SaddleSystem) -> Result<SaddleSolution> {
        sys.solve(SolveMethod::Direct, &mut self.cache)
    }
}
