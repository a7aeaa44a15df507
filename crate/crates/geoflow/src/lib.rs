//! Parametric finite elements for curvature-driven evolution of closed
//! polygonal curves in the plane and closed triangulated surfaces in space.
//!
//! The crate provides mesh handling ([`mesh`]), anisotropic energy densities
//! ([`aniso`]), operator assembly ([`assembly`]), sparse solvers ([`linalg`]),
//! discrete curvature ([`curvature`]), time-stepping schemes ([`flows`]) and
//! run diagnostics ([`diagnostics`]).

pub mod aniso;
pub mod assembly;
pub mod curvature;
pub mod diagnostics;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
pub use mesh::Mesh;
