//! Cylindrical width of finite transitive sets.
//!
//! The crate builds probability measures on Grassmannians whose random
//! subspaces have small projections onto every point of an orbit, together
//! with the estimators needed to check that numerically:
//!
//! * [`vectors`]: vectors, orthonormal bases, decreasing rearrangement, `Dom(v)`.
//! * [`tnorm`]: the delocalization norm and Gaussian experiments around it.
//! * [`groups`]: finite unitary groups, orbits, signed permutations.
//! * [`measures`]: Grassmannian samplers and their combinators.
//! * [`width`]: suprema of projections over groups, orbits and `Dom(v)`.
//! * [`lowerbound`]: the extremal witness orbit, σ-profiles, Selberg's inequality.
//! * [`rip`]: restricted-invertibility column selection and the real reduction.
//! * [`experiment`]: the batch runner behind the `cylwidth` binary.

pub mod error;
pub mod experiment;
pub mod groups;
pub mod lowerbound;
pub mod measures;
pub mod rip;
pub mod rng;
pub mod tnorm;
pub mod vectors;
pub mod width;

pub use nalgebra;
pub use nalgebra::Complex;

/// Complex double, the scalar type of every vector and basis.
pub type C64 = Complex<f64>;

pub use error::{Error, Result};
pub use vectors::{Field, SubspaceBasis, Vector};
