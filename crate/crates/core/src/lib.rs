//! Propagation and closed-form verification of a time-dependent non-Hermitian
//! two-level system driven through exceptional points.
//!
//! The crate is organized around five pieces:
//!
//! - [`algebra`]: complex 2×2 matrices, density matrices with a log-norm
//!   ledger, and Bloch-vector projection.
//! - [`passages`]: declarative time-dependent Hamiltonian families (diabatic,
//!   adiabatic, constant-coupling), the rotation between lab and Jordan
//!   frames, and exceptional-point location.
//! - [`oracle`]: the exactly solvable diabatic passage — normalized Hermite
//!   functions, exact states and densities, coalescence and turning times.
//! - [`integrator`]: Euler and RK4 propagation of states and density matrices
//!   under any passage, with renormalization and convergence-order estimation.
//! - [`experiments`]: seeded ensembles, attractor-convergence metrics, and
//!   the fixed figure datasets.

pub mod algebra;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod oracle;
pub mod passages;

pub use algebra::{BlochVector, DensityMatrix, Mat2C, StateVec2, C64};
pub use error::CoreError;
