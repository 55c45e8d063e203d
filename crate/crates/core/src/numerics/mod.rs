//! Deterministic dense numerical kernels at desk scale (blocks up to ~20×20):
//! row-major matrices, LU solves, power/Jacobi eigen-iterations, damped
//! Newton, classical RK4 integration, scaled-and-squared matrix exponential,
//! and Gauss–Legendre quadrature nodes.
//!
//! Every routine is deterministic: fixed starting vectors, fixed perturbation
//! schedules on stagnation, and explicit iteration caps that fail loudly.

mod eig;
mod expm;
mod linalg;
mod matrix;
mod newton;
mod ode;
mod quadrature;

pub use eig::{operator_norm_2, spectral_radius, sym_eig_extremes};
pub use expm::matrix_exp;
pub use linalg::{lu_inverse, lu_solve};
pub use matrix::{Matrix, Vector};
pub use newton::newton_solve;
pub use ode::integrate;
pub use quadrature::gauss_legendre_01;
