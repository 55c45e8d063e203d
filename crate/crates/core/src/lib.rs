//! Numerical toolkit for hyperbolic linearization: hypothesis verification
//! (cone conditions, covering thresholds, isolating segments) and explicit
//! construction of the conjugating homeomorphism between a hyperbolic linear
//! system and its Lipschitz-bounded perturbation by finite-window shadowing,
//! with quantitative Hölder-exponent estimates for the conjugacy.
//!
//! Scope is "desk scale": dense linear algebra on small blocks, fixed-step
//! integration, and fully deterministic seeded sampling.

pub mod cones;
pub mod covering;
mod error;
pub mod holder;
pub mod localize;
pub mod numerics;
pub mod reference;
mod sampling;
pub mod segments;
pub mod shadowing;
pub mod systems;

pub use error::{Error, Result};
pub use numerics::{Matrix, Vector};
pub use systems::{
    HyperbolicLinearField, HyperbolicLinearMap, MapSystem, OdeSystem, Perturbation, Splitting,
};
