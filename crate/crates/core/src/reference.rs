//! Canonical reference systems shared by tests, benchmarks, and CLI
//! fixtures. All have one expanding and one contracting direction and a
//! perturbation of amplitude 0.05, giving M = ε = 0.05.

use crate::numerics::Matrix;
use crate::systems::{
    HyperbolicLinearField, HyperbolicLinearMap, MapSystem, OdeSystem, Perturbation,
    PerturbationFamily, Splitting,
};

fn splitting() -> Splitting {
    Splitting::new(1, 1).unwrap()
}

fn map_linear() -> HyperbolicLinearMap {
    HyperbolicLinearMap::new(
        Matrix::new(1, 1, vec![2.0]).unwrap(),
        Matrix::new(1, 1, vec![0.5]).unwrap(),
    )
    .unwrap()
}

/// Discrete reference map: A = diag(2, 1/2), h(x, y) = 0.05·(sin y, sin x).
/// Constants: c_u = 2, c_s = 1/2, ε₁ = 1/2, M = ε = 0.05, h(0) = 0.
pub fn e1() -> MapSystem {
    e1_with_amplitude(0.05)
}

/// The reference map with a different perturbation amplitude (the bounds
/// scale with it; amplitudes ≥ ε₁ yield systems valid only for checks).
pub fn e1_with_amplitude(amplitude: f64) -> MapSystem {
    let pert =
        Perturbation::new(splitting(), PerturbationFamily::TrigSum { amplitude }).unwrap();
    MapSystem::new(map_linear(), pert, 1.0).unwrap()
}

/// Variant with h(x, y) = 0.05·(cos y, cos x): same bounds, but h(0) ≠ 0, so
/// the conjugacy no longer fixes the origin.
pub fn e1_prime() -> MapSystem {
    let pert = Perturbation::new(
        splitting(),
        PerturbationFamily::CosineOffset { amplitude: 0.05 },
    )
    .unwrap();
    MapSystem::new(map_linear(), pert, 1.0).unwrap()
}

/// Continuous reference field: z' = Az + h(z) with A = diag(1, -1) and the
/// same trigonometric perturbation; c_u = c_s = 1.
pub fn e2() -> OdeSystem {
    let linear = HyperbolicLinearField::new(
        Matrix::new(1, 1, vec![1.0]).unwrap(),
        Matrix::new(1, 1, vec![-1.0]).unwrap(),
    )
    .unwrap();
    let pert =
        Perturbation::new(splitting(), PerturbationFamily::TrigSum { amplitude: 0.05 }).unwrap();
    OdeSystem::new(linear, pert, 1.0, 0.01).unwrap()
}
