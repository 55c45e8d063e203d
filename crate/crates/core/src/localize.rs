//! Localization: a C¹ radial cutoff t that is the identity near the origin
//! and saturates at a plateau value w < δ, the induced radial retraction
//! R(z) = t(‖z‖)·z/‖z‖ with ‖DR‖ ≤ max(t(r)/r, t′(r)) ≈ 1, and the
//! globalization step that replaces a perturbation h known to be small only
//! on the δ-ball with h∘R, which carries the global bounds M̂ = εδ and
//! ε̂ = ε·sup‖DR‖ while agreeing with h on the ball of radius δ/2.

use crate::error::{Error, Result};
use crate::numerics::{operator_norm_2, Matrix, Vector};
use crate::sampling;
use crate::systems::{HyperbolicLinearMap, MapSystem, Perturbation, PerturbationFamily};

const PROFILE_VALIDATION_SAMPLES: usize = 2048;

/// Radial cutoff profile: t(r) = r for r ≤ δ/2, a cubic Hermite blend on
/// [δ/2, δ] with t(δ/2) = δ/2, t′(δ/2) = 1, t(δ) = w, t′(δ) = 0, and
/// t(r) = w for r ≥ δ. Construction validates 0 < t′ < 1 on the open blend
/// interval by dense sampling and rejects profiles that violate it.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffProfile {
    delta: f64,
    plateau: f64,
    derivative_bound: f64,
}

impl CutoffProfile {
    /// Standard profile with plateau w = 3δ/4.
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!("cutoff delta must be positive, got {delta}")));
        }
        Self::with_plateau(delta, 0.75 * delta)
    }

    /// Profile with an explicit plateau value w ∈ (δ/2, δ).
    pub fn with_plateau(delta: f64, plateau: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!("cutoff delta must be positive, got {delta}")));
        }
        if !(plateau > 0.5 * delta && plateau < delta) {
            return Err(Error::Precondition(format!(
                "cutoff plateau must lie in (delta/2, delta) = ({}, {delta}), got {plateau}",
                0.5 * delta
            )));
        }
        let mut profile = Self { delta, plateau, derivative_bound: 1.0 };
        profile.derivative_bound = profile.validate()?;
        Ok(profile)
    }

    /// Dense sampling over the blend interval: requires 0 < t′ < 1 and
    /// t(r) ≤ r, and returns the retraction derivative bound
    /// sup max(t(r)/r, t′(r)), which must not exceed 1 + 1e-9.
    fn validate(&self) -> Result<f64> {
        let a = 0.5 * self.delta;
        let mut bound: f64 = 1.0; // attained on r ≤ δ/2 where t is the identity
        for i in 1..PROFILE_VALIDATION_SAMPLES {
            let r = a + (self.delta - a) * (i as f64 / PROFILE_VALIDATION_SAMPLES as f64);
            let t = self.cutoff(r);
            let dt = self.cutoff_derivative(r);
            if !(dt > 0.0 && dt < 1.0) {
                return Err(Error::Precondition(format!(
                    "cutoff slope must stay in (0, 1) on the blend interval; t'({r}) = {dt}"
                )));
            }
            if t > r {
                return Err(Error::Precondition(format!(
                    "cutoff must satisfy t(r) ≤ r; t({r}) = {t}"
                )));
            }
            bound = bound.max(t / r).max(dt);
        }
        if bound > 1.0 + 1e-9 {
            return Err(Error::Precondition(format!(
                "retraction derivative bound {bound} exceeds 1 + 1e-9"
            )));
        }
        Ok(bound)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    /// sup‖DR‖ over all radii (≤ 1 + 1e-9 by construction).
    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }

    /// Cutoff value t(r).
    pub fn cutoff(&self, r: f64) -> f64 {
        let a = 0.5 * self.delta;
        if r <= a {
            return r;
        }
        if r >= self.delta {
            return self.plateau;
        }
        let h = self.delta - a;
        let s = (r - a) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        // m1 = 0, so the h11 term drops out
        h00 * a + h10 * h + h01 * self.plateau
    }

    /// Cutoff slope t′(r).
    pub fn cutoff_derivative(&self, r: f64) -> f64 {
        let a = 0.5 * self.delta;
        if r <= a {
            return 1.0;
        }
        if r >= self.delta {
            return 0.0;
        }
        let h = self.delta - a;
        let s = (r - a) / h;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -6.0 * s * s + 6.0 * s;
        (dh00 * a + dh10 * h + dh01 * self.plateau) / h
    }

    /// Radial retraction R(z) = t(‖z‖)·z/‖z‖ (identity inside the δ/2-ball).
    pub fn retract(&self, z: &[f64]) -> Vec<f64> {
        let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r <= 0.5 * self.delta {
            return z.to_vec();
        }
        let scale = self.cutoff(r) / r;
        z.iter().map(|x| x * scale).collect()
    }

    /// DR(z) = (t(r)/r)(I − ẑẑᵀ) + t′(r)·ẑẑᵀ.
    pub fn retraction_jacobian(&self, z: &[f64]) -> Matrix {
        let n = z.len();
        let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r <= 0.5 * self.delta {
            return Matrix::identity(n);
        }
        let tangential = self.cutoff(r) / r;
        let radial = self.cutoff_derivative(r);
        Matrix::from_fn(n, n, |i, j| {
            let zij = z[i] * z[j] / (r * r);
            let kronecker = if i == j { 1.0 } else { 0.0 };
            tangential * (kronecker - zij) + radial * zij
        })
    }
}

/// Outcome of globalizing a locally bounded perturbation.
#[derive(Debug, Clone)]
pub struct GlobalizedSystem {
    pub profile: CutoffProfile,
    pub coeffs: Vec<f64>,
    /// Requested local derivative bound ε (audited on the δ-ball).
    pub eps_requested: f64,
    /// Analytic sup of ‖Dh‖₂ over the δ-ball.
    pub analytic_dh_bound: f64,
    /// Seeded empirical max of ‖Dh‖₂ over the δ-ball.
    pub sampled_dh_max: f64,
    /// Global bound M̂ = εδ on ‖h∘R‖.
    pub m_hat: f64,
    /// Global bound ε̂ = ε·sup‖DR‖ on ‖D(h∘R)‖₂.
    pub eps_hat: f64,
    /// The composed map agrees with the original on this ball: δ/2.
    pub guarantee_radius: f64,
}

const GLOBALIZE_AUDIT_SAMPLES: usize = 512;
const GLOBALIZE_AUDIT_SEED: u64 = 0x10ca11ce;

/// Globalizes the locally small diagonal-quadratic perturbation
/// h_i(v) = c_i·v_i² (which satisfies h(0) = 0, Dh(0) = 0): audits
/// ‖Dh‖ ≤ ε on the δ-ball both analytically and on seeded samples, then
/// returns the globalized descriptor together with a `MapSystem` for
/// g(z) = Az + (h∘R)(z) carrying the certified global bounds.
pub fn globalize(
    linear: &HyperbolicLinearMap,
    coeffs: &[f64],
    eps: f64,
    delta: f64,
) -> Result<(GlobalizedSystem, MapSystem)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("requested eps must be positive, got {eps}")));
    }
    let splitting = linear.splitting();
    let n = splitting.dim();
    if coeffs.len() != n {
        return Err(Error::Dimension(format!(
            "quadratic coefficients: expected {n} entries, got {}",
            coeffs.len()
        )));
    }
    let profile = CutoffProfile::new(delta)?;

    // analytic audit: ‖Dh(v)‖₂ = max_i 2|c_i||v_i| ≤ 2 max|c_i|·δ on the ball
    let cmax = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let analytic = 2.0 * cmax * delta;
    if analytic > eps * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "requested ε = {eps} but ‖Dh‖ reaches {analytic} on the {delta}-ball"
        )));
    }

    // sampled audit of the same bound
    let mut rng = sampling::rng(GLOBALIZE_AUDIT_SEED);
    let mut sampled_max = 0.0_f64;
    for _ in 0..GLOBALIZE_AUDIT_SAMPLES {
        let v = sampling::in_ball(&mut rng, n, delta);
        let mut dh = Matrix::zeros(n, n);
        for i in 0..n {
            dh[(i, i)] = 2.0 * coeffs[i] * v[i];
        }
        sampled_max = sampled_max.max(operator_norm_2(&dh)?);
    }
    if sampled_max > eps * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "sampled ‖Dh‖ = {sampled_max} exceeds requested ε = {eps} on the {delta}-ball"
        )));
    }

    let m_hat = eps * delta;
    let eps_hat = eps * profile.derivative_bound();
    let family =
        PerturbationFamily::QuadraticCutoff { coeffs: coeffs.to_vec(), profile: profile.clone() };
    let pert = Perturbation::with_declared_bounds(splitting, family, m_hat, eps_hat)?;
    let system = MapSystem::new(linear.clone(), pert, 1.0)?;
    let globalized = GlobalizedSystem {
        profile,
        coeffs: coeffs.to_vec(),
        eps_requested: eps,
        analytic_dh_bound: analytic,
        sampled_dh_max: sampled_max,
        m_hat,
        eps_hat,
        guarantee_radius: 0.5 * delta,
    };
    Ok((globalized, system))
}

/// Evaluates the original (uncut) local map z ↦ Az + h(z); inside the
/// guarantee ball this coincides with the globalized system's map.
pub fn local_map_eval(linear: &HyperbolicLinearMap, coeffs: &[f64], z: &Vector) -> Vector {
    let mut out = linear.apply(z).into_inner();
    for (i, c) in coeffs.iter().enumerate() {
        out[i] += c * z[i] * z[i];
    }
    Vector::new(out)
}
