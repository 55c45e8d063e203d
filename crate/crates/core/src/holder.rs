//! Hölder-regularity quantities for the conjugacy: the effective expansion
//! and contraction rates θ_u = c_u − 2ε and θ_s = 1/(c_s + 2ε), their
//! minimum θ, the Lipschitz constant L of the linear map and its inverse in
//! the block max norm, the exponent γ = ln θ / ln L with its block-wise
//! improvement, and the spectral-radius exponent it is compared against.
//! [`check_basic_estimate`] verifies the two-term distance bound
//! ‖ρ(z₁) − ρ(z₂)‖ ≤ 2α/θᵏ + (L/θ)ᵏ·‖z₁ − z₂‖ on computed conjugacy values,
//! and [`empirical_holder`] fits a log-log slope to measured distances.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{lu_inverse, operator_norm_2, spectral_radius, Matrix, Vector};
use crate::sampling;
use crate::shadowing;
use crate::systems::{HyperbolicLinearMap, MapSystem};

/// Effective hyperbolicity rates under a perturbation with derivative bound
/// ε: (θ_u, θ_s) = (c_u − 2ε, 1/(c_s + 2ε)). Both must stay above 1 for the
/// Hölder machinery to apply.
pub fn thetas(c_u: f64, c_s: f64, eps: f64) -> Result<(f64, f64)> {
    if !(eps >= 0.0) {
        return Err(Error::Precondition(format!(
            "derivative bound must be nonnegative, got {eps}"
        )));
    }
    let theta_u = c_u - 2.0 * eps;
    if !(theta_u > 1.0) {
        return Err(Error::Precondition(format!(
            "effective expansion c_u − 2ε = {theta_u} must exceed 1; \
             the perturbation is too large for the Hölder estimates"
        )));
    }
    let contracted = c_s + 2.0 * eps;
    if !(contracted < 1.0) {
        return Err(Error::Precondition(format!(
            "effective contraction c_s + 2ε = {contracted} must stay below 1; \
             the perturbation is too large for the Hölder estimates"
        )));
    }
    Ok((theta_u, 1.0 / contracted))
}

/// Lipschitz constant of A and A⁻¹ in the block max norm:
/// max(‖A_u‖₂, ‖A_s‖₂, ‖A_u⁻¹‖₂, ‖A_s⁻¹‖₂).
pub fn lipschitz_l(a: &HyperbolicLinearMap) -> Result<f64> {
    let norms = [
        operator_norm_2(a.a_u())?,
        operator_norm_2(a.a_s())?,
        operator_norm_2(a.a_u_inv())?,
        operator_norm_2(a.a_s_inv())?,
    ];
    Ok(norms.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Hölder exponent γ = ln θ / ln L.
pub fn gamma(theta: f64, lipschitz: f64) -> Result<f64> {
    if !(theta > 1.0) {
        return Err(Error::Precondition(format!(
            "Hölder exponent needs θ > 1, got {theta}"
        )));
    }
    if !(lipschitz > 1.0) {
        return Err(Error::Precondition(format!(
            "Hölder exponent needs L > 1, got {lipschitz}; \
             the exponent is undefined at L = 1"
        )));
    }
    Ok(theta.ln() / lipschitz.ln())
}

/// Block-wise improvement of the exponent:
/// min(ln θ_u / ln ‖A_u‖₂, ln θ_s / ln ‖A_s⁻¹‖₂).
pub fn gamma_improved(theta_u: f64, theta_s: f64, a: &HyperbolicLinearMap) -> Result<f64> {
    if !(theta_u > 1.0 && theta_s > 1.0) {
        return Err(Error::Precondition(format!(
            "improved exponent needs θ_u, θ_s > 1, got ({theta_u}, {theta_s})"
        )));
    }
    let nu = operator_norm_2(a.a_u())?;
    let ns = operator_norm_2(a.a_s_inv())?;
    if !(nu > 1.0 && ns > 1.0) {
        return Err(Error::Precondition(format!(
            "improved exponent needs ‖A_u‖, ‖A_s⁻¹‖ > 1, got ({nu}, {ns})"
        )));
    }
    Ok((theta_u.ln() / nu.ln()).min(theta_s.ln() / ns.ln()))
}

/// Spectral-radius Hölder exponent used for comparison:
/// min(−ln r(A_s)/ln r(A_s⁻¹), −ln r(A_u⁻¹)/ln r(A_u)).
pub fn bv_exponent(a_u: &Matrix, a_s: &Matrix) -> Result<f64> {
    let r_u = spectral_radius(a_u)?;
    let r_u_inv = spectral_radius(&lu_inverse(a_u, "unstable block")?)?;
    let r_s = spectral_radius(a_s)?;
    let r_s_inv = spectral_radius(&lu_inverse(a_s, "stable block")?)?;
    for (name, r) in [
        ("r(A_u)", r_u),
        ("r(A_u⁻¹)", r_u_inv),
        ("r(A_s)", r_s),
        ("r(A_s⁻¹)", r_s_inv),
    ] {
        if (r - 1.0).abs() < 1e-14 {
            return Err(Error::Hyperbolicity(format!(
                "{name} = 1: degenerate hyperbolicity, comparison exponent undefined"
            )));
        }
    }
    Ok((-r_s.ln() / r_s_inv.ln()).min(-r_u_inv.ln() / r_u.ln()))
}

/// Bundle of all Hölder quantities for one system at box radius α.
#[derive(Debug, Clone)]
pub struct HolderEstimate {
    pub theta_u: f64,
    pub theta_s: f64,
    /// θ = min(θ_u, θ_s).
    pub theta: f64,
    pub lipschitz_l: f64,
    /// γ = ln θ / ln L.
    pub gamma: f64,
    /// Block-wise improved exponent (≥ γ).
    pub gamma_improved: f64,
    /// Spectral-radius comparison exponent.
    pub bv_alpha0: f64,
    /// Constant C₁ = 2α of the basic estimate.
    pub c1: f64,
    /// Constant C₂ = L/θ of the basic estimate.
    pub c2: f64,
}

/// Compute the full [`HolderEstimate`] for a map system at box radius α,
/// using the system's effective derivative bound λ·ε.
pub fn estimate(sys: &MapSystem, alpha: f64) -> Result<HolderEstimate> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!(
            "box radius must be positive, got {alpha}"
        )));
    }
    let a = sys.linear();
    let (theta_u, theta_s) = thetas(a.c_u(), a.c_s(), sys.effective_eps())?;
    let theta = theta_u.min(theta_s);
    let lipschitz = lipschitz_l(a)?;
    let g = gamma(theta, lipschitz)?;
    let gi = gamma_improved(theta_u, theta_s, a)?;
    let bv = bv_exponent(a.a_u(), a.a_s())?;
    Ok(HolderEstimate {
        theta_u,
        theta_s,
        theta,
        lipschitz_l: lipschitz,
        gamma: g,
        gamma_improved: gi,
        bv_alpha0: bv,
        c1: 2.0 * alpha,
        c2: lipschitz / theta,
    })
}

/// Outcome of checking the two-term basic estimate on computed conjugacy
/// values. The inequality is tested for every pair and every k; it holds on
/// the evidence iff `min_slack` ≥ 0.
#[derive(Debug, Clone)]
pub struct BasicEstimateReport {
    pub pass: bool,
    pub pairs_checked: usize,
    pub k_values: Vec<usize>,
    /// Min over (pair, k) of 2α/θᵏ + (L/θ)ᵏ‖Δz‖ − ‖Δρ‖.
    pub min_slack: f64,
}

/// Verify ‖ρ(z₁) − ρ(z₂)‖ ≤ 2α/θᵏ + (L/θ)ᵏ·‖z₁ − z₂‖ for every pair and
/// every k in `k_values`, with ρ computed at (α, K) and the solver's default
/// tolerance. Distances are block max norms.
pub fn check_basic_estimate(
    sys: &MapSystem,
    pairs: &[(Vector, Vector)],
    k_values: &[usize],
    alpha: f64,
    k_window: usize,
) -> Result<BasicEstimateReport> {
    let est = estimate(sys, alpha)?;
    let spl = sys.splitting();
    let mut min_slack = f64::INFINITY;
    for (z1, z2) in pairs {
        let r1 = shadowing::rho(sys, z1, alpha, k_window, shadowing::DEFAULT_TOL)?;
        let r2 = shadowing::rho(sys, z2, alpha, k_window, shadowing::DEFAULT_TOL)?;
        let image_dist = spl.block_max_norm(&r1.value.sub(&r2.value));
        let base_dist = spl.block_max_norm(&z1.sub(z2));
        for &k in k_values {
            let bound = est.c1 / est.theta.powi(k as i32)
                + (est.lipschitz_l / est.theta).powi(k as i32) * base_dist;
            min_slack = min_slack.min(bound - image_dist);
        }
    }
    Ok(BasicEstimateReport {
        pass: min_slack >= 0.0,
        pairs_checked: pairs.len(),
        k_values: k_values.to_vec(),
        min_slack,
    })
}

/// Log-log regression of conjugacy image distances against input distances
/// over a band of offsets.
#[derive(Debug, Clone)]
pub struct EmpiricalHolderFit {
    /// Input distances ‖z₁ − z₂‖ (block max norm), sorted ascending.
    pub distances: Vec<f64>,
    /// Image distances ‖ρ(z₁) − ρ(z₂)‖, ordered like `distances`.
    pub image_distances: Vec<f64>,
    /// Least-squares slope of ln(image distance) vs ln(distance).
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// Reference exponent γ = ln θ / ln L of the system.
    pub gamma_reference: f64,
    /// Max over pairs of ‖Δρ‖ / ‖Δz‖^γ.
    pub max_ratio: f64,
    /// The proof's ratio constant C₁ + C₂ = 2α + L/θ.
    pub ratio_bound: f64,
}

/// Fit the empirical Hölder slope of ρ: one seeded offset per base point,
/// with block-max distance drawn log-uniformly from `band` ⊂ (0, 1). Pairs
/// are sorted by distance before the regression so that the result does not
/// depend on evaluation order.
pub fn empirical_holder(
    sys: &MapSystem,
    base_points: &[Vector],
    band: (f64, f64),
    alpha: f64,
    k_window: usize,
    seed: u64,
) -> Result<EmpiricalHolderFit> {
    let (d_min, d_max) = band;
    if !(d_min > 0.0 && d_min < d_max && d_max < 1.0) {
        return Err(Error::Precondition(format!(
            "offset band must satisfy 0 < d_min < d_max < 1, got [{d_min}, {d_max}]"
        )));
    }
    if base_points.len() < 2 {
        return Err(Error::Precondition(
            "empirical fit needs at least two base points".into(),
        ));
    }
    let est = estimate(sys, alpha)?;
    let spl = sys.splitting();
    let mut rng = sampling::rng(seed);
    let mut samples = Vec::with_capacity(base_points.len());
    for z1 in base_points {
        let dir = Vector::new(sampling::unit_sphere(&mut rng, spl.dim()));
        let unit_block = spl.block_max_norm(&dir);
        let d = d_min * (d_max / d_min).powf(rng.gen::<f64>());
        let z2 = z1.add(&dir.scale(d / unit_block));
        let r1 = shadowing::rho(sys, z1, alpha, k_window, shadowing::DEFAULT_TOL)?;
        let r2 = shadowing::rho(sys, &z2, alpha, k_window, shadowing::DEFAULT_TOL)?;
        let image = spl.block_max_norm(&r1.value.sub(&r2.value));
        samples.push((d, image));
    }
    samples.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let logs: Vec<(f64, f64)> =
        samples.iter().map(|&(d, i)| (d.ln(), i.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition(
            "empirical fit needs at least two distinct distances".into(),
        ));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (logs
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let max_ratio = samples
        .iter()
        .map(|&(d, i)| i / d.powf(est.gamma))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EmpiricalHolderFit {
        distances: samples.iter().map(|p| p.0).collect(),
        image_distances: samples.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        residual,
        gamma_reference: est.gamma,
        max_ratio,
        ratio_bound: est.c1 + est.c2,
    })
}
