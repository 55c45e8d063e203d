use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const POWER_ITERATION_CAP: usize = 100_000;

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Deterministic nudge applied when power iteration stagnates, e.g. when the
/// all-ones start is orthogonal to the dominant eigenvector.
fn perturb(v: &mut [f64]) {
    for (i, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * (1.0 + (i % 3) as f64);
    }
    normalize(v);
}

/// Euclidean operator norm (largest singular value), computed by power
/// iteration on mᵀm from the all-ones vector. Stagnation without convergence
/// triggers one fixed perturbation; exceeding the iteration cap is an error.
pub fn operator_norm_2(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "operator_norm_2 expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("operator_norm_2 input"));
    }
    let n = m.rows();
    if n == 0 {
        return Err(Error::Dimension("operator_norm_2 expects a non-empty matrix".into()));
    }
    let gram = m.transpose().mul(m); // symmetric PSD, eigenvalues = squared singular values
    let scale = gram.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }

    let mut v = vec![1.0; n];
    normalize(&mut v);
    let mut lambda_prev = f64::INFINITY;
    let mut perturbed = false;
    for _ in 0..POWER_ITERATION_CAP {
        let mut w = gram.mul_vec(&v);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual: f64 = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-10 * scale {
            // The start may sit exactly on a non-dominant eigenvector (the
            // all-ones vector can be orthogonal to the dominant direction):
            // nudge once and require re-convergence before accepting.
            if perturbed {
                return Ok(lambda.max(0.0).sqrt());
            }
            perturbed = true;
            perturb(&mut v);
            lambda_prev = f64::INFINITY;
            continue;
        }
        let stagnant = (lambda - lambda_prev).abs() <= 1e-14 * lambda.abs().max(scale * 1e-8);
        if stagnant && !perturbed {
            perturbed = true;
            perturb(&mut v);
            lambda_prev = f64::INFINITY;
            continue;
        }
        lambda_prev = lambda;
        if normalize(&mut w) == 0.0 {
            // v lies in the kernel of the Gram matrix; restart off-axis.
            perturb(&mut v);
            continue;
        }
        v = w;
    }
    Err(Error::NoConvergence { what: "operator_norm_2 power iteration", iterations: POWER_ITERATION_CAP })
}

/// Extreme eigenvalues (λ_min, λ_max) of a symmetric matrix by cyclic Jacobi
/// rotations. Inputs asymmetric beyond 1e-12 are rejected; smaller asymmetry
/// is symmetrized by averaging.
pub fn sym_eig_extremes(m: &Matrix) -> Result<(f64, f64)> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "sym_eig_extremes expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let asym = m.asymmetry();
    if asym > 1e-12 * (1.0 + m.max_abs()) {
        return Err(Error::Precondition(format!(
            "sym_eig_extremes expects a symmetric matrix (asymmetry {asym:.3e})"
        )));
    }
    let eigs = jacobi_eigenvalues(&m.symmetrized())?;
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// All eigenvalues of a symmetric matrix via cyclic Jacobi sweeps.
fn jacobi_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if n == 0 {
        return Err(Error::Dimension("jacobi expects a non-empty matrix".into()));
    }
    let mut a = m.clone();
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            return Ok((0..n).map(|i| a[(i, i)]).collect());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NoConvergence { what: "jacobi eigenvalue sweeps", iterations: MAX_SWEEPS })
}

/// Spectral radius of a general square matrix: power iteration for a dominant
/// real eigenvalue, falling back to characteristic-polynomial roots for small
/// matrices when the iteration does not settle (complex dominant pairs,
/// defective dominant blocks).
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "spectral_radius expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n == 0 {
        return Err(Error::Dimension("spectral_radius expects a non-empty matrix".into()));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }

    const CAP: usize = 5_000;
    let mut v = vec![1.0; n];
    normalize(&mut v);
    let mut lambda_prev = f64::INFINITY;
    let mut perturbed = false;
    for _ in 0..CAP {
        let w = m.mul_vec(&v);
        let lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual: f64 = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-10 * scale && (lambda - lambda_prev).abs() <= 1e-10 * lambda.abs().max(1e-300) {
            // settle once more after a nudge so a non-dominant eigenvector
            // start cannot masquerade as the answer
            if perturbed {
                return Ok(lambda.abs());
            }
            perturbed = true;
            perturb(&mut v);
            lambda_prev = f64::INFINITY;
            continue;
        }
        lambda_prev = lambda;
        let mut w = w;
        if normalize(&mut w) == 0.0 {
            perturb(&mut v);
            continue;
        }
        v = w;
    }

    const CHARPOLY_LIMIT: usize = 10;
    if n > CHARPOLY_LIMIT {
        return Err(Error::NoConvergence { what: "spectral_radius power iteration", iterations: CAP });
    }
    let coeffs = characteristic_polynomial(m);
    let roots = durand_kerner(&coeffs)?;
    Ok(roots.iter().map(|r| r.norm()).fold(0.0, f64::max))
}

/// Monic characteristic polynomial coefficients [a_1, …, a_n] of
/// λⁿ + a_1 λⁿ⁻¹ + … + a_n, by the Faddeev–LeVerrier recursion.
fn characteristic_polynomial(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut coeffs = Vec::with_capacity(n);
    let mut mk = m.clone();
    for k in 1..=n {
        let trace: f64 = (0..n).map(|i| mk[(i, i)]).sum();
        let ak = -trace / k as f64;
        coeffs.push(ak);
        if k < n {
            let mut shifted = mk;
            for i in 0..n {
                shifted[(i, i)] += ak;
            }
            mk = m.mul(&shifted);
        }
    }
    coeffs
}

/// Durand–Kerner simultaneous root iteration on a monic polynomial.
fn durand_kerner(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    let eval = |z: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for &c in coeffs {
            p = p * z + c;
        }
        p
    };
    let bound = 1.0 + coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32 + 1) * bound).collect();
    const CAP: usize = 500;
    for _ in 0..CAP {
        let mut shift = 0.0_f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                roots[i] += Complex64::new(1e-8, 1e-8);
                shift = f64::INFINITY;
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            shift = shift.max(delta.norm());
        }
        if shift <= 1e-14 * bound {
            return Ok(roots);
        }
    }
    Err(Error::NoConvergence { what: "durand-kerner root iteration", iterations: CAP })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn operator_norm_of_identity() {
        let m = Matrix::identity(3);
        assert_abs_diff_eq!(operator_norm_2(&m).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let m = Matrix::block_diag(
            &Matrix::new(1, 1, vec![2.0]).unwrap(),
            &Matrix::new(1, 1, vec![0.5]).unwrap(),
        );
        assert_abs_diff_eq!(operator_norm_2(&m).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn operator_norm_rejects_non_square() {
        let m = Matrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(operator_norm_2(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn operator_norm_handles_start_orthogonal_to_dominant_direction() {
        // Dominant singular direction (1, -1)/sqrt(2), orthogonal to the
        // all-ones start: the stagnation perturbation must kick in.
        let m = Matrix::new(2, 2, vec![2.0, -1.0, -1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(operator_norm_2(&m).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn operator_norm_of_zero_matrix() {
        assert_eq!(operator_norm_2(&Matrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn sym_eig_extremes_of_diagonal() {
        let m = Matrix::new(2, 2, vec![4.0, 0.0, 0.0, -0.25]).unwrap();
        let (lo, hi) = sym_eig_extremes(&m).unwrap();
        assert_abs_diff_eq!(lo, -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let m = Matrix::new(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(sym_eig_extremes(&m), Err(Error::Precondition(_))));
    }

    #[test]
    fn sym_eig_known_2x2() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let m = Matrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (lo, hi) = sym_eig_extremes(&m).unwrap();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_radius_of_diagonal() {
        let m = Matrix::new(2, 2, vec![2.0, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn spectral_radius_of_rotation() {
        // Rotation by 90°: eigenvalues ±i, radius 1; power iteration cannot
        // settle, so the characteristic-root fallback must answer.
        let m = Matrix::new(2, 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn spectral_radius_of_triangular() {
        let m = Matrix::new(2, 2, vec![2.0, 1.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn spectral_radius_start_orthogonal_to_dominant_direction() {
        let m = Matrix::new(2, 2, vec![2.0, -1.0, -1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 3.0, epsilon = 1e-8);
    }

    #[test]
    fn spectral_radius_of_defective_block() {
        // Jordan block [[2,1],[0,2]]: defective dominant eigenvalue.
        let m = Matrix::new(2, 2, vec![2.0, 1.0, 0.0, 2.0]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&m).unwrap(), 2.0, epsilon = 1e-8);
    }
}
