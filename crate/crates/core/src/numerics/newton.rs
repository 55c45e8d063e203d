use crate::error::{Error, Result};
use crate::numerics::linalg::lu_solve;
use crate::numerics::{Matrix, Vector};

/// Damped Newton iteration: full steps with up to 30 halvings per step until
/// the residual sup-norm decreases; converges when ‖residual‖_∞ ≤ `tol`.
///
/// `residual` and `jacobian` are evaluated at the same points; the Jacobian
/// must be consistent with the residual (tests audit this by finite
/// differences).
pub fn newton_solve(
    residual: &dyn Fn(&Vector) -> Vector,
    jacobian: &dyn Fn(&Vector) -> Matrix,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<Vector> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Precondition(format!("newton_solve tolerance must be positive, got {tol}")));
    }
    let mut x = x0.clone();
    let mut r = residual(&x);
    if r.dim() != x.dim() {
        return Err(Error::Dimension(format!(
            "newton_solve residual has dimension {}, expected {}",
            r.dim(),
            x.dim()
        )));
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("newton_solve residual"));
    }
    let mut r_norm = r.norm_inf();
    for _ in 0..max_iter {
        if r_norm <= tol {
            return Ok(x);
        }
        let j = jacobian(&x);
        if j.rows() != x.dim() || j.cols() != x.dim() {
            return Err(Error::Dimension(format!(
                "newton_solve jacobian is {}x{}, expected {0}x{0} with {n} unknowns",
                j.rows(),
                j.cols(),
                n = x.dim()
            )));
        }
        let step = Vector::new(lu_solve(&j, &r, "newton_solve")?);

        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate = x.sub(&step.scale(damping));
            let r_new = residual(&candidate);
            if r_new.is_finite() && r_new.norm_inf() < r_norm {
                x = candidate;
                r = r_new;
                r_norm = r.norm_inf();
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { what: "newton_solve damping", iterations: 30 });
        }
    }
    if r_norm <= tol {
        return Ok(x);
    }
    Err(Error::NoConvergence { what: "newton_solve", iterations: max_iter })
}
