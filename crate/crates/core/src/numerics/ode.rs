use crate::error::{Error, Result};
use crate::numerics::Vector;

/// Classical fixed-step RK4 integration of an autonomous field from `t0` to
/// `t1`. The final step is shortened to land exactly on `t1`; `t1 < t0`
/// integrates the time-reversed field. Non-finite states fail loudly.
pub fn integrate(
    field: &dyn Fn(&Vector) -> Vector,
    z: &Vector,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Vector> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Precondition(format!("integration step must be positive, got {step}")));
    }
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::Precondition("integration endpoints must be finite".into()));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite("integrate initial state"));
    }

    let span = t1 - t0;
    let sign = if span < 0.0 { -1.0 } else { 1.0 };
    let mut remaining = span.abs();
    let mut state = z.clone();
    let eval = |v: &Vector| -> Result<Vector> {
        let f = field(v);
        assert_eq!(f.dim(), v.dim(), "field dimension mismatch");
        if !f.is_finite() {
            return Err(Error::NonFinite("integrate field evaluation"));
        }
        Ok(f.scale(sign))
    };

    while remaining > 0.0 {
        let h = step.min(remaining);
        let k1 = eval(&state)?;
        let k2 = eval(&state.add(&k1.scale(0.5 * h)))?;
        let k3 = eval(&state.add(&k2.scale(0.5 * h)))?;
        let k4 = eval(&state.add(&k3.scale(h)))?;
        let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4).scale(h / 6.0);
        state = state.add(&incr);
        if !state.is_finite() {
            return Err(Error::NonFinite("integrate state"));
        }
        remaining -= h;
    }
    Ok(state)
}
