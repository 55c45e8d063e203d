use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Matrix exponential e^{a·t} by scaling and squaring: the scaled block is
/// pushed below norm 1/2, expanded in a truncated Taylor series whose tail is
/// below machine precision, then squared back up.
pub fn matrix_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix_exp expects a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite("matrix_exp input"));
    }
    let n = a.rows();
    let b = a.scale(t);

    // max row sum bounds the spectral norm; cheap and adequate for scaling
    let mut inf_norm = 0.0_f64;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| b[(i, j)].abs()).sum();
        inf_norm = inf_norm.max(row);
    }
    let squarings = if inf_norm <= 0.5 { 0 } else { (inf_norm / 0.5).log2().ceil() as u32 };
    let c = b.scale(0.5_f64.powi(squarings as i32));

    // Taylor series: with ‖c‖ ≤ 1/2 the 20-term tail is < 1e-24.
    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=20 {
        term = term.mul(&c).scale(1.0 / k as f64);
        sum = sum.add(&term);
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    if !result.is_finite() {
        return Err(Error::NonFinite("matrix_exp result"));
    }
    Ok(result)
}
