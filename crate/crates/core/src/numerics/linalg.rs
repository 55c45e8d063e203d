use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// LU decomposition with partial pivoting, factored in place.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

fn factor(m: &Matrix, context: &'static str) -> Result<Lu> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{context}: LU needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < f64::EPSILON * (1.0 + lu.max_abs()) {
            return Err(Error::Singular(context));
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
        }
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                lu[(i, j)] -= factor * lu[(k, j)];
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solves `m x = b` by LU with partial pivoting.
pub fn lu_solve(m: &Matrix, b: &[f64], context: &'static str) -> Result<Vec<f64>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "{context}: rhs length {} does not match {} rows",
            b.len(),
            m.rows()
        )));
    }
    Ok(factor(m, context)?.solve(b))
}

/// Dense inverse via LU column solves.
pub fn lu_inverse(m: &Matrix, context: &'static str) -> Result<Matrix> {
    let n = m.rows();
    let lu = factor(m, context)?;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn solves_small_system() {
        let m = Matrix::new(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let x = lu_solve(&m, &[5.0, 10.0], "test").unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::new(3, 3, vec![4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let inv = lu_inverse(&m, "test").unwrap();
        let prod = m.mul(&inv);
        let id = Matrix::identity(3);
        assert!(prod.sub(&id).max_abs() < 1e-13);
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::new(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu_solve(&m, &[1.0, 1.0], "test"), Err(Error::Singular(_))));
    }
}
