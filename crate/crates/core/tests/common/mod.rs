//! Independent oracles for cross-checking the library's solvers. Both are
//! deliberately different in method from what they validate: a block-sweep
//! fixed-point iteration instead of Newton on the stacked window, and a
//! derivative-free grid refinement instead of a Newton root find.

use hypconj::{MapSystem, Vector};

/// Middle point of the shadowing window computed by Banach fixed-point
/// sweeps instead of Newton: anchors A^k z for |k| ≤ K, deviations v_k
/// updated by the contraction sweeps
///
///   forward  v_{k+1,y} = A_s v_{k,y} + λ h_y(a_k + v_k) + d_{k,y}
///   backward v_{k,x}   = A_u⁻¹ (v_{k+1,x} − λ h_x(a_k + v_k) − d_{k,x})
///
/// with d_k = A a_k − a_{k+1} the anchor defects and the boundary pins
/// v_{−K,y} = 0, v_{K,x} = 0. Panics if the sweeps fail to settle — this is
/// a test oracle, not an API.
pub fn banach_shadow(
    sys: &MapSystem,
    z: &Vector,
    half_window: usize,
    tol: f64,
    max_sweeps: usize,
) -> Vector {
    let spl = sys.splitting();
    let n = spl.dim();
    let (u, s) = (spl.u(), spl.s());
    let linear = sys.linear();
    let lambda = sys.lambda();
    let len = 2 * half_window + 1;

    let mut anchors = vec![Vector::zeros(n); len];
    anchors[half_window] = z.clone();
    for k in half_window..len - 1 {
        anchors[k + 1] = linear.apply(&anchors[k]);
    }
    for k in (0..half_window).rev() {
        anchors[k] = linear.apply_inverse(&anchors[k + 1]);
    }
    let defects: Vec<Vector> = (0..len - 1)
        .map(|k| linear.apply(&anchors[k]).sub(&anchors[k + 1]))
        .collect();

    let mut v = vec![Vector::zeros(n); len];
    for sweep in 0..max_sweeps {
        let mut change = 0.0_f64;
        // Forward sweep for the contracting block.
        for k in 0..len - 1 {
            let point = anchors[k].add(&v[k]);
            let h = sys.pert().value(&point).scale(lambda);
            let (_, h_y) = spl.split(&h);
            let (_, v_y) = spl.split(&v[k]);
            let (_, d_y) = spl.split(&defects[k]);
            let a_s_v = linear.a_s().mul_vec(v_y);
            let new_y: Vec<f64> =
                (0..s).map(|i| a_s_v[i] + h_y[i] + d_y[i]).collect();
            let (old_x, old_y) = spl.split(&v[k + 1]);
            let old_x = old_x.to_vec();
            change = new_y
                .iter()
                .zip(old_y)
                .fold(change, |c, (a, b)| c.max((a - b).abs()));
            v[k + 1] = spl.join(&old_x, &new_y);
        }
        // Backward sweep for the expanding block.
        for k in (0..len - 1).rev() {
            let point = anchors[k].add(&v[k]);
            let h = sys.pert().value(&point).scale(lambda);
            let (h_x, _) = spl.split(&h);
            let (v_next_x, _) = spl.split(&v[k + 1]);
            let (d_x, _) = spl.split(&defects[k]);
            let rhs: Vec<f64> = (0..u).map(|i| v_next_x[i] - h_x[i] - d_x[i]).collect();
            let new_x = linear.a_u_inv().mul_vec(&rhs);
            let (old_x, old_y) = spl.split(&v[k]);
            let old_y = old_y.to_vec();
            change = new_x
                .iter()
                .zip(old_x)
                .fold(change, |c, (a, b)| c.max((a - b).abs()));
            v[k] = spl.join(&new_x, &old_y);
        }
        if change < tol {
            return anchors[half_window].add(&v[half_window]);
        }
        assert!(
            sweep + 1 < max_sweeps,
            "fixed-point sweeps did not settle below {tol} in {max_sweeps} rounds"
        );
    }
    unreachable!("sweep loop always returns or panics");
}

/// Fixed point of the planar map by derivative-free grid refinement: scan a
/// 17×17 grid for the smallest ‖g(z) − z‖_∞, re-center, shrink, repeat until
/// the box is below 1e−13. The shrink factor 3/8 keeps the true zero inside
/// every refined box as long as ‖Dg − I‖ / σ_min(Dg − I) ≲ 2 on the start
/// box, which holds comfortably for the reference maps.
#[allow(dead_code)] // each integration-test binary compiles this module separately
pub fn grid_fixed_point(sys: &MapSystem, center: &Vector, half_width: f64) -> Vector {
    assert_eq!(sys.splitting().dim(), 2, "grid oracle is planar");
    const POINTS: usize = 17;
    let mut c = center.clone();
    let mut h = half_width;
    while h > 1e-13 {
        let step = 2.0 * h / (POINTS - 1) as f64;
        let mut best = (f64::INFINITY, c.clone());
        for i in 0..POINTS {
            for j in 0..POINTS {
                let z = Vector::new(vec![
                    c[0] - h + i as f64 * step,
                    c[1] - h + j as f64 * step,
                ]);
                let r = sys.eval(&z).sub(&z).norm_inf();
                if r < best.0 {
                    best = (r, z);
                }
            }
        }
        c = best.1;
        h *= 3.0 / 8.0;
    }
    c
}
