/// Gauss–Legendre nodes and weights on [0, 1], computed by Newton iteration
/// on the Legendre polynomial from the Chebyshev initial guesses. Nodes are
/// accurate to machine precision for the small orders used here.
pub fn gauss_legendre_01(order: usize) -> Vec<(f64, f64)> {
    assert!(order >= 1, "quadrature order must be at least 1");
    let n = order;
    let mut rule = Vec::with_capacity(n);
    for i in 1..=n {
        // root of P_n near cos(pi (i - 1/4) / (n + 1/2))
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map from [-1, 1] to [0, 1]
        rule.push(((x + 1.0) / 2.0, w / 2.0));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
