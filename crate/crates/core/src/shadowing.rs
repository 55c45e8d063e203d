//! Finite-window shadowing: thread a true orbit of one system through a
//! chain of boxes centred on an orbit of another, and read the conjugacy off
//! its middle point.
//!
//! The bi-infinite problem is closed on the window k = −K..K by pinning the
//! stable part of the left endpoint and the unstable part of the right
//! endpoint to the anchors; uniqueness of shadows makes the middle point
//! insensitive to the closure, and the geometric certificate 2α/θᴷ bounds
//! the truncation error. [`rho`] shadows the nonlinear map along linear
//! anchors, [`sigma`] shadows the linear map along nonlinear anchors, and
//! [`conjugacy_defect`] / [`alpha_independence`] measure the defining
//! identities on computed values.
//!
//! Orbit points are represented as anchor + deviation and never collapsed
//! into a single float sum inside the solver: far window ends of an
//! expanding system reach magnitudes where one unit in the last place
//! exceeds the solver tolerance, while the deviations stay at desk scale.
//! The orbit equation w_{k+1} = A·w_k + λh(w_k) is therefore evaluated in
//! the decomposed form d_{k+1} = A·d_k + λh(a_k + d_k) + c_k with the
//! per-index anchor defects c_k = A·a_k − a_{k+1} precomputed once (they
//! vanish identically for linear anchors). Only the argument of h still
//! forms the sum a_k + d_k, and h enters with the small factor ε, so the
//! residual stays smooth in the unknowns at every window scale.

use std::cell::RefCell;

use crate::covering::{self, CoveringChain};
use crate::error::{Error, Result};
use crate::holder;
use crate::numerics::{newton_solve, Matrix, Vector};
use crate::systems::{MapSystem, Splitting};

/// Default solver tolerance on the stacked residual.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default half-window.
pub const DEFAULT_K: usize = 40;
/// Default Newton iteration cap.
pub const DEFAULT_MAX_ITER: usize = 50;

/// Default box radius: 25% above the covering threshold, with a fallback
/// when the perturbation vanishes (α̂ = 0 allows any positive radius).
pub fn default_alpha(sys: &MapSystem) -> Result<f64> {
    let alpha_hat = covering::alpha_hat_map(
        sys.linear().c_u(),
        sys.linear().c_s(),
        sys.pert().m_bound(),
    )?;
    Ok(if alpha_hat == 0.0 { 0.5 } else { 1.25 * alpha_hat })
}

/// A finite-window shadowing problem: find a true orbit of `dynamics`
/// staying within `alpha` of the `anchors` in the block max norm.
#[derive(Debug, Clone)]
pub struct ShadowProblem {
    dynamics: MapSystem,
    anchors: Vec<Vector>,
    /// Anchor defects c_k = A·a_k − a_{k+1} of the decomposed orbit
    /// equation, computed once; identically zero for linear anchors.
    defects: Vec<Vector>,
    alpha: f64,
    half_window: usize,
    tol: f64,
    max_iter: usize,
    initial_deviations: Option<Vec<Vector>>,
}

impl ShadowProblem {
    /// Problem over explicit anchors a_{−K..K} (length 2K + 1). The radius
    /// must exceed the covering threshold of the dynamics; anchors are
    /// expected to come from a valid covering chain.
    pub fn new(
        dynamics: MapSystem,
        anchors: Vec<Vector>,
        alpha: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        if anchors.len() < 3 || anchors.len() % 2 == 0 {
            return Err(Error::Precondition(format!(
                "anchors must have odd length 2K + 1 ≥ 3, got {}",
                anchors.len()
            )));
        }
        let n = dynamics.splitting().dim();
        if let Some(bad) = anchors.iter().find(|a| a.dim() != n || !a.is_finite()) {
            return Err(Error::Dimension(format!(
                "anchor {bad:?} does not fit the system dimension {n}"
            )));
        }
        let alpha_hat = covering::alpha_hat_map(
            dynamics.linear().c_u(),
            dynamics.linear().c_s(),
            dynamics.pert().m_bound(),
        )?;
        if !(alpha > alpha_hat) {
            return Err(Error::Precondition(format!(
                "box radius {alpha} must exceed the covering threshold {alpha_hat}"
            )));
        }
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::Precondition(
                "solver needs a positive tolerance and at least one iteration".into(),
            ));
        }
        let half_window = (anchors.len() - 1) / 2;
        let defects = anchors
            .windows(2)
            .map(|w| dynamics.linear().apply(&w[0]).sub(&w[1]))
            .collect();
        Ok(Self {
            dynamics,
            anchors,
            defects,
            alpha,
            half_window,
            tol,
            max_iter,
            initial_deviations: None,
        })
    }

    /// Problem threading the boxes of a covering chain.
    pub fn from_chain(
        dynamics: MapSystem,
        chain: &CoveringChain,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        Self::new(dynamics, chain.centers(), chain.radius(), tol, max_iter)
    }

    /// Start the solver from the given anchor-relative deviations instead of
    /// zero (used for uniqueness experiments).
    pub fn with_initial_deviations(mut self, deviations: Vec<Vector>) -> Result<Self> {
        if deviations.len() != self.anchors.len() {
            return Err(Error::Dimension(format!(
                "expected {} initial deviations, got {}",
                self.anchors.len(),
                deviations.len()
            )));
        }
        self.initial_deviations = Some(deviations);
        Ok(self)
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn anchors(&self) -> &[Vector] {
        &self.anchors
    }

    /// Anchor defects c_k = A·a_k − a_{k+1}, one per consecutive pair.
    pub fn defects(&self) -> &[Vector] {
        &self.defects
    }
}

/// A solved shadowing window.
#[derive(Debug, Clone)]
pub struct ShadowOrbit {
    splitting: Splitting,
    anchors: Vec<Vector>,
    deviations: Vec<Vector>,
    alpha: f64,
    /// Max over k of ‖w_{k+1} − g(w_k)‖_∞, evaluated anchor-relative.
    pub residual: f64,
    /// Max over k of ‖w_k − a_k‖ in the block max norm.
    pub containment: f64,
    /// Geometric closure certificate 2α/θᴷ.
    pub truncation_bound: f64,
}

impl ShadowOrbit {
    /// Coordinate split shared by anchors and deviations.
    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    /// Half-window K.
    pub fn half_window(&self) -> usize {
        (self.anchors.len() - 1) / 2
    }

    /// Anchor-relative deviation w_k − a_k at signed index k ∈ [−K, K].
    pub fn deviation(&self, k: isize) -> &Vector {
        &self.deviations[self.index(k)]
    }

    /// Orbit point w_k = a_k + d_k at signed index k. At far window ends of
    /// an expanding system the float sum cannot resolve the deviation; use
    /// [`ShadowOrbit::deviation`] for small-scale questions there.
    pub fn point(&self, k: isize) -> Vector {
        let i = self.index(k);
        self.anchors[i].add(&self.deviations[i])
    }

    /// The middle point w_0 — the conjugacy value.
    pub fn center(&self) -> Vector {
        self.point(0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn index(&self, k: isize) -> usize {
        let half = self.half_window() as isize;
        assert!(
            (-half..=half).contains(&k),
            "orbit index {k} outside window ±{half}"
        );
        (k + half) as usize
    }
}

/// A computed conjugacy value with its certificate.
#[derive(Debug, Clone)]
pub struct ConjugacyPoint {
    /// The argument the conjugacy was evaluated at.
    pub input: Vector,
    /// The conjugacy value: middle point of the shadowing window.
    pub value: Vector,
    pub alpha: f64,
    pub half_window: usize,
    /// Residual the window was solved to.
    pub residual: f64,
    /// Truncation certificate 2α/θᴷ.
    pub truncation_bound: f64,
}

/// One step of the orbit equation in anchor-relative form together with its
/// derivative in the deviation: g(a + d) − a_next decomposed as
/// A·d + λ·h(a + d) + c with c = A·a − a_next supplied precomputed, so that
/// every term except the argument of h stays at deviation scale.
fn relative_step(
    sys: &MapSystem,
    anchor: &Vector,
    defect: &Vector,
    deviation: &Vector,
) -> (Vector, Matrix) {
    // h and Dh take the anchor and deviation separately: at far window
    // positions the anchor dwarfs the deviation, and evaluating at the
    // rounded sum would quantize the residual in the unknowns.
    let pert = sys.pert();
    let step = sys
        .linear()
        .apply(deviation)
        .add(&pert.value_at_offset(anchor, deviation).scale(sys.lambda()))
        .add(defect);
    let jac = sys
        .linear()
        .full_matrix()
        .add(&pert.derivative_at_offset(anchor, deviation).scale(sys.lambda()));
    (step, jac)
}

/// Solved deviations of a generic finite window, shared by the map and flow
/// conjugacies.
pub(crate) struct WindowSolve {
    pub deviations: Vec<Vector>,
    pub residual: f64,
    pub containment: f64,
}

/// Damped-Newton solve of the anchor-relative window equations
///
///   d_{k+1} = step_k(d_k)   for consecutive window positions,
///
/// closed by π_y(d_first) = 0 and π_x(d_last) = 0 (stable part pinned on the
/// left, unstable on the right). `step` returns the anchor-relative image of
/// the deviation at window position k together with its derivative; step
/// errors (for flows: integration failures) abort the solve and are
/// propagated. The linearization is block-bidiagonal and solved directly.
/// Containment within `alpha` is verified on the result; violations are
/// reported with the offending signed index.
pub(crate) fn solve_window(
    spl: Splitting,
    k_len: usize,
    alpha: f64,
    step: &dyn Fn(usize, &Vector) -> Result<(Vector, Matrix)>,
    initial: Option<&[Vector]>,
    tol: f64,
    max_iter: usize,
) -> Result<WindowSolve> {
    let n = spl.dim();
    let total = n * k_len;
    let half = (k_len - 1) / 2;

    // Newton's residual closure cannot return errors, so step failures are
    // stashed here and the affected rows poisoned with NaN; the damping loop
    // rejects non-finite trials, and a failure at an accepted point surfaces
    // below.
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let eval_step = |k: usize, d: &Vector| -> Option<(Vector, Matrix)> {
        match step(k, d) {
            Ok(pair) => Some(pair),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                None
            }
        }
    };

    let residual_fn = |stacked: &Vector| -> Vector {
        let mut out = Vec::with_capacity(total);
        for k in 0..k_len - 1 {
            let d_k = Vector::new(stacked[k * n..(k + 1) * n].to_vec());
            let d_next = &stacked[(k + 1) * n..(k + 2) * n];
            match eval_step(k, &d_k) {
                Some((step_val, _)) => {
                    for i in 0..n {
                        out.push(d_next[i] - step_val[i]);
                    }
                }
                None => out.extend(std::iter::repeat(f64::NAN).take(n)),
            }
        }
        let (_, y_left) = spl.split(&stacked[0..n]);
        out.extend_from_slice(y_left);
        let (x_right, _) = spl.split(&stacked[(k_len - 1) * n..]);
        out.extend_from_slice(x_right);
        Vector::new(out)
    };
    let jacobian_fn = |stacked: &Vector| -> Matrix {
        let mut jac = Matrix::zeros(total, total);
        for k in 0..k_len - 1 {
            let d_k = Vector::new(stacked[k * n..(k + 1) * n].to_vec());
            let row0 = k * n;
            if let Some((_, dstep)) = eval_step(k, &d_k) {
                for i in 0..n {
                    jac[(row0 + i, (k + 1) * n + i)] = 1.0;
                    for j in 0..n {
                        jac[(row0 + i, k * n + j)] = -dstep[(i, j)];
                    }
                }
            }
        }
        let row0 = (k_len - 1) * n;
        for i in 0..spl.s() {
            jac[(row0 + i, spl.u() + i)] = 1.0;
        }
        for i in 0..spl.u() {
            jac[(row0 + spl.s() + i, (k_len - 1) * n + i)] = 1.0;
        }
        jac
    };

    let start = match initial {
        Some(devs) => {
            let mut flat = Vec::with_capacity(total);
            for d in devs {
                flat.extend_from_slice(d);
            }
            Vector::new(flat)
        }
        None => Vector::zeros(total),
    };
    let solution = match newton_solve(&residual_fn, &jacobian_fn, &start, tol, max_iter) {
        Ok(sol) => sol,
        // A stashed step error explains the failure better than the generic
        // non-finite-residual report it degrades into.
        Err(e) => return Err(failure.into_inner().unwrap_or(e)),
    };
    failure.replace(None);
    let residual = residual_fn(&solution).norm_inf();
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }

    let deviations: Vec<Vector> = (0..k_len)
        .map(|k| Vector::new(solution[k * n..(k + 1) * n].to_vec()))
        .collect();
    let mut containment: f64 = 0.0;
    for (k, d) in deviations.iter().enumerate() {
        let dist = spl.block_max_norm(d);
        if dist > alpha {
            return Err(Error::Hypothesis(format!(
                "shadow left its box at index {}: distance {dist} exceeds α = {alpha}",
                k as isize - half as isize,
            )));
        }
        containment = containment.max(dist);
    }

    Ok(WindowSolve { deviations, residual, containment })
}

/// Solve the finite-window problem by damped Newton on the stacked residual
///
///   F_k(d) = d_{k+1} − (g(a_k + d_k) − a_{k+1})   for k = −K..K−1,
///
/// in the anchor-relative decomposition of [`relative_step`], closed by
/// π_y(d_{−K}) = 0 and π_x(d_K) = 0. Both the residual and the containment
/// contract are verified on the result.
pub fn solve_shadow(p: &ShadowProblem) -> Result<ShadowOrbit> {
    let sys = &p.dynamics;
    let spl = sys.splitting();
    let step = |k: usize, d: &Vector| -> Result<(Vector, Matrix)> {
        Ok(relative_step(sys, &p.anchors[k], &p.defects[k], d))
    };
    let solve = solve_window(
        spl,
        p.anchors.len(),
        p.alpha,
        &step,
        p.initial_deviations.as_deref(),
        p.tol,
        p.max_iter,
    )?;

    let a = sys.linear();
    let (theta_u, theta_s) = holder::thetas(a.c_u(), a.c_s(), sys.effective_eps())?;
    let theta = theta_u.min(theta_s);
    let truncation_bound = 2.0 * p.alpha / theta.powi(p.half_window as i32);

    Ok(ShadowOrbit {
        splitting: spl,
        anchors: p.anchors.clone(),
        deviations: solve.deviations,
        alpha: p.alpha,
        residual: solve.residual,
        containment: solve.containment,
        truncation_bound,
    })
}

fn conjugacy_from(orbit: &ShadowOrbit, input: &Vector) -> ConjugacyPoint {
    ConjugacyPoint {
        input: input.clone(),
        value: orbit.center(),
        alpha: orbit.alpha,
        half_window: orbit.half_window(),
        residual: orbit.residual,
        truncation_bound: orbit.truncation_bound,
    }
}

fn check_budget(sys: &MapSystem) -> Result<()> {
    let eps = sys.effective_eps();
    let eps1 = sys.linear().eps1();
    if !(eps < eps1) {
        return Err(Error::Hypothesis(format!(
            "effective derivative bound {eps} must stay below ε₁ = {eps1} \
             for a one-to-one perturbed map"
        )));
    }
    Ok(())
}

/// The conjugacy ρ(z): the unique orbit of the (nonlinear) system shadowing
/// the linear anchors A^k z, read off at k = 0, so that g^k(ρ(z)) stays
/// within α of A^k z for |k| ≤ K.
pub fn rho(
    sys: &MapSystem,
    z: &Vector,
    alpha: f64,
    half_window: usize,
    tol: f64,
) -> Result<ConjugacyPoint> {
    Ok(conjugacy_from(&rho_orbit(sys, z, alpha, half_window, tol)?, z))
}

/// As [`rho`], returning the full solved window for containment inspection.
pub fn rho_orbit(
    sys: &MapSystem,
    z: &Vector,
    alpha: f64,
    half_window: usize,
    tol: f64,
) -> Result<ShadowOrbit> {
    check_budget(sys)?;
    let linear_anchor = sys.with_lambda(0.0)?;
    let chain = covering::build_chain(&linear_anchor, z, half_window, alpha)?;
    let problem = ShadowProblem::from_chain(sys.clone(), &chain, tol, DEFAULT_MAX_ITER)?;
    solve_shadow(&problem)
}

/// The inverse conjugacy σ(z): the unique orbit of the linear map shadowing
/// the nonlinear anchors g^k(z) (backward anchors via the certified
/// inverse), read off at k = 0.
pub fn sigma(
    sys: &MapSystem,
    z: &Vector,
    alpha: f64,
    half_window: usize,
    tol: f64,
) -> Result<ConjugacyPoint> {
    check_budget(sys)?;
    let chain = covering::build_chain(sys, z, half_window, alpha)?;
    let linear_dynamics = sys.with_lambda(0.0)?;
    let problem = ShadowProblem::from_chain(linear_dynamics, &chain, tol, DEFAULT_MAX_ITER)?;
    Ok(conjugacy_from(&solve_shadow(&problem)?, z))
}

/// Conjugacy defect ‖ρ(Az) − g(ρ(z))‖_∞ with both sides computed at the same
/// parameters. Small defects certify the identity ρ∘A = g∘ρ on the window.
pub fn conjugacy_defect(
    sys: &MapSystem,
    z: &Vector,
    alpha: f64,
    half_window: usize,
    tol: f64,
) -> Result<f64> {
    let az = sys.linear().apply(z);
    let lhs = rho(sys, &az, alpha, half_window, tol)?.value;
    let rhs = sys.eval(&rho(sys, z, alpha, half_window, tol)?.value);
    Ok(lhs.sub(&rhs).norm_inf())
}

/// ‖ρ_{α₁}(z) − ρ_{α₂}(z)‖_∞: the measured α-independence of the conjugacy.
pub fn alpha_independence(
    sys: &MapSystem,
    z: &Vector,
    alpha1: f64,
    alpha2: f64,
    half_window: usize,
    tol: f64,
) -> Result<f64> {
    let r1 = rho(sys, z, alpha1, half_window, tol)?.value;
    let r2 = rho(sys, z, alpha2, half_window, tol)?.value;
    Ok(r1.sub(&r2).norm_inf())
}

/// A periodic point from a closed loop of boxes: Newton on g^m(x) − x from
/// the loop's first anchor, with the orbit of the result certified to stay
/// in the loop's boxes.
///
/// `loop_anchors` lists the centers a_0..a_{m−1}; the loop closes with
/// a_m = a_0. The radius must exceed the covering threshold of the dynamics.
pub fn periodic_from_loop(
    sys: &MapSystem,
    loop_anchors: &[Vector],
    alpha: f64,
    tol: f64,
) -> Result<Vector> {
    if loop_anchors.is_empty() {
        return Err(Error::Precondition("periodic loop needs at least one box".into()));
    }
    let spl = sys.splitting();
    let n = spl.dim();
    let alpha_hat = covering::alpha_hat_map(
        sys.linear().c_u(),
        sys.linear().c_s(),
        sys.pert().m_bound(),
    )?;
    if !(alpha > alpha_hat) {
        return Err(Error::Precondition(format!(
            "loop radius {alpha} must exceed the covering threshold {alpha_hat}"
        )));
    }
    let m = loop_anchors.len();
    let residual_fn = |x: &Vector| -> Vector {
        let mut w = x.clone();
        for _ in 0..m {
            w = sys.eval(&w);
        }
        w.sub(x)
    };
    let jacobian_fn = |x: &Vector| -> Matrix {
        let mut w = x.clone();
        let mut prod = Matrix::identity(n);
        for _ in 0..m {
            prod = sys.jacobian(&w).mul(&prod);
            w = sys.eval(&w);
        }
        prod.sub(&Matrix::identity(n))
    };
    let x = newton_solve(&residual_fn, &jacobian_fn, &loop_anchors[0], tol, DEFAULT_MAX_ITER)?;
    let mut w = x.clone();
    for (j, anchor) in loop_anchors.iter().enumerate() {
        let dist = spl.block_max_norm(&w.sub(anchor));
        if dist > alpha {
            return Err(Error::Hypothesis(format!(
                "periodic orbit leaves box {j}: distance {dist} exceeds α = {alpha}"
            )));
        }
        w = sys.eval(&w);
    }
    Ok(x)
}
