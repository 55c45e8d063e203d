//! Continuous-time side: the Gronwall global-existence bound, isolating
//! segments (moving boxes around a reference trajectory), boundary sign
//! verification on the exit and entry faces, exit times relative to the
//! moving box, quadratic-form growth along flows, and the flow conjugacy by
//! shadowing on a time grid.
//!
//! A segment around the anchor trajectory φ^{λ₁}(t, z₀) has support
//! φ^{λ₁}(t, z₀) + B_u(0, α) × B_s(0, α) for t ∈ [−T, T]; its exit face N⁻
//! carries the u-sphere, its entry face N⁺ the s-sphere. The face signs
//! ½∇L∓·(1, f^{λ₂}) decide isolation; their proof-level bounds
//! α(c_u·α − 2M) and α(−c_s·α + 2M) are reported alongside the sampled
//! extremes. The flow conjugacy reuses the finite-window Newton closure of
//! [`shadowing`] with the time-Δ flow as the step map and e^{AΔj}·z as
//! anchors; deviations stay anchor-relative throughout, so the window never
//! loses resolution at its expanding end.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{integrate, matrix_exp, Matrix, Vector};
use crate::sampling;
use crate::shadowing::{self, ConjugacyPoint};
pub use crate::systems::derive_field_constants;
use crate::systems::OdeSystem;

/// Box-radius threshold for isolating segments: α̂ = max(2M/c_u, 2M/c_s).
/// Radii above it make both face signs strict for every λ ∈ [0, 1].
pub fn alpha_hat_ode(c_u: f64, c_s: f64, m_bound: f64) -> Result<f64> {
    if !(c_u > 0.0 && c_s > 0.0) {
        return Err(Error::Precondition(format!(
            "segment threshold needs positive rates, got c_u = {c_u}, c_s = {c_s}"
        )));
    }
    if !(m_bound >= 0.0 && m_bound.is_finite()) {
        return Err(Error::Precondition(format!(
            "perturbation bound must be nonnegative, got {m_bound}"
        )));
    }
    Ok((2.0 * m_bound / c_u).max(2.0 * m_bound / c_s))
}

/// Global-existence bound in the block max norm:
/// ‖φ(t, z)‖ ≤ ‖z‖·e^{(‖A‖+ε)|t|} + M/(‖A‖+ε)·(e^{(‖A‖+ε)|t|} − 1),
/// with the system's effective (λ-scaled) bounds M and ε. Trajectories of a
/// globally Lipschitz field can never outrun it, so blow-up in finite time
/// is excluded.
pub fn gronwall_bound(sys: &OdeSystem, z: &Vector, t: f64) -> f64 {
    let rate = sys.linear().operator_norm() + sys.effective_eps();
    let growth = (rate * t.abs()).exp();
    let norm = sys.splitting().block_max_norm(z);
    norm * growth + sys.effective_m() / rate * (growth - 1.0)
}

/// A moving box around an anchor trajectory: the support at time t is
/// φ^{λ₁}(t, z₀) + B_u(0, α) × B_s(0, α) for t ∈ [−T, T], where λ₁ is the
/// anchor system's homotopy parameter. The anchor trajectory is cached at
/// the integrator's step resolution at construction; [`Self::anchor_at`]
/// integrates only the sub-step remainder.
///
/// Whether the box is actually isolating is decided by [`check_segment`]:
/// radii above [`alpha_hat_ode`] carry the analytic guarantee, smaller radii
/// construct fine but may fail the check.
#[derive(Debug, Clone)]
pub struct IsolatingSegment {
    ode: OdeSystem,
    z0: Vector,
    alpha: f64,
    t_horizon: f64,
    node_dt: f64,
    /// nodes[i] = φ^{λ₁}((i − per_side)·node_dt, z₀), i = 0..2·per_side.
    nodes: Vec<Vector>,
}

impl IsolatingSegment {
    pub fn new(ode_anchor: OdeSystem, z0: Vector, alpha: f64, t_horizon: f64) -> Result<Self> {
        let n = ode_anchor.splitting().dim();
        if z0.dim() != n || !z0.is_finite() {
            return Err(Error::Dimension(format!(
                "segment base point {z0:?} does not fit the system dimension {n}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Precondition(format!(
                "segment radius must be positive, got {alpha}"
            )));
        }
        if !(t_horizon > 0.0 && t_horizon.is_finite()) {
            return Err(Error::Precondition(format!(
                "segment horizon must be positive, got {t_horizon}"
            )));
        }
        let per_side = (t_horizon / ode_anchor.step()).ceil().max(1.0) as usize;
        let node_dt = t_horizon / per_side as f64;
        let mut nodes = vec![Vector::zeros(n); 2 * per_side + 1];
        nodes[per_side] = z0.clone();
        for i in per_side..2 * per_side {
            nodes[i + 1] = ode_anchor.flow(&nodes[i], node_dt)?;
        }
        for i in (0..per_side).rev() {
            nodes[i] = ode_anchor.flow(&nodes[i + 1], -node_dt)?;
        }
        Ok(Self { ode: ode_anchor, z0, alpha, t_horizon, node_dt, nodes })
    }

    /// Anchor point φ^{λ₁}(t, z₀) for t ∈ [−T, T]: nearest cached node plus
    /// an integrated remainder of at most half a grid step.
    pub fn anchor_at(&self, t: f64) -> Result<Vector> {
        if !(t.is_finite() && t.abs() <= self.t_horizon + 1e-12) {
            return Err(Error::Precondition(format!(
                "time {t} outside the segment range ±{}",
                self.t_horizon
            )));
        }
        let per_side = ((self.nodes.len() - 1) / 2) as isize;
        let i = ((t / self.node_dt).round() as isize + per_side)
            .clamp(0, self.nodes.len() as isize - 1) as usize;
        let t_node = (i as isize - per_side) as f64 * self.node_dt;
        let remainder = t - t_node;
        if remainder == 0.0 {
            return Ok(self.nodes[i].clone());
        }
        self.ode.flow(&self.nodes[i], remainder)
    }

    /// The anchor dynamics (carries λ₁).
    pub fn ode(&self) -> &OdeSystem {
        &self.ode
    }

    pub fn base_point(&self) -> &Vector {
        &self.z0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    /// Time resolution of the cached anchor trajectory.
    pub fn grid_step(&self) -> f64 {
        self.node_dt
    }
}

/// Outcome of sampling the face signs of a segment under the λ₂-field.
#[derive(Debug, Clone)]
pub struct SegmentCheckReport {
    /// Sampled verdict: `exit_min_slack` > 0 and `entry_max_slack` < 0.
    pub pass: bool,
    /// Formula verdict: `analytic_exit_lower` > 0 and
    /// `analytic_entry_upper` < 0 — the sufficient condition α > α̂.
    pub analytic_pass: bool,
    /// Sampled (time, boundary point) pairs per face.
    pub samples_per_face: usize,
    /// min over sampled N⁻ of ½∇L⁻·(1, f^{λ₂}).
    pub exit_min_slack: f64,
    /// max over sampled N⁺ of ½∇L⁺·(1, f^{λ₂}).
    pub entry_max_slack: f64,
    /// α(c_u·α − 2M): the proof's lower bound for the exit slack.
    pub analytic_exit_lower: f64,
    /// α(−c_s·α + 2M): the proof's upper bound for the entry slack.
    pub analytic_entry_upper: f64,
}

/// Verify the face signs of `seg` for the λ₂-field at seeded (time, boundary
/// point) pairs: on the exit face N⁻ (u-sphere × s-ball around the moving
/// anchor) the expanded derivative
///
///   ½∇L⁻·(1, f^{λ₂}) = (x−π_xφ)·A_u(x−π_xφ) + (x−π_xφ)·(λ₂π_xh(z) − λ₁π_xh(φ))
///
/// must be positive, and its entry analogue on N⁺ (with y, A_s) negative.
/// The proof-level bounds ±α(c·α − 2M) are reported alongside; the sampled
/// extremes can never undercut them.
pub fn check_segment(
    seg: &IsolatingSegment,
    lambda2: f64,
    time_samples: usize,
    boundary_samples: usize,
    seed: u64,
) -> Result<SegmentCheckReport> {
    if !(0.0..=1.0).contains(&lambda2) {
        return Err(Error::Precondition(format!(
            "lambda must lie in [0, 1], got {lambda2}"
        )));
    }
    if time_samples == 0 || boundary_samples == 0 {
        return Err(Error::Precondition(
            "segment check needs at least one time and one boundary sample".into(),
        ));
    }
    let sys = seg.ode();
    let spl = sys.splitting();
    let (u, s) = (spl.u(), spl.s());
    let alpha = seg.alpha();
    let lambda1 = sys.lambda();
    let a_u = sys.linear().a_u();
    let a_s = sys.linear().a_s();

    let mut rng = sampling::rng(seed);
    let mut exit_min = f64::INFINITY;
    let mut entry_max = f64::NEG_INFINITY;
    for _ in 0..time_samples {
        let t = (2.0 * rng.gen::<f64>() - 1.0) * seg.t_horizon();
        let phi = seg.anchor_at(t)?;
        let h_phi = sys.pert().value(&phi).scale(lambda1);
        let (h_phi_x, h_phi_y) = spl.split(&h_phi);
        for _ in 0..boundary_samples {
            // Exit face: u-block on the α-sphere, s-block in the α-ball.
            let dx = Vector::new(sampling::unit_sphere(&mut rng, u)).scale(alpha);
            let dy = Vector::new(sampling::in_ball(&mut rng, s, alpha));
            let z = phi.add(&spl.join(&dx, &dy));
            let h_z = sys.pert().value(&z).scale(lambda2);
            let (h_z_x, _) = spl.split(&h_z);
            let cross = Vector::new(h_z_x.to_vec()).sub(&Vector::new(h_phi_x.to_vec()));
            let slack = dx.dot(&Vector::new(a_u.mul_vec(&dx))) + dx.dot(&cross);
            exit_min = exit_min.min(slack);

            // Entry face: u-block in the α-ball, s-block on the α-sphere.
            let ex = Vector::new(sampling::in_ball(&mut rng, u, alpha));
            let ey = Vector::new(sampling::unit_sphere(&mut rng, s)).scale(alpha);
            let z = phi.add(&spl.join(&ex, &ey));
            let h_z = sys.pert().value(&z).scale(lambda2);
            let (_, h_z_y) = spl.split(&h_z);
            let cross = Vector::new(h_z_y.to_vec()).sub(&Vector::new(h_phi_y.to_vec()));
            let slack = ey.dot(&Vector::new(a_s.mul_vec(&ey))) + ey.dot(&cross);
            entry_max = entry_max.max(slack);
        }
    }

    let m = sys.pert().m_bound();
    let analytic_exit_lower = alpha * (sys.linear().c_u() * alpha - 2.0 * m);
    let analytic_entry_upper = alpha * (-sys.linear().c_s() * alpha + 2.0 * m);
    Ok(SegmentCheckReport {
        pass: exit_min > 0.0 && entry_max < 0.0,
        analytic_pass: analytic_exit_lower > 0.0 && analytic_entry_upper < 0.0,
        samples_per_face: time_samples * boundary_samples,
        exit_min_slack: exit_min,
        entry_max_slack: entry_max,
        analytic_exit_lower,
        analytic_entry_upper,
    })
}

/// Exit time of a trajectory relative to the moving box, measured from its
/// start time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitTime {
    /// First boundary crossing after the start, located to 1e−9.
    Finite(f64),
    /// Still inside the box at the segment horizon T.
    HorizonExceeded,
}

const EXIT_TIME_RESOLUTION: f64 = 1e-9;

/// First time the λ₂-trajectory through (t₀, z) leaves the moving box of
/// `seg`, relative to t₀: the crossing of the monitor
/// max(‖x − π_xφ(t)‖, ‖y − π_yφ(t)‖) − α is bracketed on the anchor grid and
/// located by bisection to 1e−9. Starts must lie in the support (monitor
/// ≤ 1e−9); a start numerically on the boundary that immediately moves
/// outward exits at time 0.
pub fn exit_time(
    seg: &IsolatingSegment,
    lambda2: f64,
    t0: f64,
    z: &Vector,
) -> Result<ExitTime> {
    if !(0.0..=1.0).contains(&lambda2) {
        return Err(Error::Precondition(format!(
            "lambda must lie in [0, 1], got {lambda2}"
        )));
    }
    if !(t0.is_finite() && t0.abs() <= seg.t_horizon()) {
        return Err(Error::Precondition(format!(
            "start time {t0} outside the segment range ±{}",
            seg.t_horizon()
        )));
    }
    let sys2 = seg.ode().with_lambda(lambda2)?;
    let spl = sys2.splitting();
    let monitor = |t: f64, w: &Vector| -> Result<f64> {
        let d = w.sub(&seg.anchor_at(t)?);
        Ok(spl.block_max_norm(&d) - seg.alpha())
    };

    let m0 = monitor(t0, z)?;
    if m0 > EXIT_TIME_RESOLUTION {
        return Err(Error::Precondition(format!(
            "start point lies {m0:e} outside the segment support"
        )));
    }
    if m0 > 0.0 {
        // Numerically on the boundary: already outside to within the
        // location resolution.
        return Ok(ExitTime::Finite(0.0));
    }

    let horizon = seg.t_horizon();
    let dt = seg.grid_step();
    let mut t = t0;
    let mut w = z.clone();
    while t < horizon {
        let t_next = (t + dt).min(horizon);
        let w_next = sys2.flow(&w, t_next - t)?;
        let m_next = monitor(t_next, &w_next)?;
        if m_next > 0.0 {
            // Bisection on [t, t_next]; trajectory restarts stay anchored at
            // (t, w) so location error never accumulates.
            let (mut lo, mut hi) = (t, t_next);
            while hi - lo > EXIT_TIME_RESOLUTION {
                let mid = 0.5 * (lo + hi);
                let w_mid = sys2.flow(&w, mid - t)?;
                if monitor(mid, &w_mid)? > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(ExitTime::Finite(0.5 * (lo + hi) - t0));
        }
        t = t_next;
        w = w_next;
    }
    Ok(ExitTime::HorizonExceeded)
}

/// Per-grid-step hyperbolicity rates of the time-Δ flow map:
/// (e^{(c_u−2ε)Δ}, e^{(c_s−2ε)Δ}), with the system's effective ε. Both
/// exponents must stay positive for the shadowing window to contract toward
/// its middle.
pub fn flow_thetas(sys: &OdeSystem, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!(
            "grid spacing must be positive, got {delta}"
        )));
    }
    let eps = sys.effective_eps();
    let ru = sys.linear().c_u() - 2.0 * eps;
    let rs = sys.linear().c_s() - 2.0 * eps;
    if !(ru > 0.0 && rs > 0.0) {
        return Err(Error::Hypothesis(format!(
            "effective flow rates c − 2ε must stay positive, got ({ru}, {rs}); \
             the perturbation is too strong for the window closure"
        )));
    }
    Ok(((ru * delta).exp(), (rs * delta).exp()))
}

/// Integrate the anchor (exact linear dynamics) and an anchor-relative
/// deviation jointly over `dt`: w_a′ = A·w_a and η′ = A·η + λh(w_a + η), so
/// the deviation never mixes with the anchor scale inside the integrator.
fn anchored_flow(
    sys: &OdeSystem,
    anchor: &Vector,
    deviation: &Vector,
    dt: f64,
) -> Result<(Vector, Vector)> {
    let n = sys.splitting().dim();
    let lambda = sys.lambda();
    let mut joint = Vec::with_capacity(2 * n);
    joint.extend_from_slice(anchor);
    joint.extend_from_slice(deviation);
    let field = |w: &Vector| -> Vector {
        let point = Vector::new((0..n).map(|i| w[i] + w[n + i]).collect::<Vec<_>>());
        let h = sys.pert().value(&point);
        let fa = sys.linear().apply(&Vector::new(w[..n].to_vec()));
        let fe = sys.linear().apply(&Vector::new(w[n..].to_vec()));
        let mut out = fa.into_inner();
        out.extend((0..n).map(|i| fe[i] + lambda * h[i]));
        Vector::new(out)
    };
    let end = integrate(&field, &Vector::new(joint), 0.0, dt, sys.step())?;
    Ok((Vector::new(end[..n].to_vec()), Vector::new(end[n..].to_vec())))
}

/// As [`anchored_flow`], also carrying the variational matrix
/// V′ = (A + λDh(w_a + η))·V — the exact derivative ∂η(dt)/∂η(0) of the
/// discrete step on the shared integration grid.
fn anchored_flow_with_jacobian(
    sys: &OdeSystem,
    anchor: &Vector,
    deviation: &Vector,
    dt: f64,
) -> Result<(Vector, Vector, Matrix)> {
    let n = sys.splitting().dim();
    let lambda = sys.lambda();
    let mut joint = Vec::with_capacity(2 * n + n * n);
    joint.extend_from_slice(anchor);
    joint.extend_from_slice(deviation);
    joint.extend_from_slice(Matrix::identity(n).data());
    let field = |w: &Vector| -> Vector {
        let point = Vector::new((0..n).map(|i| w[i] + w[n + i]).collect::<Vec<_>>());
        let h = sys.pert().value(&point);
        let df = sys.field_jacobian(&point);
        let fa = sys.linear().apply(&Vector::new(w[..n].to_vec()));
        let fe = sys.linear().apply(&Vector::new(w[n..2 * n].to_vec()));
        let mut out = fa.into_inner();
        out.extend((0..n).map(|i| fe[i] + lambda * h[i]));
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += df[(i, k)] * w[2 * n + k * n + j];
                }
                out.push(acc);
            }
        }
        Vector::new(out)
    };
    let end = integrate(&field, &Vector::new(joint), 0.0, dt, sys.step())?;
    Ok((
        Vector::new(end[..n].to_vec()),
        Vector::new(end[n..2 * n].to_vec()),
        Matrix::new(n, n, end[2 * n..].to_vec())?,
    ))
}

/// A flow-conjugacy problem on a time grid: anchors e^{AΔj}·z for |j| ≤ J,
/// the time-Δ flow of the field as the step map, and the window closure of
/// the map case.
#[derive(Debug, Clone)]
pub struct FlowShadowProblem {
    sys: OdeSystem,
    z: Vector,
    alpha: f64,
    delta: f64,
    half_window: usize,
    tol: f64,
    anchors: Vec<Vector>,
}

impl FlowShadowProblem {
    /// Grid over [−T, T] with spacing Δ ∈ (0, 1]; T/Δ must be a positive
    /// integer J (the half-window). The radius must exceed the segment
    /// threshold α̂.
    pub fn new(
        sys: OdeSystem,
        z: Vector,
        alpha: f64,
        t_horizon: f64,
        delta: f64,
        tol: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Precondition(format!(
                "grid spacing must lie in (0, 1], got {delta}"
            )));
        }
        let n = sys.splitting().dim();
        if z.dim() != n || !z.is_finite() {
            return Err(Error::Dimension(format!(
                "base point {z:?} does not fit the system dimension {n}"
            )));
        }
        let j_real = t_horizon / delta;
        let half_window = j_real.round() as usize;
        if half_window == 0 || (j_real - half_window as f64).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "the grid must tile the horizon: T/Δ = {j_real} is not a positive integer"
            )));
        }
        let alpha_hat = alpha_hat_ode(
            sys.linear().c_u(),
            sys.linear().c_s(),
            sys.pert().m_bound(),
        )?;
        if !(alpha > alpha_hat) {
            return Err(Error::Precondition(format!(
                "box radius {alpha} must exceed the segment threshold {alpha_hat}"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::Precondition(
                "solver needs a positive tolerance".into(),
            ));
        }
        let a_full = sys.linear().full_matrix();
        let mut anchors = Vec::with_capacity(2 * half_window + 1);
        for j in -(half_window as isize)..=(half_window as isize) {
            let e = matrix_exp(&a_full, delta * j as f64)?;
            anchors.push(Vector::new(e.mul_vec(&z)));
        }
        Ok(Self { sys, z, alpha, delta, half_window, tol, anchors })
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn anchors(&self) -> &[Vector] {
        &self.anchors
    }
}

const CONTINUOUS_AUDIT_PER_CELL: usize = 8;
const CONTINUOUS_AUDIT_SLACK: f64 = 1e-6;

/// Solve a flow-conjugacy window and audit containment continuously:
/// after the grid solve, every grid cell is re-integrated and the distance
/// ‖φ(t, ρ(z)) − e^{At}z‖ checked at 8 interior times against α + 1e−6,
/// with the violation time reported on failure.
pub fn solve_flow_shadow(p: &FlowShadowProblem) -> Result<ConjugacyPoint> {
    let sys = &p.sys;
    let spl = sys.splitting();
    let (theta_u, theta_s) = flow_thetas(sys, p.delta)?;
    let theta = theta_u.min(theta_s);

    let step = |j: usize, d: &Vector| -> Result<(Vector, Matrix)> {
        let (a_end, eta_end, v) = anchored_flow_with_jacobian(sys, &p.anchors[j], d, p.delta)?;
        Ok((eta_end.add(&a_end.sub(&p.anchors[j + 1])), v))
    };
    let solve = shadowing::solve_window(
        spl,
        p.anchors.len(),
        p.alpha,
        &step,
        None,
        p.tol,
        shadowing::DEFAULT_MAX_ITER,
    )?;

    let a_full = sys.linear().full_matrix();
    let half = p.half_window as isize;
    let sub_dt = p.delta / (CONTINUOUS_AUDIT_PER_CELL + 1) as f64;
    for j in 0..p.anchors.len() - 1 {
        let mut wa = p.anchors[j].clone();
        let mut eta = solve.deviations[j].clone();
        for i in 1..=CONTINUOUS_AUDIT_PER_CELL {
            (wa, eta) = anchored_flow(sys, &wa, &eta, sub_dt)?;
            let t = (j as isize - half) as f64 * p.delta + i as f64 * sub_dt;
            let exact = Vector::new(matrix_exp(&a_full, t)?.mul_vec(&p.z));
            let dist = spl.block_max_norm(&eta.add(&wa.sub(&exact)));
            if dist > p.alpha + CONTINUOUS_AUDIT_SLACK {
                return Err(Error::Hypothesis(format!(
                    "continuous containment fails at t = {t}: distance {dist} \
                     exceeds α + {CONTINUOUS_AUDIT_SLACK}"
                )));
            }
        }
    }

    Ok(ConjugacyPoint {
        input: p.z.clone(),
        value: p.anchors[p.half_window].add(&solve.deviations[p.half_window]),
        alpha: p.alpha,
        half_window: p.half_window,
        residual: solve.residual,
        truncation_bound: 2.0 * p.alpha / theta.powi(p.half_window as i32),
    })
}

/// The flow conjugacy ρ(z): middle point of the discrete-flow orbit
/// shadowing the linear-flow anchors e^{AΔj}·z within α over [−T, T], with
/// continuous containment audited cell by cell.
pub fn rho_flow(
    sys: &OdeSystem,
    z: &Vector,
    alpha: f64,
    t_horizon: f64,
    delta: f64,
    tol: f64,
) -> Result<ConjugacyPoint> {
    let problem = FlowShadowProblem::new(sys.clone(), z.clone(), alpha, t_horizon, delta, tol)?;
    solve_flow_shadow(&problem)
}

/// Growth monitor of the indefinite form Q(w) = ‖w_x‖² − ‖w_y‖² along the
/// difference of two trajectories: min over the integrator's time grid on
/// [0, T] of d/dt Q(Δφ(t)) − η·|Q(Δφ(t))|, with the derivative computed from
/// the field (not finite differences). A nonnegative result certifies the
/// e^{ηt}-growth of |Q| that forces distinct conjugacy values for distinct
/// arguments.
pub fn flow_cone_monitor(
    sys: &OdeSystem,
    z1: &Vector,
    z2: &Vector,
    eta: f64,
    t_horizon: f64,
) -> Result<f64> {
    if z1.sub(z2).norm_inf() == 0.0 {
        return Err(Error::Precondition(
            "cone growth monitor needs two distinct points".into(),
        ));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Precondition(format!(
            "growth rate must be positive, got {eta}"
        )));
    }
    if !(t_horizon > 0.0 && t_horizon.is_finite()) {
        return Err(Error::Precondition(format!(
            "horizon must be positive, got {t_horizon}"
        )));
    }
    let spl = sys.splitting();
    let mut w1 = z1.clone();
    let mut w2 = z2.clone();
    let dt = sys.step();
    let mut t = 0.0;
    let mut min_slack = f64::INFINITY;
    loop {
        let d = w1.sub(&w2);
        let (dx, dy) = spl.split(&d);
        let q: f64 = dx.iter().map(|v| v * v).sum::<f64>()
            - dy.iter().map(|v| v * v).sum::<f64>();
        let df = sys.field(&w1).sub(&sys.field(&w2));
        let (dfx, dfy) = spl.split(&df);
        let dq = 2.0
            * (dx.iter().zip(dfx).map(|(a, b)| a * b).sum::<f64>()
                - dy.iter().zip(dfy).map(|(a, b)| a * b).sum::<f64>());
        min_slack = min_slack.min(dq - eta * q.abs());
        if t >= t_horizon {
            break;
        }
        let step = dt.min(t_horizon - t);
        w1 = sys.flow(&w1, step)?;
        w2 = sys.flow(&w2, step)?;
        t += step;
    }
    Ok(min_slack)
}
