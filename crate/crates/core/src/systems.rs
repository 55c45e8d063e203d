//! System descriptions: block splittings ℝⁿ = ℝᵘ × ℝˢ, hyperbolic linear
//! parts with certified expansion/contraction constants, perturbation
//! families h with analytic bounds M ≥ sup‖h‖ and ε ≥ sup‖Dh‖₂, and the
//! composed systems g_λ(z) = Az + λh(z) (maps) and z' = Az + λh(z) (fields).
//!
//! Norm convention: points are measured in the block max norm
//! ‖(x, y)‖ = max(‖x‖₂, ‖y‖₂); M is a bound in that norm, while ε bounds the
//! Euclidean operator norm of Dh.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::localize::CutoffProfile;
use crate::numerics::{
    integrate, lu_inverse, newton_solve, operator_norm_2, sym_eig_extremes, Matrix, Vector,
};
use crate::sampling;

/// Dimension split n = u + s into expanding (x) and contracting (y) blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Splitting {
    u: usize,
    s: usize,
}

impl Splitting {
    pub fn new(u: usize, s: usize) -> Result<Self> {
        if u == 0 || s == 0 {
            return Err(Error::Precondition(format!(
                "splitting blocks must be non-empty, got u={u}, s={s}"
            )));
        }
        Ok(Self { u, s })
    }

    pub fn u(&self) -> usize {
        self.u
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.u + self.s
    }

    pub fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        assert_eq!(z.len(), self.dim(), "point dimension mismatch");
        z.split_at(self.u)
    }

    pub fn join(&self, x: &[f64], y: &[f64]) -> Vector {
        assert_eq!(x.len(), self.u, "x block dimension mismatch");
        assert_eq!(y.len(), self.s, "y block dimension mismatch");
        let mut data = Vec::with_capacity(self.dim());
        data.extend_from_slice(x);
        data.extend_from_slice(y);
        Vector::new(data)
    }

    /// Block max norm ‖(x, y)‖ = max(‖x‖₂, ‖y‖₂).
    pub fn block_max_norm(&self, z: &[f64]) -> f64 {
        let (x, y) = self.split(z);
        euclidean(x).max(euclidean(y))
    }
}

fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Derives the certified constants of a block-diagonal hyperbolic linear map:
/// c_u = 1/‖a_u⁻¹‖₂ (guaranteed expansion), c_s = ‖a_s‖₂ (guaranteed
/// contraction), and the homeomorphism threshold ε₁ = 1/‖A⁻¹‖ where ‖A⁻¹‖ is
/// taken in the block max norm.
pub fn derive_map_constants(a_u: &Matrix, a_s: &Matrix) -> Result<(f64, f64, f64)> {
    if !a_u.is_square() || !a_s.is_square() {
        return Err(Error::Dimension("linear blocks must be square".into()));
    }
    let a_u_inv = lu_inverse(a_u, "derive_map_constants a_u")?;
    let a_s_inv = lu_inverse(a_s, "derive_map_constants a_s")?;
    let inv_u_norm = operator_norm_2(&a_u_inv)?;
    let inv_s_norm = operator_norm_2(&a_s_inv)?;
    let c_u = 1.0 / inv_u_norm;
    let c_s = operator_norm_2(a_s)?;
    if c_u <= 1.0 {
        return Err(Error::Hyperbolicity(format!(
            "expanding block must satisfy 1/\u{2016}a_u\u{207b}\u{00b9}\u{2016} > 1, got {c_u}"
        )));
    }
    if c_s >= 1.0 {
        return Err(Error::Hyperbolicity(format!(
            "contracting block must satisfy \u{2016}a_s\u{2016} < 1, got {c_s}"
        )));
    }
    let eps1 = 1.0 / inv_u_norm.max(inv_s_norm);
    Ok((c_u, c_s, eps1))
}

/// Block-diagonal linear map A(x, y) = (a_u x, a_s y) with ‖a_u x‖ ≥ c_u‖x‖
/// (c_u > 1) and ‖a_s y‖ ≤ c_s‖y‖ (c_s < 1), certified at construction.
#[derive(Debug, Clone)]
pub struct HyperbolicLinearMap {
    splitting: Splitting,
    a_u: Matrix,
    a_s: Matrix,
    a_u_inv: Matrix,
    a_s_inv: Matrix,
    c_u: f64,
    c_s: f64,
    eps1: f64,
    norm: f64,
}

impl HyperbolicLinearMap {
    pub fn new(a_u: Matrix, a_s: Matrix) -> Result<Self> {
        let (c_u, c_s, eps1) = derive_map_constants(&a_u, &a_s)?;
        Self::assemble(a_u, a_s, c_u, c_s, eps1)
    }

    /// Accepts caller-declared constants, certifying them against the
    /// computed bounds: a declared c_u may only weaken (be at most) the
    /// computed expansion, a declared c_s may only weaken (be at least) the
    /// computed contraction.
    pub fn with_declared_constants(
        a_u: Matrix,
        a_s: Matrix,
        declared_c_u: f64,
        declared_c_s: f64,
    ) -> Result<Self> {
        let (c_u, c_s, eps1) = derive_map_constants(&a_u, &a_s)?;
        if !(declared_c_u > 1.0) || declared_c_u > c_u * (1.0 + 1e-12) {
            return Err(Error::Hyperbolicity(format!(
                "declared c_u = {declared_c_u} not certified: must lie in (1, {c_u}]"
            )));
        }
        if !(declared_c_s < 1.0) || declared_c_s < c_s * (1.0 - 1e-12) {
            return Err(Error::Hyperbolicity(format!(
                "declared c_s = {declared_c_s} not certified: must lie in [{c_s}, 1)"
            )));
        }
        Self::assemble(a_u, a_s, declared_c_u, declared_c_s, eps1)
    }

    fn assemble(a_u: Matrix, a_s: Matrix, c_u: f64, c_s: f64, eps1: f64) -> Result<Self> {
        let splitting = Splitting::new(a_u.rows(), a_s.rows())?;
        let a_u_inv = lu_inverse(&a_u, "hyperbolic map a_u")?;
        let a_s_inv = lu_inverse(&a_s, "hyperbolic map a_s")?;
        let norm = operator_norm_2(&a_u)?.max(operator_norm_2(&a_s)?);
        Ok(Self { splitting, a_u, a_s, a_u_inv, a_s_inv, c_u, c_s, eps1, norm })
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    pub fn a_u(&self) -> &Matrix {
        &self.a_u
    }

    pub fn a_s(&self) -> &Matrix {
        &self.a_s
    }

    pub fn a_u_inv(&self) -> &Matrix {
        &self.a_u_inv
    }

    pub fn a_s_inv(&self) -> &Matrix {
        &self.a_s_inv
    }

    pub fn c_u(&self) -> f64 {
        self.c_u
    }

    pub fn c_s(&self) -> f64 {
        self.c_s
    }

    /// Homeomorphism threshold ε₁ = 1/‖A⁻¹‖.
    pub fn eps1(&self) -> f64 {
        self.eps1
    }

    /// ‖A‖₂ = max(‖a_u‖₂, ‖a_s‖₂) for the block-diagonal assembly.
    pub fn operator_norm(&self) -> f64 {
        self.norm
    }

    pub fn full_matrix(&self) -> Matrix {
        Matrix::block_diag(&self.a_u, &self.a_s)
    }

    pub fn full_inverse(&self) -> Matrix {
        Matrix::block_diag(&self.a_u_inv, &self.a_s_inv)
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        let (x, y) = self.splitting.split(z);
        self.splitting.join(&self.a_u.mul_vec(x), &self.a_s.mul_vec(y))
    }

    pub fn apply_inverse(&self, z: &Vector) -> Vector {
        let (x, y) = self.splitting.split(z);
        self.splitting.join(&self.a_u_inv.mul_vec(x), &self.a_s_inv.mul_vec(y))
    }
}

/// Derives the certified field constants: c_u = λ_min of the symmetric part
/// of a_u (so (x, a_u x) ≥ c_u‖x‖²) and c_s = −λ_max of the symmetric part of
/// a_s (so (y, a_s y) ≤ −c_s‖y‖²); both must be positive.
pub fn derive_field_constants(a_u: &Matrix, a_s: &Matrix) -> Result<(f64, f64)> {
    if !a_u.is_square() || !a_s.is_square() {
        return Err(Error::Dimension("linear blocks must be square".into()));
    }
    let (c_u, _) = sym_eig_extremes(&a_u.symmetrized())?;
    let (_, s_max) = sym_eig_extremes(&a_s.symmetrized())?;
    let c_s = -s_max;
    if c_u <= 0.0 {
        return Err(Error::Hyperbolicity(format!(
            "expanding field block needs positive-definite symmetric part, λ_min = {c_u}"
        )));
    }
    if c_s <= 0.0 {
        return Err(Error::Hyperbolicity(format!(
            "contracting field block needs negative-definite symmetric part, λ_max = {}",
            -c_s
        )));
    }
    Ok((c_u, c_s))
}

/// Block-diagonal linear field z' = (a_u x, a_s y) with (x, a_u x) ≥ c_u‖x‖²
/// and (y, a_s y) ≤ −c_s‖y‖², c_u, c_s > 0.
#[derive(Debug, Clone)]
pub struct HyperbolicLinearField {
    splitting: Splitting,
    a_u: Matrix,
    a_s: Matrix,
    c_u: f64,
    c_s: f64,
    norm: f64,
}

impl HyperbolicLinearField {
    pub fn new(a_u: Matrix, a_s: Matrix) -> Result<Self> {
        let (c_u, c_s) = derive_field_constants(&a_u, &a_s)?;
        Self::assemble(a_u, a_s, c_u, c_s)
    }

    /// Declared constants may only weaken the derived ones (both are lower
    /// bounds on the quadratic estimates).
    pub fn with_declared_constants(
        a_u: Matrix,
        a_s: Matrix,
        declared_c_u: f64,
        declared_c_s: f64,
    ) -> Result<Self> {
        let (c_u, c_s) = derive_field_constants(&a_u, &a_s)?;
        if !(declared_c_u > 0.0) || declared_c_u > c_u * (1.0 + 1e-12) {
            return Err(Error::Hyperbolicity(format!(
                "declared c_u = {declared_c_u} not certified: must lie in (0, {c_u}]"
            )));
        }
        if !(declared_c_s > 0.0) || declared_c_s > c_s * (1.0 + 1e-12) {
            return Err(Error::Hyperbolicity(format!(
                "declared c_s = {declared_c_s} not certified: must lie in (0, {c_s}]"
            )));
        }
        Self::assemble(a_u, a_s, declared_c_u, declared_c_s)
    }

    fn assemble(a_u: Matrix, a_s: Matrix, c_u: f64, c_s: f64) -> Result<Self> {
        let splitting = Splitting::new(a_u.rows(), a_s.rows())?;
        let norm = operator_norm_2(&a_u)?.max(operator_norm_2(&a_s)?);
        Ok(Self { splitting, a_u, a_s, c_u, c_s, norm })
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    pub fn a_u(&self) -> &Matrix {
        &self.a_u
    }

    pub fn a_s(&self) -> &Matrix {
        &self.a_s
    }

    pub fn c_u(&self) -> f64 {
        self.c_u
    }

    pub fn c_s(&self) -> f64 {
        self.c_s
    }

    pub fn operator_norm(&self) -> f64 {
        self.norm
    }

    pub fn full_matrix(&self) -> Matrix {
        Matrix::block_diag(&self.a_u, &self.a_s)
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        let (x, y) = self.splitting.split(z);
        self.splitting.join(&self.a_u.mul_vec(x), &self.a_s.mul_vec(y))
    }
}

/// Built-in perturbation families. Indices below use σ(i) = n−1−i, the
/// coordinate reversal, which keeps exactly one non-zero entry per row and
/// column of Dh so that ‖Dh‖₂ is the largest entry magnitude.
#[derive(Clone)]
pub enum PerturbationFamily {
    /// h = 0.
    Zero,
    /// h_i(z) = a·sin(z_{σ(i)}); vanishes at the origin.
    TrigSum { amplitude: f64 },
    /// h_i(z) = a·cos(z_{σ(i)}); h(0) ≠ 0.
    CosineOffset { amplitude: f64 },
    /// Diagonal quadratic h_i(v) = c_i·v_i² composed with the radial
    /// retraction of `profile`, as produced by localization.
    QuadraticCutoff { coeffs: Vec<f64>, profile: CutoffProfile },
    /// Caller-supplied procedures with caller-certified bounds; the caller
    /// accepts responsibility for their correctness.
    Custom {
        value: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        derivative: Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>,
        m_bound: f64,
        eps_bound: f64,
    },
}

impl fmt::Debug for PerturbationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::TrigSum { amplitude } => write!(f, "TrigSum {{ amplitude: {amplitude} }}"),
            Self::CosineOffset { amplitude } => {
                write!(f, "CosineOffset {{ amplitude: {amplitude} }}")
            }
            Self::QuadraticCutoff { coeffs, profile } => {
                write!(f, "QuadraticCutoff {{ coeffs: {coeffs:?}, profile: {profile:?} }}")
            }
            Self::Custom { m_bound, eps_bound, .. } => {
                write!(f, "Custom {{ m_bound: {m_bound}, eps_bound: {eps_bound} }}")
            }
        }
    }
}

/// Perturbation h: ℝⁿ → ℝⁿ with certified bounds: `m_bound` ≥ sup‖h‖ in the
/// block max norm, `eps_bound` ≥ sup‖Dh(z)‖₂.
#[derive(Debug, Clone)]
pub struct Perturbation {
    splitting: Splitting,
    family: PerturbationFamily,
    m_bound: f64,
    eps_bound: f64,
}

impl Perturbation {
    /// Builds a perturbation whose bounds are certified analytically per
    /// family.
    pub fn new(splitting: Splitting, family: PerturbationFamily) -> Result<Self> {
        let (m_bound, eps_bound) = Self::analytic_bounds(splitting, &family)?;
        Ok(Self { splitting, family, m_bound, eps_bound })
    }

    /// Overrides the declared bounds. Intended for audits and for callers who
    /// certify tighter constants themselves; `audit_perturbation` reports a
    /// failure when a declared bound is empirically violated.
    pub fn with_declared_bounds(
        splitting: Splitting,
        family: PerturbationFamily,
        m_bound: f64,
        eps_bound: f64,
    ) -> Result<Self> {
        if !(m_bound >= 0.0 && m_bound.is_finite() && eps_bound >= 0.0 && eps_bound.is_finite()) {
            return Err(Error::Precondition(format!(
                "declared bounds must be finite and non-negative, got M={m_bound}, eps={eps_bound}"
            )));
        }
        // reject structurally invalid families eagerly
        Self::analytic_bounds(splitting, &family)?;
        Ok(Self { splitting, family, m_bound, eps_bound })
    }

    fn analytic_bounds(splitting: Splitting, family: &PerturbationFamily) -> Result<(f64, f64)> {
        let n = splitting.dim();
        match family {
            PerturbationFamily::Zero => Ok((0.0, 0.0)),
            PerturbationFamily::TrigSum { amplitude }
            | PerturbationFamily::CosineOffset { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::NonFinite("perturbation amplitude"));
                }
                let a = amplitude.abs();
                // per-block Euclidean norm of a vector of entries ≤ a
                let m = a * (splitting.u().max(splitting.s()) as f64).sqrt();
                Ok((m, a))
            }
            PerturbationFamily::QuadraticCutoff { coeffs, profile } => {
                if coeffs.len() != n {
                    return Err(Error::Dimension(format!(
                        "quadratic coefficients: expected {n} entries, got {}",
                        coeffs.len()
                    )));
                }
                if !coeffs.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinite("quadratic coefficients"));
                }
                let cmax = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                // sup over the δ-ball of ‖Dh(v)‖₂ = max_i 2|c_i||v_i|
                let eps_ball = 2.0 * cmax * profile.delta();
                let m = eps_ball * profile.delta();
                let eps = eps_ball * profile.derivative_bound();
                Ok((m, eps))
            }
            PerturbationFamily::Custom { m_bound, eps_bound, .. } => {
                if !(m_bound.is_finite() && eps_bound.is_finite()) {
                    return Err(Error::NonFinite("custom perturbation bounds"));
                }
                Ok((*m_bound, *eps_bound))
            }
        }
    }

    pub fn splitting(&self) -> Splitting {
        self.splitting
    }

    pub fn dim(&self) -> usize {
        self.splitting.dim()
    }

    pub fn family(&self) -> &PerturbationFamily {
        &self.family
    }

    /// Declared bound M ≥ sup‖h‖ in the block max norm.
    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    /// Declared bound ε ≥ sup‖Dh‖₂.
    pub fn eps_bound(&self) -> f64 {
        self.eps_bound
    }

    pub fn value(&self, z: &[f64]) -> Vector {
        let n = self.dim();
        assert_eq!(z.len(), n, "perturbation point dimension mismatch");
        match &self.family {
            PerturbationFamily::Zero => Vector::zeros(n),
            PerturbationFamily::TrigSum { amplitude } => {
                Vector::new((0..n).map(|i| amplitude * z[n - 1 - i].sin()).collect())
            }
            PerturbationFamily::CosineOffset { amplitude } => {
                Vector::new((0..n).map(|i| amplitude * z[n - 1 - i].cos()).collect())
            }
            PerturbationFamily::QuadraticCutoff { coeffs, profile } => {
                let v = profile.retract(z);
                Vector::new((0..n).map(|i| coeffs[i] * v[i] * v[i]).collect())
            }
            PerturbationFamily::Custom { value, .. } => Vector::new(value(z)),
        }
    }

    pub fn derivative(&self, z: &[f64]) -> Matrix {
        let n = self.dim();
        assert_eq!(z.len(), n, "perturbation point dimension mismatch");
        match &self.family {
            PerturbationFamily::Zero => Matrix::zeros(n, n),
            PerturbationFamily::TrigSum { amplitude } => {
                let mut dh = Matrix::zeros(n, n);
                for i in 0..n {
                    dh[(i, n - 1 - i)] = amplitude * z[n - 1 - i].cos();
                }
                dh
            }
            PerturbationFamily::CosineOffset { amplitude } => {
                let mut dh = Matrix::zeros(n, n);
                for i in 0..n {
                    dh[(i, n - 1 - i)] = -amplitude * z[n - 1 - i].sin();
                }
                dh
            }
            PerturbationFamily::QuadraticCutoff { coeffs, profile } => {
                let v = profile.retract(z);
                let dr = profile.retraction_jacobian(z);
                // Dh(v)·DR(z) with Dh(v) = diag(2 c_i v_i)
                let mut out = Matrix::zeros(n, n);
                for i in 0..n {
                    let row = 2.0 * coeffs[i] * v[i];
                    for j in 0..n {
                        out[(i, j)] = row * dr[(i, j)];
                    }
                }
                out
            }
            PerturbationFamily::Custom { derivative, .. } => {
                let dh = derivative(z);
                assert_eq!((dh.rows(), dh.cols()), (n, n), "custom derivative shape mismatch");
                dh
            }
        }
    }

    /// Evaluates h(anchor + offset) without rounding the sum first. Window
    /// solves pass anchors up to ~2⁴⁰ times larger than the offsets, where
    /// the rounded sum quantizes the argument at the anchor's ULP and turns
    /// h into a staircase in the offset, stalling Newton damping near tread
    /// edges. The trigonometric families split the argument exactly via the
    /// angle-addition identities; the remaining families are only evaluated
    /// near the origin, where the rounded sum is accurate.
    pub fn value_at_offset(&self, anchor: &[f64], offset: &[f64]) -> Vector {
        let n = self.dim();
        assert_eq!(anchor.len(), n, "perturbation anchor dimension mismatch");
        assert_eq!(offset.len(), n, "perturbation offset dimension mismatch");
        match &self.family {
            PerturbationFamily::Zero => Vector::zeros(n),
            PerturbationFamily::TrigSum { amplitude } => Vector::new(
                (0..n)
                    .map(|i| {
                        let j = n - 1 - i;
                        let (sp, cp) = anchor[j].sin_cos();
                        let (sq, cq) = offset[j].sin_cos();
                        amplitude * (sp * cq + cp * sq)
                    })
                    .collect(),
            ),
            PerturbationFamily::CosineOffset { amplitude } => Vector::new(
                (0..n)
                    .map(|i| {
                        let j = n - 1 - i;
                        let (sp, cp) = anchor[j].sin_cos();
                        let (sq, cq) = offset[j].sin_cos();
                        amplitude * (cp * cq - sp * sq)
                    })
                    .collect(),
            ),
            _ => {
                let point: Vec<f64> =
                    anchor.iter().zip(offset).map(|(a, d)| a + d).collect();
                self.value(&point)
            }
        }
    }

    /// Derivative counterpart of [`Perturbation::value_at_offset`]: Dh at
    /// anchor + offset with the argument split before any trigonometric
    /// evaluation.
    pub fn derivative_at_offset(&self, anchor: &[f64], offset: &[f64]) -> Matrix {
        let n = self.dim();
        assert_eq!(anchor.len(), n, "perturbation anchor dimension mismatch");
        assert_eq!(offset.len(), n, "perturbation offset dimension mismatch");
        match &self.family {
            PerturbationFamily::TrigSum { amplitude } => {
                let mut dh = Matrix::zeros(n, n);
                for i in 0..n {
                    let j = n - 1 - i;
                    let (sp, cp) = anchor[j].sin_cos();
                    let (sq, cq) = offset[j].sin_cos();
                    dh[(i, j)] = amplitude * (cp * cq - sp * sq);
                }
                dh
            }
            PerturbationFamily::CosineOffset { amplitude } => {
                let mut dh = Matrix::zeros(n, n);
                for i in 0..n {
                    let j = n - 1 - i;
                    let (sp, cp) = anchor[j].sin_cos();
                    let (sq, cq) = offset[j].sin_cos();
                    dh[(i, j)] = -amplitude * (sp * cq + cp * sq);
                }
                dh
            }
            _ => {
                let point: Vec<f64> =
                    anchor.iter().zip(offset).map(|(a, d)| a + d).collect();
                self.derivative(&point)
            }
        }
    }
}

/// Empirical audit of a perturbation's declared bounds over seeded uniform
/// samples in the box [−box_radius, box_radius]ⁿ.
#[derive(Debug, Clone)]
pub struct PerturbationAuditReport {
    pub samples: usize,
    pub max_h_norm: f64,
    pub max_dh_norm: f64,
    pub declared_m: f64,
    pub declared_eps: f64,
    pub pass: bool,
    pub worst_h_point: Vector,
    pub worst_dh_point: Vector,
}

pub fn audit_perturbation(
    pert: &Perturbation,
    box_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<PerturbationAuditReport> {
    if !(box_radius > 0.0 && box_radius.is_finite()) {
        return Err(Error::Precondition(format!("audit box radius must be positive, got {box_radius}")));
    }
    if samples == 0 {
        return Err(Error::Precondition("audit needs at least one sample".into()));
    }
    let mut rng = sampling::rng(seed);
    let n = pert.dim();
    let mut max_h = f64::NEG_INFINITY;
    let mut max_dh = f64::NEG_INFINITY;
    let mut worst_h = Vector::zeros(n);
    let mut worst_dh = Vector::zeros(n);
    for _ in 0..samples {
        let z = sampling::in_box(&mut rng, n, box_radius);
        let h_norm = pert.splitting().block_max_norm(&pert.value(&z));
        if h_norm > max_h {
            max_h = h_norm;
            worst_h = Vector::new(z.clone());
        }
        let dh_norm = operator_norm_2(&pert.derivative(&z))?;
        if dh_norm > max_dh {
            max_dh = dh_norm;
            worst_dh = Vector::new(z);
        }
    }
    let pass = max_h <= pert.m_bound() + 1e-12 && max_dh <= pert.eps_bound() + 1e-12;
    Ok(PerturbationAuditReport {
        samples,
        max_h_norm: max_h,
        max_dh_norm: max_dh,
        declared_m: pert.m_bound(),
        declared_eps: pert.eps_bound(),
        pass,
        worst_h_point: worst_h,
        worst_dh_point: worst_dh,
    })
}

/// Discrete system g_λ(z) = Az + λh(z), 0 ≤ λ ≤ 1.
///
/// The thresholds ε < ε₁ (invertibility) and ε < min(ε₀, ε₁) (conjugacy
/// construction) are enforced by the operations that need them, so that
/// hypothesis *checks* can still be run on systems that violate them.
#[derive(Debug, Clone)]
pub struct MapSystem {
    linear: HyperbolicLinearMap,
    pert: Perturbation,
    lambda: f64,
}

impl MapSystem {
    pub fn new(linear: HyperbolicLinearMap, pert: Perturbation, lambda: f64) -> Result<Self> {
        if pert.splitting() != linear.splitting() {
            return Err(Error::Dimension(format!(
                "perturbation splitting {:?} does not match linear splitting {:?}",
                pert.splitting(),
                linear.splitting()
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Precondition(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(Self { linear, pert, lambda })
    }

    pub fn linear(&self) -> &HyperbolicLinearMap {
        &self.linear
    }

    pub fn pert(&self) -> &Perturbation {
        &self.pert
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn splitting(&self) -> Splitting {
        self.linear.splitting()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.linear.clone(), self.pert.clone(), lambda)
    }

    /// Effective perturbation magnitude bounds of λh.
    pub fn effective_m(&self) -> f64 {
        self.lambda * self.pert.m_bound()
    }

    pub fn effective_eps(&self) -> f64 {
        self.lambda * self.pert.eps_bound()
    }

    /// g_λ(z) = Az + λh(z).
    pub fn eval(&self, z: &Vector) -> Vector {
        self.linear.apply(z).add(&self.pert.value(z).scale(self.lambda))
    }

    /// Dg_λ(z) = A + λDh(z).
    pub fn jacobian(&self, z: &Vector) -> Matrix {
        self.linear.full_matrix().add(&self.pert.derivative(z).scale(self.lambda))
    }

    /// Solves g_λ(z) = y by damped Newton from the start point A⁻¹y, then
    /// asserts the Lipschitz-inverse bound ‖g⁻¹(y) − g⁻¹(g(start))‖ ≤
    /// (ε₁ − λε)⁻¹‖y − g(start)‖ as a certificate that the inverse behaved
    /// like the guaranteed homeomorphism.
    pub fn invert(&self, y: &Vector, tol: f64) -> Result<Vector> {
        let eps1 = self.linear.eps1();
        let eff_eps = self.effective_eps();
        if eff_eps >= eps1 {
            return Err(Error::Precondition(format!(
                "inversion needs λ·ε < ε₁ = 1/\u{2016}A\u{207b}\u{00b9}\u{2016}; got {eff_eps} ≥ {eps1}"
            )));
        }
        let start = self.linear.apply_inverse(y);
        let residual = |z: &Vector| self.eval(z).sub(y);
        let jacobian = |z: &Vector| self.jacobian(z);
        // The stopping tolerance scales with the magnitude of y: far out on
        // an expanding orbit, one unit in the last place of y already
        // exceeds any fixed absolute tolerance.
        let scaled_tol = tol * (1.0 + y.norm_inf());
        let root = newton_solve(&residual, &jacobian, &start, scaled_tol, 50)?;

        let lip = 1.0 / (eps1 - eff_eps);
        let spl = self.splitting();
        let moved = spl.block_max_norm(&root.sub(&start));
        let defect = spl.block_max_norm(&self.eval(&start).sub(y));
        let budget = lip * defect + 1e-9 * (1.0 + spl.block_max_norm(y));
        if moved > budget {
            return Err(Error::Hypothesis(format!(
                "inverse moved {moved:.6e}, beyond the Lipschitz-inverse budget {budget:.6e}"
            )));
        }
        Ok(root)
    }
}

/// Continuous system z' = Az + λh(z) with a fixed integration step for its
/// flow evaluations.
#[derive(Debug, Clone)]
pub struct OdeSystem {
    linear: HyperbolicLinearField,
    pert: Perturbation,
    lambda: f64,
    step: f64,
}

impl OdeSystem {
    pub fn new(
        linear: HyperbolicLinearField,
        pert: Perturbation,
        lambda: f64,
        step: f64,
    ) -> Result<Self> {
        if pert.splitting() != linear.splitting() {
            return Err(Error::Dimension(format!(
                "perturbation splitting {:?} does not match linear splitting {:?}",
                pert.splitting(),
                linear.splitting()
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Precondition(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Precondition(format!("integration step must be positive, got {step}")));
        }
        Ok(Self { linear, pert, lambda, step })
    }

    pub fn linear(&self) -> &HyperbolicLinearField {
        &self.linear
    }

    pub fn pert(&self) -> &Perturbation {
        &self.pert
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn splitting(&self) -> Splitting {
        self.linear.splitting()
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.linear.clone(), self.pert.clone(), lambda, self.step)
    }

    pub fn effective_m(&self) -> f64 {
        self.lambda * self.pert.m_bound()
    }

    pub fn effective_eps(&self) -> f64 {
        self.lambda * self.pert.eps_bound()
    }

    /// f_λ(z) = Az + λh(z).
    pub fn field(&self, z: &Vector) -> Vector {
        self.linear.apply(z).add(&self.pert.value(z).scale(self.lambda))
    }

    /// Df_λ(z) = A + λDh(z).
    pub fn field_jacobian(&self, z: &Vector) -> Matrix {
        self.linear.full_matrix().add(&self.pert.derivative(z).scale(self.lambda))
    }

    /// Flow φ(t, z) by fixed-step RK4.
    pub fn flow(&self, z: &Vector, t: f64) -> Result<Vector> {
        integrate(&|v: &Vector| self.field(v), z, 0.0, t, self.step)
    }

    /// Flow together with its space derivative, integrating the variational
    /// equation M' = Df(z)·M jointly with the state. With the shared RK4
    /// grid this is the exact derivative of the discrete flow map.
    pub fn flow_with_jacobian(&self, z: &Vector, t: f64) -> Result<(Vector, Matrix)> {
        let n = self.splitting().dim();
        let mut joint = Vec::with_capacity(n + n * n);
        joint.extend_from_slice(z);
        joint.extend_from_slice(Matrix::identity(n).data());
        let field = |w: &Vector| -> Vector {
            let state = Vector::new(w[..n].to_vec());
            let f = self.field(&state);
            let df = self.field_jacobian(&state);
            let mut out = Vec::with_capacity(n + n * n);
            out.extend_from_slice(&f);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += df[(i, k)] * w[n + k * n + j];
                    }
                    out.push(acc);
                }
            }
            Vector::new(out)
        };
        let end = integrate(&field, &Vector::new(joint), 0.0, t, self.step)?;
        let state = Vector::new(end[..n].to_vec());
        let jac = Matrix::new(n, n, end[n..].to_vec())?;
        Ok((state, jac))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::reference;

    #[test]
    fn splitting_rejects_empty_blocks() {
        assert!(Splitting::new(0, 1).is_err());
        assert!(Splitting::new(1, 0).is_err());
    }

    #[test]
    fn block_max_norm_is_max_of_block_euclidean_norms() {
        let spl = Splitting::new(2, 1).unwrap();
        assert_abs_diff_eq!(spl.block_max_norm(&[3.0, 4.0, -2.0]), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spl.block_max_norm(&[0.1, 0.0, -2.0]), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn reference_map_constants() {
        let (c_u, c_s, eps1) = derive_map_constants(
            &Matrix::new(1, 1, vec![2.0]).unwrap(),
            &Matrix::new(1, 1, vec![0.5]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(c_u, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c_s, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(eps1, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn map_constants_for_wider_blocks() {
        // a_u = 3·I₂ expands by 3; a_s = diag(0.5, 0.25) contracts by 0.5;
        // ε₁ = 1/max(1/3, 4) = 0.25.
        let a_u = Matrix::new(2, 2, vec![3.0, 0.0, 0.0, 3.0]).unwrap();
        let a_s = Matrix::new(2, 2, vec![0.5, 0.0, 0.0, 0.25]).unwrap();
        let (c_u, c_s, eps1) = derive_map_constants(&a_u, &a_s).unwrap();
        assert_abs_diff_eq!(c_u, 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(c_s, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(eps1, 0.25, epsilon = 1e-10);
    }

    #[test]
    fn non_hyperbolic_blocks_are_rejected() {
        let id = Matrix::identity(1);
        let half = Matrix::new(1, 1, vec![0.5]).unwrap();
        let two = Matrix::new(1, 1, vec![2.0]).unwrap();
        assert!(matches!(derive_map_constants(&id, &half), Err(Error::Hyperbolicity(_))));
        assert!(matches!(derive_map_constants(&two, &id), Err(Error::Hyperbolicity(_))));
    }

    #[test]
    fn declared_constants_certified_against_computed() {
        let a_u = Matrix::new(1, 1, vec![2.0]).unwrap();
        let a_s = Matrix::new(1, 1, vec![0.5]).unwrap();
        // weakening is fine
        let m = HyperbolicLinearMap::with_declared_constants(a_u.clone(), a_s.clone(), 1.5, 0.6)
            .unwrap();
        assert_eq!(m.c_u(), 1.5);
        assert_eq!(m.c_s(), 0.6);
        // overclaiming contraction is rejected
        let got = HyperbolicLinearMap::with_declared_constants(a_u, a_s, 2.0, 0.4);
        assert!(matches!(got, Err(Error::Hyperbolicity(_))));
    }

    #[test]
    fn reference_field_constants() {
        let (c_u, c_s) = derive_field_constants(
            &Matrix::new(1, 1, vec![1.0]).unwrap(),
            &Matrix::new(1, 1, vec![-1.0]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(c_u, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c_s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn field_constants_use_symmetric_part() {
        // a_u = [[1, 4],[0, 1]]: symmetric part [[1,2],[2,1]] has λ_min = -1.
        let a_u = Matrix::new(2, 2, vec![1.0, 4.0, 0.0, 1.0]).unwrap();
        let a_s = Matrix::new(1, 1, vec![-1.0]).unwrap();
        assert!(matches!(derive_field_constants(&a_u, &a_s), Err(Error::Hyperbolicity(_))));
    }

    #[test]
    fn trig_family_bounds_and_values() {
        let spl = Splitting::new(1, 1).unwrap();
        let pert =
            Perturbation::new(spl, PerturbationFamily::TrigSum { amplitude: 0.05 }).unwrap();
        assert_abs_diff_eq!(pert.m_bound(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(pert.eps_bound(), 0.05, epsilon = 1e-15);
        // h(x, y) = 0.05·(sin y, sin x)
        let h = pert.value(&[0.3, 0.7]);
        assert_abs_diff_eq!(h[0], 0.05 * 0.7_f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(h[1], 0.05 * 0.3_f64.sin(), epsilon = 1e-15);
        let dh = pert.derivative(&[0.3, 0.7]);
        assert_abs_diff_eq!(dh[(0, 1)], 0.05 * 0.7_f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(dh[(1, 0)], 0.05 * 0.3_f64.cos(), epsilon = 1e-15);
        assert_eq!(dh[(0, 0)], 0.0);
    }

    #[test]
    fn perturbation_derivative_matches_finite_differences() {
        let e1 = reference::e1();
        let pert = e1.pert();
        let z = [0.4, -1.1];
        let dh = pert.derivative(&z);
        let step = 1e-6;
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += step;
            zm[j] -= step;
            let hp = pert.value(&zp);
            let hm = pert.value(&zm);
            for i in 0..2 {
                let fd = (hp[i] - hm[i]) / (2.0 * step);
                assert_abs_diff_eq!(dh[(i, j)], fd, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn audit_passes_honest_bounds_and_fails_understated_ones() {
        let e1 = reference::e1();
        let report = audit_perturbation(e1.pert(), 5.0, 500, 42).unwrap();
        assert!(report.pass);
        assert!(report.max_h_norm <= 0.05 + 1e-12);
        assert!(report.max_dh_norm <= 0.05 + 1e-12);

        let spl = Splitting::new(1, 1).unwrap();
        let lying = Perturbation::with_declared_bounds(
            spl,
            PerturbationFamily::TrigSum { amplitude: 0.05 },
            0.01,
            0.05,
        )
        .unwrap();
        let report = audit_perturbation(&lying, 5.0, 500, 42).unwrap();
        assert!(!report.pass);
        assert!(report.max_h_norm > 0.01);
        // witness point actually violates the declared bound
        let h = lying.value(&report.worst_h_point);
        assert!(spl.block_max_norm(&h) > 0.01);
    }

    #[test]
    fn map_eval_and_jacobian() {
        let e1 = reference::e1();
        let z = Vector::new(vec![1.0, 2.0]);
        let g = e1.eval(&z);
        assert_abs_diff_eq!(g[0], 2.0 + 0.05 * 2.0_f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0 + 0.05 * 1.0_f64.sin(), epsilon = 1e-15);
        let dg = e1.jacobian(&z);
        assert_abs_diff_eq!(dg[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dg[(0, 1)], 0.05 * 2.0_f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(dg[(1, 1)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn inversion_round_trip() {
        let e1 = reference::e1();
        let z = Vector::new(vec![0.8, -1.3]);
        let y = e1.eval(&z);
        let back = e1.invert(&y, 1e-12).unwrap();
        assert!(back.sub(&z).norm_inf() < 1e-10);
    }

    #[test]
    fn inversion_requires_threshold() {
        // amplitude 1.0 gives ε = 1 ≥ ε₁ = 0.5: inversion must refuse
        let sys = reference::e1_with_amplitude(1.0);
        let got = sys.invert(&Vector::new(vec![0.0, 0.0]), 1e-10);
        assert!(matches!(got, Err(Error::Precondition(_))));
    }

    #[test]
    fn lambda_zero_inverts_linearly() {
        let e1 = reference::e1().with_lambda(0.0).unwrap();
        let y = Vector::new(vec![2.0, 1.0]);
        let z = e1.invert(&y, 1e-12).unwrap();
        assert_abs_diff_eq!(z[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ode_field_and_flow() {
        let e2 = reference::e2();
        let z = Vector::new(vec![0.5, 0.5]);
        let f = e2.field(&z);
        assert_abs_diff_eq!(f[0], 0.5 + 0.05 * 0.5_f64.sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], -0.5 + 0.05 * 0.5_f64.sin(), epsilon = 1e-15);
        // flow of the λ=0 system is the matrix exponential
        let lin = e2.with_lambda(0.0).unwrap();
        let end = lin.flow(&z, 1.0).unwrap();
        assert_abs_diff_eq!(end[0], 0.5 * 1.0_f64.exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(end[1], 0.5 * (-1.0_f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn flow_jacobian_matches_finite_differences() {
        let e2 = reference::e2();
        let z = Vector::new(vec![0.4, -0.3]);
        let (_, jac) = e2.flow_with_jacobian(&z, 0.7).unwrap();
        let step = 1e-6;
        for j in 0..2 {
            let mut zp = z.clone().into_inner();
            let mut zm = z.clone().into_inner();
            zp[j] += step;
            zm[j] -= step;
            let fp = e2.flow(&Vector::new(zp), 0.7).unwrap();
            let fm = e2.flow(&Vector::new(zm), 0.7).unwrap();
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * step);
                assert_abs_diff_eq!(jac[(i, j)], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn split_evaluation_matches_pointwise_at_moderate_scale() {
        let e1 = reference::e1();
        let pert = e1.pert();
        let anchor = [1.3_f64, -0.8];
        let offset = [0.21_f64, 0.09];
        let point = [anchor[0] + offset[0], anchor[1] + offset[1]];
        let split = pert.value_at_offset(&anchor, &offset);
        let plain = pert.value(&point);
        let dsplit = pert.derivative_at_offset(&anchor, &offset);
        let dplain = pert.derivative(&point);
        for i in 0..2 {
            assert_abs_diff_eq!(split[i], plain[i], epsilon = 1e-15);
            for j in 0..2 {
                assert_abs_diff_eq!(dsplit[(i, j)], dplain[(i, j)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn split_evaluation_stays_smooth_at_large_anchors() {
        // At anchors near 2⁴², the rounded sum anchor+offset cannot resolve
        // offset changes below ~2⁻¹⁰, so pointwise evaluation is constant in
        // the offset there; the split form must still move at rate ≈ a·cos.
        let e1 = reference::e1();
        let pert = e1.pert();
        let anchor = [3.0 * 2f64.powi(40), 2.2 * 2f64.powi(40)];
        let bump = 1e-7;
        let base = pert.value_at_offset(&anchor, &[0.0, 0.0]);
        let moved = pert.value_at_offset(&anchor, &[0.0, bump]);
        let frozen = pert.value(&[anchor[0], anchor[1] + bump]);
        // pointwise evaluation is quantized: the bump is lost entirely
        assert_abs_diff_eq!(frozen[0], pert.value(&anchor)[0], epsilon = 0.0);
        // split evaluation tracks the true derivative of a·sin at the anchor
        let expected = 0.05 * anchor[1].cos() * bump;
        assert_abs_diff_eq!(moved[0] - base[0], expected, epsilon = 1e-14);
        // and agrees with pointwise evaluation in the exactly representable
        // direction (offset 0)
        assert_abs_diff_eq!(base[0], pert.value(&anchor)[0], epsilon = 1e-15);
    }
}
