//! Versioned JSON run configuration: schema, validation, and construction of
//! the certified systems it describes.
//!
//! A config names a system (kind `map`, `ode`, or `localize`), optional
//! declared constants and perturbation bounds, solver and verification
//! settings, point batches, and a task list. Parsing is strict: unknown
//! fields are rejected, matrices are dimension-checked, declared constants
//! are certified against the derived ones, and declared perturbation bounds
//! must dominate the per-family analytic bounds. A config that parses is a
//! config the pipelines can run.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use hypconj::localize::CutoffProfile;
use hypconj::systems::PerturbationFamily;
use hypconj::{
    systems, HyperbolicLinearField, HyperbolicLinearMap, MapSystem, Matrix, OdeSystem,
    Perturbation, Splitting,
};

use crate::points::PointsSpec;

/// Schema tag accepted by [`parse_config`]; emitted configs carry it too.
pub const SCHEMA: &str = "hypconj-config/1";

/// Slack for certifying declared constants and bounds against derived
/// values: declarations may not be optimistic by more than this.
const CERTIFY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Map,
    Ode,
    Localize,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Map => "map",
            Kind::Ode => "ode",
            Kind::Localize => "localize",
        }
    }
}

/// The seven executable tasks. Subcommand names, config task-list entries,
/// and report rows all use the kebab-case form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    VerifyMap,
    Conjugate,
    Holder,
    VerifyOde,
    ConjugateOde,
    Localize,
    Periodic,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::VerifyMap => "verify-map",
            TaskKind::Conjugate => "conjugate",
            TaskKind::Holder => "holder",
            TaskKind::VerifyOde => "verify-ode",
            TaskKind::ConjugateOde => "conjugate-ode",
            TaskKind::Localize => "localize",
            TaskKind::Periodic => "periodic",
        }
    }

    /// The config kind this task runs against.
    pub fn required_kind(self) -> Kind {
        match self {
            TaskKind::VerifyMap | TaskKind::Conjugate | TaskKind::Holder | TaskKind::Periodic => {
                Kind::Map
            }
            TaskKind::VerifyOde | TaskKind::ConjugateOde => Kind::Ode,
            TaskKind::Localize => Kind::Localize,
        }
    }
}

// ---------------------------------------------------------------------------
// Raw schema (exact JSON shape; all validation beyond shape happens below)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: String,
    kind: Kind,
    splitting: RawSplitting,
    a_u: Vec<f64>,
    a_s: Vec<f64>,
    lambda: Option<f64>,
    perturbation: Option<RawPerturbation>,
    constants: Option<RawConstants>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    verify: RawVerify,
    points: Option<RawPoints>,
    #[serde(default)]
    holder: RawHolder,
    localize: Option<RawLocalize>,
    periodic: Option<RawPeriodic>,
    #[serde(default)]
    tasks: Vec<TaskKind>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplitting {
    u: usize,
    s: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    family: String,
    amplitude: Option<f64>,
    coeffs: Option<Vec<f64>>,
    delta: Option<f64>,
    declared_m: Option<f64>,
    declared_eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    c_u: Option<f64>,
    c_s: Option<f64>,
    eps1: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    alpha: Option<f64>,
    half_window: Option<usize>,
    tol: Option<f64>,
    defect_tol: Option<f64>,
    step: Option<f64>,
    delta_t: Option<f64>,
    t_horizon: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    eta: Option<f64>,
    cone_pairs: Option<usize>,
    box_radius: Option<f64>,
    covering_base: Option<Vec<f64>>,
    covering_window: Option<usize>,
    boundary_samples: Option<usize>,
    lambda_grid: Option<Vec<f64>>,
    time_samples: Option<usize>,
    segment_base: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoints {
    csv: Option<String>,
    grid: Option<Vec<RawAxis>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHolder {
    pairs: Option<usize>,
    k_max: Option<usize>,
    band: Option<[f64; 2]>,
    base_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLocalize {
    coeffs: Vec<f64>,
    eps: f64,
    delta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPeriodic {
    #[serde(rename = "loop")]
    loop_points: Vec<Vec<f64>>,
    alpha: Option<f64>,
}

// ---------------------------------------------------------------------------
// Validated configuration
// ---------------------------------------------------------------------------

/// The certified system a config describes.
#[derive(Debug, Clone)]
pub enum BuiltSystem {
    Map(MapSystem),
    Ode(OdeSystem),
    /// Kind `localize`: the bare linear map; the quadratic perturbation comes
    /// from the `localize` block and is built by the task.
    Linear(HyperbolicLinearMap),
}

/// Solver settings with defaults applied. `alpha` stays optional: tasks
/// resolve it to 1.25·α̂ of their system when absent.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub alpha: Option<f64>,
    pub half_window: usize,
    pub tol: f64,
    pub defect_tol: f64,
    pub step: f64,
    pub delta_t: f64,
    pub t_horizon: f64,
    pub seed: u64,
}

/// Verification settings with defaults applied. `eta` stays optional for
/// ODE configs (the flow cone check runs only when it is given); map
/// verification defaults it to η_max/2.
#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub eta: Option<f64>,
    pub cone_pairs: usize,
    pub box_radius: f64,
    pub covering_base: Option<Vec<f64>>,
    pub covering_window: usize,
    pub boundary_samples: usize,
    pub lambda_grid: Vec<f64>,
    pub time_samples: usize,
    pub segment_base: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct HolderSettings {
    pub pairs: usize,
    pub k_max: usize,
    pub band: (f64, f64),
    pub base_points: usize,
}

#[derive(Debug, Clone)]
pub struct LocalizeSettings {
    pub coeffs: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct PeriodicSettings {
    pub loop_points: Vec<Vec<f64>>,
    pub alpha: Option<f64>,
}

/// Raw system description kept for re-emission (the `localize` task writes a
/// globalized config back out in the same schema).
#[derive(Debug, Clone)]
pub struct SystemEcho {
    pub u: usize,
    pub s: usize,
    pub a_u: Vec<f64>,
    pub a_s: Vec<f64>,
    pub lambda: f64,
}

/// A validated run configuration: the certified system plus resolved
/// settings. Everything needed to execute its task list.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: Kind,
    pub system: BuiltSystem,
    pub solver: SolverSettings,
    pub verify: VerifySettings,
    pub holder: HolderSettings,
    pub points: Option<PointsSpec>,
    pub localize: Option<LocalizeSettings>,
    pub periodic: Option<PeriodicSettings>,
    pub tasks: Vec<TaskKind>,
    pub echo: SystemEcho,
    /// Directory CSV point paths resolve against (the config file's parent).
    pub config_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Replaces the task list (the binary runs exactly its subcommand's
    /// task), revalidating kind compatibility and per-task prerequisites.
    pub fn set_tasks(&mut self, tasks: Vec<TaskKind>) -> Result<()> {
        validate_tasks(self.kind, &tasks, self.points.is_some(), self.localize.is_some(),
            self.periodic.is_some())?;
        self.tasks = tasks;
        Ok(())
    }
}

/// Parses and validates a config from JSON text. Errors carry the offending
/// field; a `RunConfig` that comes back is fully certified.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).context("config schema violation")?;
    validate(raw)
}

/// [`parse_config`] on a file, recording its directory for CSV resolution.
pub fn parse_config_file(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut cfg =
        parse_config(&text).with_context(|| format!("in config {}", path.display()))?;
    cfg.config_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

fn validate(raw: RawConfig) -> Result<RunConfig> {
    if raw.schema != SCHEMA {
        bail!("schema: expected \"{SCHEMA}\", got \"{}\"", raw.schema);
    }
    let splitting = Splitting::new(raw.splitting.u, raw.splitting.s)
        .map_err(|e| anyhow::anyhow!("splitting: {e}"))?;
    let n = splitting.dim();
    let a_u = block_matrix("a_u", &raw.a_u, splitting.u())?;
    let a_s = block_matrix("a_s", &raw.a_s, splitting.s())?;

    let lambda = raw.lambda.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&lambda) {
        bail!("lambda: must lie in [0, 1], got {lambda}");
    }

    // Certify declared constants against the derived ones. Declarations may
    // be conservative but never optimistic: a declared expansion bound c_u
    // above the derived one, a declared contraction bound c_s below the
    // derived one, or a declared budget ε₁ above the derived one would claim
    // more hyperbolicity than the matrices deliver.
    match raw.kind {
        Kind::Map | Kind::Localize => {
            let (c_u, c_s, eps1) = systems::derive_map_constants(&a_u, &a_s)
                .map_err(|e| anyhow::anyhow!("a_u/a_s: {e}"))?;
            if let Some(decl) = &raw.constants {
                if let Some(d) = decl.c_u {
                    if d > c_u + CERTIFY_SLACK {
                        bail!("constants.c_u: declared {d} exceeds derived {c_u}");
                    }
                }
                if let Some(d) = decl.c_s {
                    if d < c_s - CERTIFY_SLACK {
                        bail!("constants.c_s: declared {d} is below derived {c_s}");
                    }
                }
                if let Some(d) = decl.eps1 {
                    if d > eps1 + CERTIFY_SLACK {
                        bail!("constants.eps1: declared {d} exceeds derived {eps1}");
                    }
                }
            }
        }
        Kind::Ode => {
            let (c_u, c_s) = systems::derive_field_constants(&a_u, &a_s)
                .map_err(|e| anyhow::anyhow!("a_u/a_s: {e}"))?;
            if let Some(decl) = &raw.constants {
                if let Some(d) = decl.c_u {
                    if d > c_u + CERTIFY_SLACK {
                        bail!("constants.c_u: declared {d} exceeds derived {c_u}");
                    }
                }
                if let Some(d) = decl.c_s {
                    if d > c_s + CERTIFY_SLACK {
                        bail!("constants.c_s: declared {d} exceeds derived {c_s}");
                    }
                }
                if decl.eps1.is_some() {
                    bail!("constants.eps1: not applicable to kind \"ode\"");
                }
            }
        }
    }

    let solver = SolverSettings {
        alpha: check_positive_opt("solver.alpha", raw.solver.alpha)?,
        half_window: raw.solver.half_window.unwrap_or(40).max(1),
        tol: check_positive("solver.tol", raw.solver.tol.unwrap_or(1e-10))?,
        defect_tol: check_positive("solver.defect_tol", raw.solver.defect_tol.unwrap_or(1e-6))?,
        step: check_positive("solver.step", raw.solver.step.unwrap_or(0.01))?,
        delta_t: check_positive("solver.delta_t", raw.solver.delta_t.unwrap_or(0.5))?,
        t_horizon: check_positive("solver.t_horizon", raw.solver.t_horizon.unwrap_or(8.0))?,
        seed: raw.solver.seed.unwrap_or(0),
    };

    let verify = VerifySettings {
        eta: check_positive_opt("verify.eta", raw.verify.eta)?,
        cone_pairs: raw.verify.cone_pairs.unwrap_or(1000),
        box_radius: check_positive("verify.box_radius", raw.verify.box_radius.unwrap_or(2.0))?,
        covering_base: check_point_opt("verify.covering_base", raw.verify.covering_base, n)?,
        covering_window: raw.verify.covering_window.unwrap_or(2).max(1),
        boundary_samples: raw.verify.boundary_samples.unwrap_or(500),
        lambda_grid: {
            let grid = raw.verify.lambda_grid.unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
            for (i, l) in grid.iter().enumerate() {
                if !(0.0..=1.0).contains(l) {
                    bail!("verify.lambda_grid[{i}]: must lie in [0, 1], got {l}");
                }
            }
            grid
        },
        time_samples: raw.verify.time_samples.unwrap_or(25),
        segment_base: check_point_opt("verify.segment_base", raw.verify.segment_base, n)?,
    };

    let holder = HolderSettings {
        pairs: raw.holder.pairs.unwrap_or(50),
        k_max: raw.holder.k_max.unwrap_or(10).max(1),
        band: {
            let [lo, hi] = raw.holder.band.unwrap_or([1e-3, 1e-1]);
            if !(lo > 0.0 && lo < hi && hi < 1.0) {
                bail!("holder.band: must satisfy 0 < lo < hi < 1, got [{lo}, {hi}]");
            }
            (lo, hi)
        },
        base_points: raw.holder.base_points.unwrap_or(12).max(2),
    };

    let points = match raw.points {
        None => None,
        Some(p) => Some(validate_points(p, n)?),
    };

    let localize = match raw.localize {
        None => None,
        Some(l) => {
            if l.coeffs.len() != n {
                bail!("localize.coeffs: expected {n} entries, got {}", l.coeffs.len());
            }
            check_positive("localize.eps", l.eps)?;
            check_positive("localize.delta", l.delta)?;
            Some(LocalizeSettings { coeffs: l.coeffs, eps: l.eps, delta: l.delta })
        }
    };
    if raw.kind == Kind::Localize && localize.is_none() {
        bail!("localize: required for kind \"localize\"");
    }
    if raw.kind == Kind::Localize && raw.perturbation.is_some() {
        bail!("perturbation: kind \"localize\" takes its perturbation from the localize block");
    }

    let periodic = match raw.periodic {
        None => None,
        Some(p) => {
            if p.loop_points.is_empty() {
                bail!("periodic.loop: needs at least one point");
            }
            for (i, pt) in p.loop_points.iter().enumerate() {
                if pt.len() != n {
                    bail!("periodic.loop[{i}]: expected {n} coordinates, got {}", pt.len());
                }
            }
            Some(PeriodicSettings {
                loop_points: p.loop_points,
                alpha: check_positive_opt("periodic.alpha", p.alpha)?,
            })
        }
    };

    validate_tasks(raw.kind, &raw.tasks, points.is_some(), localize.is_some(), periodic.is_some())?;

    let echo = SystemEcho {
        u: splitting.u(),
        s: splitting.s(),
        a_u: raw.a_u.clone(),
        a_s: raw.a_s.clone(),
        lambda,
    };

    let system = match raw.kind {
        Kind::Map => {
            let linear = HyperbolicLinearMap::new(a_u, a_s)
                .map_err(|e| anyhow::anyhow!("a_u/a_s: {e}"))?;
            let pert = build_perturbation(splitting, raw.perturbation.as_ref())?;
            BuiltSystem::Map(
                MapSystem::new(linear, pert, lambda)
                    .map_err(|e| anyhow::anyhow!("system certification: {e}"))?,
            )
        }
        Kind::Ode => {
            let linear = HyperbolicLinearField::new(a_u, a_s)
                .map_err(|e| anyhow::anyhow!("a_u/a_s: {e}"))?;
            let pert = build_perturbation(splitting, raw.perturbation.as_ref())?;
            BuiltSystem::Ode(
                OdeSystem::new(linear, pert, lambda, solver.step)
                    .map_err(|e| anyhow::anyhow!("system certification: {e}"))?,
            )
        }
        Kind::Localize => BuiltSystem::Linear(
            HyperbolicLinearMap::new(a_u, a_s).map_err(|e| anyhow::anyhow!("a_u/a_s: {e}"))?,
        ),
    };

    Ok(RunConfig {
        kind: raw.kind,
        system,
        solver,
        verify,
        holder,
        points,
        localize,
        periodic,
        tasks: raw.tasks,
        echo,
        config_dir: None,
    })
}

fn validate_tasks(
    kind: Kind,
    tasks: &[TaskKind],
    has_points: bool,
    has_localize: bool,
    has_periodic: bool,
) -> Result<()> {
    for (i, task) in tasks.iter().enumerate() {
        let need = task.required_kind();
        if need != kind {
            bail!(
                "tasks[{i}]: {} requires kind \"{}\", config has kind \"{}\"",
                task.name(),
                need.name(),
                kind.name()
            );
        }
        match task {
            TaskKind::Conjugate | TaskKind::ConjugateOde if !has_points => {
                bail!("tasks[{i}]: {} needs a points block", task.name());
            }
            TaskKind::Localize if !has_localize => {
                bail!("tasks[{i}]: localize needs a localize block");
            }
            TaskKind::Periodic if !has_periodic => {
                bail!("tasks[{i}]: periodic needs a periodic block");
            }
            _ => {}
        }
    }
    Ok(())
}

fn build_perturbation(splitting: Splitting, raw: Option<&RawPerturbation>) -> Result<Perturbation> {
    let Some(raw) = raw else {
        return Perturbation::new(splitting, PerturbationFamily::Zero)
            .map_err(|e| anyhow::anyhow!("perturbation: {e}"));
    };
    let family = match raw.family.as_str() {
        "zero" => {
            reject_param("zero", "amplitude", raw.amplitude.is_some())?;
            reject_param("zero", "coeffs", raw.coeffs.is_some())?;
            reject_param("zero", "delta", raw.delta.is_some())?;
            PerturbationFamily::Zero
        }
        "trig-sum" | "cosine-offset" => {
            reject_param(&raw.family, "coeffs", raw.coeffs.is_some())?;
            reject_param(&raw.family, "delta", raw.delta.is_some())?;
            let amplitude = raw.amplitude.with_context(|| {
                format!("perturbation.amplitude: required by family \"{}\"", raw.family)
            })?;
            if raw.family == "trig-sum" {
                PerturbationFamily::TrigSum { amplitude }
            } else {
                PerturbationFamily::CosineOffset { amplitude }
            }
        }
        "quadratic-cutoff" => {
            reject_param("quadratic-cutoff", "amplitude", raw.amplitude.is_some())?;
            let coeffs = raw
                .coeffs
                .clone()
                .context("perturbation.coeffs: required by family \"quadratic-cutoff\"")?;
            let delta = raw
                .delta
                .context("perturbation.delta: required by family \"quadratic-cutoff\"")?;
            let profile = CutoffProfile::new(delta)
                .map_err(|e| anyhow::anyhow!("perturbation.delta: {e}"))?;
            PerturbationFamily::QuadraticCutoff { coeffs, profile }
        }
        other => bail!(
            "perturbation.family: unknown family \"{other}\" \
             (expected zero, trig-sum, cosine-offset, or quadratic-cutoff)"
        ),
    };

    let analytic = Perturbation::new(splitting, family.clone())
        .map_err(|e| anyhow::anyhow!("perturbation: {e}"))?;
    match (raw.declared_m, raw.declared_eps) {
        (None, None) => Ok(analytic),
        (m, eps) => {
            let m = m.unwrap_or_else(|| analytic.m_bound());
            let eps = eps.unwrap_or_else(|| analytic.eps_bound());
            if m < analytic.m_bound() - CERTIFY_SLACK {
                bail!(
                    "perturbation.declared_m: declared {m} is below the analytic bound {}",
                    analytic.m_bound()
                );
            }
            if eps < analytic.eps_bound() - CERTIFY_SLACK {
                bail!(
                    "perturbation.declared_eps: declared {eps} is below the analytic bound {}",
                    analytic.eps_bound()
                );
            }
            Perturbation::with_declared_bounds(splitting, family, m, eps)
                .map_err(|e| anyhow::anyhow!("perturbation: {e}"))
        }
    }
}

fn validate_points(raw: RawPoints, dim: usize) -> Result<PointsSpec> {
    match (raw.csv, raw.grid) {
        (Some(path), None) => Ok(PointsSpec::Csv(PathBuf::from(path))),
        (None, Some(axes)) => {
            if axes.len() != dim {
                bail!("points.grid: expected {dim} axes, got {}", axes.len());
            }
            for (i, ax) in axes.iter().enumerate() {
                if ax.count == 0 {
                    bail!("points.grid[{i}].count: must be at least 1");
                }
                if !(ax.min <= ax.max) {
                    bail!("points.grid[{i}]: min {} exceeds max {}", ax.min, ax.max);
                }
            }
            Ok(PointsSpec::Grid(axes))
        }
        (Some(_), Some(_)) => bail!("points: give either csv or grid, not both"),
        (None, None) => bail!("points: needs a csv path or a grid spec"),
    }
}

fn block_matrix(field: &str, entries: &[f64], side: usize) -> Result<Matrix> {
    if entries.len() != side * side {
        bail!(
            "{field}: expected {} row-major entries for a {side}×{side} block, got {}",
            side * side,
            entries.len()
        );
    }
    Matrix::new(side, side, entries.to_vec()).map_err(|e| anyhow::anyhow!("{field}: {e}"))
}

fn check_positive(field: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{field}: must be positive and finite, got {v}");
    }
    Ok(v)
}

fn check_positive_opt(field: &str, v: Option<f64>) -> Result<Option<f64>> {
    v.map(|v| check_positive(field, v)).transpose()
}

fn check_point_opt(field: &str, v: Option<Vec<f64>>, dim: usize) -> Result<Option<Vec<f64>>> {
    if let Some(p) = &v {
        if p.len() != dim {
            bail!("{field}: expected {dim} coordinates, got {}", p.len());
        }
    }
    Ok(v)
}

fn reject_param(family: &str, param: &str, present: bool) -> Result<()> {
    if present {
        bail!("perturbation.{param}: not used by family \"{family}\"");
    }
    Ok(())
}
