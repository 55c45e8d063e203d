//! Acceptance gate: ten end-to-end criteria covering hypothesis
//! verification, conjugacy construction, certificates, the Hölder suite,
//! the continuous-time suite, localization, uniqueness, and determinism —
//! all at pinned tolerances on the two reference systems.
//!
//! Each test prints exactly one summary line
//! `acceptance NN <name>: PASS|FAIL (…)` before asserting, so the verdict
//! of every criterion is visible even when the harness captures output.

mod common;

use std::fmt::Write as _;
use std::time::Instant;

use hypconj::covering::{self, CoveringMode};
use hypconj::numerics::{matrix_exp, newton_solve};
use hypconj::segments::{self, ExitTime, IsolatingSegment};
use hypconj::shadowing::{self, ShadowProblem, DEFAULT_MAX_ITER};
use hypconj::{cones, holder, localize, reference, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(number: usize, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("acceptance {number:02} {name}: PASS");
    } else {
        println!("acceptance {number:02} {name}: FAIL ({})", failures.join("; "));
    }
    assert!(failures.is_empty(), "acceptance {number:02} {name} failed: {failures:#?}");
}

fn seeded_box_points(count: usize, radius: f64, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Vector::new(vec![
                rng.gen_range(-radius..=radius),
                rng.gen_range(-radius..=radius),
            ])
        })
        .collect()
}

#[test]
fn criterion_01_hypothesis_verification_e1() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let sys = reference::e1();
    let lin = sys.linear();

    for (name, got, want) in [
        ("c_u", lin.c_u(), 2.0),
        ("c_s", lin.c_s(), 0.5),
        ("eps1", lin.eps1(), 0.5),
    ] {
        if (got - want).abs() > 1e-12 {
            failures.push(format!("{name} = {got}, expected {want}"));
        }
    }
    match cones::eta_max(lin.c_u(), lin.c_s()) {
        Ok(eta) if eta == 0.75 => {}
        Ok(eta) => failures.push(format!("eta_max = {eta}, expected 0.75")),
        Err(e) => failures.push(format!("eta_max: {e}")),
    }
    match cones::certify_eps0(lin, 0.1) {
        Ok(cert) if (cert.eps0 - 0.157).abs() <= 1e-3 => {}
        Ok(cert) => failures.push(format!("eps0 = {}, expected 0.157 ± 1e-3", cert.eps0)),
        Err(e) => failures.push(format!("eps0 certificate: {e}")),
    }
    match covering::alpha_hat_map(lin.c_u(), lin.c_s(), sys.pert().m_bound()) {
        Ok(a) if a == 0.2 => {}
        Ok(a) => failures.push(format!("alpha_hat = {a}, expected 0.2 exactly")),
        Err(e) => failures.push(format!("alpha_hat: {e}")),
    }

    let pairs = cones::sample_pairs(sys.splitting(), 2.0, 1000, 11);
    match cones::check_cone_map(&sys, 0.1, &pairs) {
        Ok(rep) if rep.pass && rep.pairs_checked == 1000 => {}
        Ok(rep) => failures.push(format!(
            "cone check: pass = {}, pairs = {}, min slack = {}",
            rep.pass, rep.pairs_checked, rep.min_slack
        )),
        Err(e) => failures.push(format!("cone check: {e}")),
    }

    let base = Vector::new(vec![0.3, -0.4]);
    for l1 in [0.0, 0.5, 1.0] {
        let chained: hypconj::Result<()> = (|| {
            let anchor_sys = sys.with_lambda(l1)?;
            let chain = covering::build_chain(&anchor_sys, &base, 2, 0.25)?;
            for l2 in [0.0, 0.5, 1.0] {
                let eval_sys = sys.with_lambda(l2)?;
                for j in 0..chain.hsets().len() - 1 {
                    let source = &chain.hsets()[j];
                    let target = chain.hsets()[j + 1].center();
                    let analytic = covering::check_covering(
                        &eval_sys,
                        source,
                        target,
                        CoveringMode::Analytic,
                        0,
                        0,
                    )?;
                    let sampled = covering::check_covering(
                        &eval_sys,
                        source,
                        target,
                        CoveringMode::Sampled,
                        1000,
                        13,
                    )?;
                    if !analytic.pass || !sampled.pass {
                        failures.push(format!(
                            "covering (λ1 = {l1}, λ2 = {l2}, link {j}): analytic {} \
                             ({:.3e}/{:.3e}), sampled {} ({:.3e}/{:.3e})",
                            analytic.pass,
                            analytic.exit_margin,
                            analytic.entry_margin,
                            sampled.pass,
                            sampled.exit_margin,
                            sampled.entry_margin
                        ));
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = chained {
            failures.push(format!("covering sweep at λ1 = {l1}: {e}"));
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 5.0 {
        failures.push(format!("runtime {elapsed:.2}s exceeds 5s"));
    }
    report(1, "hypothesis-verification-e1", &failures);
}

#[test]
fn criterion_02_conjugacy_construction_e1() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let sys = reference::e1();
    let (alpha, k, tol) = (0.25, 40usize, 1e-10);
    let mut max_defect = 0.0_f64;
    let mut max_roundtrip = 0.0_f64;

    for (i, z) in seeded_box_points(100, 3.0, 21).iter().enumerate() {
        let per_point: hypconj::Result<()> = (|| {
            let orbit = shadowing::rho_orbit(&sys, z, alpha, k, tol)?;
            if !(orbit.containment <= alpha) {
                failures.push(format!(
                    "containment {} > α at point {i}",
                    orbit.containment
                ));
            }
            let rz = orbit.center();
            let defect = shadowing::conjugacy_defect(&sys, z, alpha, k, tol)?;
            max_defect = max_defect.max(defect);

            let sigma_rho = shadowing::sigma(&sys, &rz, alpha, k, tol)?.value;
            max_roundtrip = max_roundtrip.max(sigma_rho.sub(z).norm_inf());
            let sz = shadowing::sigma(&sys, z, alpha, k, tol)?.value;
            let rho_sigma = shadowing::rho(&sys, &sz, alpha, k, tol)?.value;
            max_roundtrip = max_roundtrip.max(rho_sigma.sub(z).norm_inf());
            Ok(())
        })();
        if let Err(e) = per_point {
            failures.push(format!("point {i} ({z:?}): {e}"));
        }
    }
    if max_defect > 1e-6 {
        failures.push(format!("max conjugacy defect {max_defect:e} exceeds 1e-6"));
    }
    if max_roundtrip > 1e-6 {
        failures.push(format!("max inverse roundtrip error {max_roundtrip:e} exceeds 1e-6"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        failures.push(format!("runtime {elapsed:.2}s exceeds 60s"));
    }
    report(2, "conjugacy-construction-e1", &failures);
}

#[test]
fn criterion_03_alpha_independence() {
    let mut failures = Vec::new();
    let sys = reference::e1();
    for (i, z) in seeded_box_points(20, 2.0, 23).iter().enumerate() {
        match shadowing::alpha_independence(&sys, z, 0.25, 0.5, 40, 1e-10) {
            Ok(gap) if gap <= 1e-8 => {}
            Ok(gap) => failures.push(format!("gap {gap:e} at point {i} exceeds 1e-8")),
            Err(e) => failures.push(format!("point {i}: {e}")),
        }
    }
    report(3, "alpha-independence", &failures);
}

#[test]
fn criterion_04_truncation_geometry() {
    let mut failures = Vec::new();
    let sys = reference::e1();
    let alpha = 0.25;
    // The stopping tolerance sits well below the smallest expected gap so
    // the measured decay reflects the window truncation, not the solver.
    let tol = 1e-12;
    let bound = (5.0_f64 / 3.0).powi(-10) * 1.1;
    let points = [
        Vector::new(vec![0.5, 0.5]),
        Vector::new(vec![1.0, -1.0]),
        Vector::new(vec![-0.7, 0.3]),
        Vector::new(vec![1.5, 1.2]),
        Vector::new(vec![-1.1, -0.9]),
    ];
    for z in &points {
        let gaps: hypconj::Result<Vec<f64>> = (|| {
            let values = [10usize, 20, 30, 40]
                .iter()
                .map(|&w| Ok(shadowing::rho(&sys, z, alpha, w, tol)?.value))
                .collect::<hypconj::Result<Vec<_>>>()?;
            Ok(values.windows(2).map(|v| v[0].sub(&v[1]).norm_inf()).collect())
        })();
        match gaps {
            Ok(gaps) => {
                for k in 0..gaps.len() - 1 {
                    let ratio = gaps[k + 1] / gaps[k];
                    if !(ratio <= bound) {
                        failures.push(format!(
                            "gap ratio {ratio:.4e} at K = {} for z = {z:?} exceeds {bound:.4e}",
                            10 * (k + 1)
                        ));
                    }
                }
            }
            Err(e) => failures.push(format!("z = {z:?}: {e}")),
        }
    }
    report(4, "truncation-geometry", &failures);
}

#[test]
fn criterion_05_oracle_equivalence() {
    let mut failures = Vec::new();
    let sys = reference::e1();
    for (i, z) in seeded_box_points(20, 2.0, 31).iter().enumerate() {
        match shadowing::rho(&sys, z, 0.25, 40, 1e-12) {
            Ok(point) => {
                let sweep = common::banach_shadow(&sys, z, 40, 1e-13, 10_000);
                let gap = point.value.sub(&sweep).norm_inf();
                if gap > 1e-8 {
                    failures.push(format!(
                        "newton vs fixed-point sweep gap {gap:e} at point {i}"
                    ));
                }
            }
            Err(e) => failures.push(format!("point {i}: {e}")),
        }
    }

    let offset_sys = reference::e1_prime();
    let closed_loop: hypconj::Result<()> = (|| {
        let residual = |z: &Vector| offset_sys.eval(z).sub(z);
        let jacobian = |z: &Vector| offset_sys.jacobian(z).sub(&Matrix::identity(2));
        let fixed = newton_solve(&residual, &jacobian, &Vector::zeros(2), 1e-13, 50)?;
        let rho_origin = shadowing::rho(&offset_sys, &Vector::zeros(2), 0.25, 40, 1e-12)?.value;
        let gap = rho_origin.sub(&fixed).norm_inf();
        if gap > 1e-9 {
            failures.push(format!(
                "ρ(0) = {rho_origin:?} vs newton fixed point {fixed:?}: gap {gap:e}"
            ));
        }
        Ok(())
    })();
    if let Err(e) = closed_loop {
        failures.push(format!("offset-map fixed point: {e}"));
    }
    report(5, "oracle-equivalence", &failures);
}

#[test]
fn criterion_06_holder_suite_e1() {
    let mut failures = Vec::new();
    let sys = reference::e1();
    let gamma_formula = (5.0_f64 / 3.0).ln() / 2.0_f64.ln();

    let verdict: hypconj::Result<()> = (|| {
        let (theta_u, theta_s) = holder::thetas(2.0, 0.5, 0.05)?;
        if theta_u != 1.9 {
            failures.push(format!("theta_u = {theta_u}, expected 1.9"));
        }
        if (theta_s - 5.0 / 3.0).abs() > 1e-12 {
            failures.push(format!("theta_s = {theta_s}, expected 5/3"));
        }
        let est = holder::estimate(&sys, 0.25)?;
        if (est.lipschitz_l - 2.0).abs() > 1e-12 {
            failures.push(format!("lipschitz L = {}, expected 2", est.lipschitz_l));
        }
        if (est.gamma - gamma_formula).abs() > 1e-12 {
            failures.push(format!(
                "gamma = {} differs from ln(5/3)/ln 2 = {gamma_formula}",
                est.gamma
            ));
        }
        if (est.gamma - 0.7370).abs() > 1e-4 {
            failures.push(format!("gamma = {} not within 1e-4 of 0.7370", est.gamma));
        }

        let pairs = cones::sample_pairs(sys.splitting(), 2.0, 50, 41);
        let ks: Vec<usize> = (1..=10).collect();
        let basic = holder::check_basic_estimate(&sys, &pairs, &ks, 0.25, 30)?;
        if !basic.pass || basic.min_slack < 0.0 || basic.pairs_checked != 50 {
            failures.push(format!(
                "basic estimate: pass = {}, min slack = {:e}, pairs = {}",
                basic.pass, basic.min_slack, basic.pairs_checked
            ));
        }

        let bases = seeded_box_points(24, 1.5, 43);
        let fit = holder::empirical_holder(&sys, &bases, (1e-4, 1e-1), 0.25, 40, 47)?;
        if fit.slope < fit.gamma_reference - 0.05 {
            failures.push(format!(
                "empirical slope {} below gamma − 0.05 = {}",
                fit.slope,
                fit.gamma_reference - 0.05
            ));
        }
        if fit.max_ratio > fit.ratio_bound {
            failures.push(format!(
                "empirical ratio {} exceeds the proof constant {}",
                fit.max_ratio, fit.ratio_bound
            ));
        }

        // ε → 0: the improved exponent and the spectral-radius exponent
        // coincide exactly for diagonal blocks, and both equal 1 here.
        let clean = reference::e1_with_amplitude(0.0);
        let (tu0, ts0) = holder::thetas(2.0, 0.5, 0.0)?;
        let improved = holder::gamma_improved(tu0, ts0, clean.linear())?;
        let spectral = holder::bv_exponent(clean.linear().a_u(), clean.linear().a_s())?;
        if improved != 1.0 || spectral != 1.0 {
            failures.push(format!(
                "ε → 0 exponents: improved = {improved}, spectral = {spectral}, expected 1 = 1"
            ));
        }
        Ok(())
    })();
    if let Err(e) = verdict {
        failures.push(format!("suite error: {e}"));
    }
    report(6, "holder-suite-e1", &failures);
}

#[test]
fn criterion_07_ode_suite_e2() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let sys = reference::e2();

    match segments::alpha_hat_ode(
        sys.linear().c_u(),
        sys.linear().c_s(),
        sys.pert().m_bound(),
    ) {
        Ok(a) if a == 0.1 => {}
        Ok(a) => failures.push(format!("alpha_hat = {a}, expected 0.1 exactly")),
        Err(e) => failures.push(format!("alpha_hat: {e}")),
    }

    let segment_part: hypconj::Result<()> = (|| {
        let seg = IsolatingSegment::new(sys.clone(), Vector::new(vec![0.5, 0.5]), 0.15, 5.0)?;
        for l2 in [0.0, 0.5, 1.0] {
            let rep = segments::check_segment(&seg, l2, 50, 20, 51)?;
            if rep.samples_per_face != 1000 {
                failures.push(format!("{} samples per face, expected 1000", rep.samples_per_face));
            }
            if !rep.pass || !rep.analytic_pass {
                failures.push(format!(
                    "segment check at λ2 = {l2}: sampled pass = {}, analytic pass = {}",
                    rep.pass, rep.analytic_pass
                ));
            }
            if rep.exit_min_slack < rep.analytic_exit_lower
                || rep.entry_max_slack > rep.analytic_entry_upper
            {
                failures.push(format!(
                    "sampled slacks ({:e}, {:e}) undercut analytic bounds ({:e}, {:e}) at λ2 = {l2}",
                    rep.exit_min_slack,
                    rep.entry_max_slack,
                    rep.analytic_exit_lower,
                    rep.analytic_entry_upper
                ));
            }
        }
        // A descent start on the exit face must leave immediately; the
        // anchor itself must never leave.
        let z0 = Vector::new(vec![0.5, 0.5]);
        match segments::exit_time(&seg, 1.0, 0.0, &z0)? {
            ExitTime::HorizonExceeded => {}
            other => failures.push(format!("anchor exit time {other:?}, expected horizon")),
        }
        Ok(())
    })();
    if let Err(e) = segment_part {
        failures.push(format!("segment checks: {e}"));
    }

    let (alpha, t_horizon, delta, tol) = (0.15, 8.0, 0.5, 1e-9);
    let a_full = sys.linear().full_matrix();
    let mut max_defect = 0.0_f64;
    for (i, z) in seeded_box_points(20, 1.0, 53).iter().enumerate() {
        let per_point: hypconj::Result<()> = (|| {
            let rho_z = segments::rho_flow(&sys, z, alpha, t_horizon, delta, tol)?.value;
            for t in [0.5, 1.0, 2.0] {
                let lhs = sys.flow(&rho_z, t)?;
                let az = Vector::new(matrix_exp(&a_full, t)?.mul_vec(z));
                let rhs = segments::rho_flow(&sys, &az, alpha, t_horizon, delta, tol)?.value;
                max_defect = max_defect.max(lhs.sub(&rhs).norm_inf());
            }
            Ok(())
        })();
        if let Err(e) = per_point {
            failures.push(format!("flow conjugacy at point {i} ({z:?}): {e}"));
        }
    }
    if max_defect > 1e-4 {
        failures.push(format!("max flow conjugacy defect {max_defect:e} exceeds 1e-4"));
    }

    let spl = sys.splitting();
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    for i in 0..50 {
        let z = Vector::new(vec![rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)]);
        let t = rng.gen_range(-2.0..=2.0);
        match sys.flow(&z, t) {
            Ok(end) => {
                let bound = segments::gronwall_bound(&sys, &z, t);
                if spl.block_max_norm(&end) > bound {
                    failures.push(format!(
                        "trajectory {i} outran its growth bound at t = {t}"
                    ));
                }
            }
            Err(e) => failures.push(format!("trajectory {i}: {e}")),
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        failures.push(format!("runtime {elapsed:.2}s exceeds 120s"));
    }
    report(7, "ode-suite-e2", &failures);
}

#[test]
fn criterion_08_localization() {
    let mut failures = Vec::new();
    let linear = reference::e1().linear().clone();
    let coeffs = [0.5, 0.5];
    let (delta, eps) = (0.1, 0.1);

    let verdict: hypconj::Result<()> = (|| {
        let (globalized, gsys) = localize::globalize(&linear, &coeffs, eps, delta)?;
        if (globalized.m_hat - 0.01).abs() > 1e-15 {
            failures.push(format!("M̂ = {}, expected 0.01", globalized.m_hat));
        }
        if !(gsys.effective_eps() < gsys.linear().eps1()) {
            failures.push(format!(
                "ε̂ = {} does not stay below ε₁ = {}",
                gsys.effective_eps(),
                gsys.linear().eps1()
            ));
        }
        let alpha_hat = covering::alpha_hat_map(
            gsys.linear().c_u(),
            gsys.linear().c_s(),
            gsys.pert().m_bound(),
        )?;
        if (alpha_hat - 0.04).abs() > 1e-15 {
            failures.push(format!("globalized alpha_hat = {alpha_hat}, expected 0.04"));
        }
        let cert = cones::certify_eps0(gsys.linear(), 0.1)?;
        if !(gsys.pert().eps_bound() <= cert.eps0) {
            failures.push(format!(
                "cone budget: ε̂ = {} exceeds ε₀ = {}",
                gsys.pert().eps_bound(),
                cert.eps0
            ));
        }
        let pairs = cones::sample_pairs(gsys.splitting(), 0.5, 200, 61);
        let cone = cones::check_cone_map(&gsys, 0.1, &pairs)?;
        if !cone.pass {
            failures.push(format!("globalized cone check failed: slack {:e}", cone.min_slack));
        }
        let chain = covering::build_chain(
            &gsys.with_lambda(0.0)?,
            &Vector::new(vec![0.02, -0.01]),
            3,
            0.05,
        )?;
        let sampled = covering::check_covering(
            &gsys,
            &chain.hsets()[0],
            chain.hsets()[1].center(),
            CoveringMode::Sampled,
            500,
            63,
        )?;
        if !sampled.pass {
            failures.push(format!(
                "globalized covering failed: margins {:e}/{:e}",
                sampled.exit_margin, sampled.entry_margin
            ));
        }

        // ρ of the globalized system must conjugate the *original* local map
        // wherever the orbit stays inside the identity region of the cutoff.
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let mut max_defect = 0.0_f64;
        let mut count = 0;
        while count < 20 {
            let z = Vector::new(vec![
                rng.gen_range(-0.025..=0.025),
                rng.gen_range(-0.025..=0.025),
            ]);
            if z.norm2() > 0.025 {
                continue;
            }
            count += 1;
            let rho_z = shadowing::rho(&gsys, &z, 0.05, 40, 1e-10)?.value;
            if gsys.splitting().block_max_norm(&rho_z) > globalized.guarantee_radius {
                failures.push(format!(
                    "ρ({z:?}) = {rho_z:?} left the guarantee ball of radius {}",
                    globalized.guarantee_radius
                ));
            }
            let rho_az = shadowing::rho(&gsys, &linear.apply(&z), 0.05, 40, 1e-10)?.value;
            let original = localize::local_map_eval(&linear, &coeffs, &rho_z);
            max_defect = max_defect.max(rho_az.sub(&original).norm_inf());
        }
        if max_defect > 1e-6 {
            failures.push(format!(
                "max local conjugacy defect {max_defect:e} exceeds 1e-6"
            ));
        }
        Ok(())
    })();
    if let Err(e) = verdict {
        failures.push(format!("localization error: {e}"));
    }
    report(8, "localization", &failures);
}

#[test]
fn criterion_09_uniqueness_robustness() {
    let mut failures = Vec::new();
    let sys = reference::e1();
    let (alpha, k, tol) = (0.25, 40usize, 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(71);

    for (i, z) in seeded_box_points(15, 2.0, 73).iter().enumerate() {
        let per_point: hypconj::Result<()> = (|| {
            let anchor_sys = sys.with_lambda(0.0)?;
            let chain = covering::build_chain(&anchor_sys, z, k, alpha)?;
            let baseline = shadowing::solve_shadow(&ShadowProblem::from_chain(
                sys.clone(),
                &chain,
                tol,
                DEFAULT_MAX_ITER,
            )?)?
            .center();

            // Restart from anchors displaced by ±0.3α in every coordinate.
            let kicked: Vec<Vector> = (0..2 * k + 1)
                .map(|_| {
                    Vector::new(vec![
                        0.3 * alpha * if rng.gen::<bool>() { 1.0 } else { -1.0 },
                        0.3 * alpha * if rng.gen::<bool>() { 1.0 } else { -1.0 },
                    ])
                })
                .collect();
            let restarted = shadowing::solve_shadow(
                &ShadowProblem::from_chain(sys.clone(), &chain, tol, DEFAULT_MAX_ITER)?
                    .with_initial_deviations(kicked)?,
            )?
            .center();

            let gap = restarted.sub(&baseline).norm_inf();
            if gap > 1e-8 {
                failures.push(format!("restart gap {gap:e} at point {i}"));
            }
            Ok(())
        })();
        if let Err(e) = per_point {
            failures.push(format!("point {i} ({z:?}): {e}"));
        }
    }
    report(9, "uniqueness-robustness", &failures);
}

/// A fixed tour through both reference pipelines, every intermediate number
/// rendered at full precision. Byte-identical output across runs is the
/// determinism contract.
fn suite_report(seed: u64) -> String {
    let mut out = String::new();
    let sys = reference::e1();
    let lin = sys.linear();
    writeln!(out, "e1 c_u {:.17e} c_s {:.17e} eps1 {:.17e}", lin.c_u(), lin.c_s(), lin.eps1())
        .unwrap();
    let cert = cones::certify_eps0(lin, 0.1).unwrap();
    writeln!(
        out,
        "e1 eps0 {:.17e} plus {:.17e} minus {:.17e}",
        cert.eps0, cert.lambda_min_plus, cert.lambda_min_minus
    )
    .unwrap();
    let pairs = cones::sample_pairs(sys.splitting(), 2.0, 200, seed);
    let cone = cones::check_cone_map(&sys, 0.1, &pairs).unwrap();
    writeln!(out, "e1 cone-slack {:.17e}", cone.min_slack).unwrap();
    let chain = covering::build_chain(
        &sys.with_lambda(0.0).unwrap(),
        &Vector::new(vec![0.3, -0.4]),
        2,
        0.25,
    )
    .unwrap();
    let sampled = covering::check_covering(
        &sys,
        &chain.hsets()[0],
        chain.hsets()[1].center(),
        CoveringMode::Sampled,
        300,
        seed ^ 1,
    )
    .unwrap();
    writeln!(
        out,
        "e1 covering-margins {:.17e} {:.17e}",
        sampled.exit_margin, sampled.entry_margin
    )
    .unwrap();
    for z in seeded_box_points(5, 2.0, seed ^ 2) {
        let r = shadowing::rho(&sys, &z, 0.25, 40, 1e-10).unwrap().value;
        let s = shadowing::sigma(&sys, &z, 0.25, 40, 1e-10).unwrap().value;
        writeln!(
            out,
            "e1 rho {:.17e} {:.17e} sigma {:.17e} {:.17e}",
            r[0], r[1], s[0], s[1]
        )
        .unwrap();
    }
    let est = holder::estimate(&sys, 0.25).unwrap();
    writeln!(out, "e1 gamma {:.17e} c1 {:.17e} c2 {:.17e}", est.gamma, est.c1, est.c2).unwrap();
    let bases = seeded_box_points(8, 1.5, seed ^ 3);
    let fit = holder::empirical_holder(&sys, &bases, (1e-3, 1e-1), 0.25, 20, seed ^ 4).unwrap();
    writeln!(out, "e1 holder-slope {:.17e} residual {:.17e}", fit.slope, fit.residual).unwrap();

    let ode = reference::e2();
    let seg =
        IsolatingSegment::new(ode.clone(), Vector::new(vec![0.5, 0.5]), 0.15, 5.0).unwrap();
    let rep = segments::check_segment(&seg, 1.0, 20, 10, seed ^ 5).unwrap();
    writeln!(
        out,
        "e2 segment-slacks {:.17e} {:.17e}",
        rep.exit_min_slack, rep.entry_max_slack
    )
    .unwrap();
    let probe = Vector::new(vec![0.5 + 0.9 * 0.15, 0.5]);
    match segments::exit_time(&seg, 0.0, 0.0, &probe).unwrap() {
        ExitTime::Finite(t) => writeln!(out, "e2 exit-time {t:.17e}").unwrap(),
        ExitTime::HorizonExceeded => writeln!(out, "e2 exit-time horizon").unwrap(),
    }
    for z in seeded_box_points(3, 1.0, seed ^ 6) {
        let r = segments::rho_flow(&ode, &z, 0.15, 8.0, 0.5, 1e-9).unwrap().value;
        writeln!(out, "e2 rho-flow {:.17e} {:.17e}", r[0], r[1]).unwrap();
    }
    out
}

#[test]
fn criterion_10_determinism() {
    let mut failures = Vec::new();
    let first = suite_report(7);
    let second = suite_report(7);
    if first != second {
        let diverges = first
            .lines()
            .zip(second.lines())
            .position(|(a, b)| a != b)
            .map_or("length".to_string(), |i| format!("line {}", i + 1));
        failures.push(format!("reports differ at {diverges}"));
    }
    if first.is_empty() {
        failures.push("suite report came out empty".into());
    }
    report(10, "determinism", &failures);
}
