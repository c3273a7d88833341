//! Acceptance gate. One test per criterion; each prints a single
//! `[PASS]`/`[FAIL]` line with the measured figures (visible with
//! `cargo test --test acceptance -- --nocapture`). Every tolerance is
//! pinned in this file rather than inherited from configuration defaults.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qhm::config::RunConfig;
use qhm::connection::{make_connection, spectral_theta, to_spectral, ym_cr, ym_spectral, ModuleSpec};
use qhm::forms::{d0, d1form, d1form_signed, AlphaTermSign, FormsConfig, OneForm};
use qhm::matrix::AlgebraMatrix;
use qhm::opt::{
    minimize, random_chart_point, random_skew_chart_point, ym_value_grad, ChartSpec, OptimOptions,
    ParamChart,
};
use qhm::random::{random_element, RandomProfile};
use qhm::suites::{
    run_axioms, run_derivations, run_equivalence, run_group, run_minimize, run_oracle, Sense,
    SuiteReport,
};
use qhm::{AlgebraElement, AlgebraParams, Truncation};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

/// Largest observed/bound ratio over the upper-bound checks with a
/// nonzero bound; exact checks (bound 0) must be literally zero and are
/// folded in as pass/fail only.
fn worst_margin(rep: &SuiteReport) -> f64 {
    rep.checks
        .iter()
        .filter(|c| matches!(c.sense, Sense::AtMost) && c.bound > 0.0)
        .map(|c| c.observed / c.bound)
        .fold(0.0, f64::max)
}

fn failing(rep: &SuiteReport) -> String {
    let names: Vec<&str> =
        rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if names.is_empty() { "none".into() } else { names.join(", ") }
}

#[test]
fn criterion_1_algebra_suite() {
    let t0 = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.tol.assoc = 1e-6;
    cfg.tol.exact = 1e-12;
    cfg.axioms.nx_ladder = vec![16, 32, 64];
    cfg.axioms.min_rate = 64.0;
    let rep = run_axioms(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let in_budget = elapsed <= Duration::from_secs(120);
    verdict(
        "criterion 1 (algebra suite)",
        rep.pass && in_budget,
        &format!(
            "{} checks, worst margin {:.2e} of bound, failing: {}, elapsed {:.1?} (budget 120s)",
            rep.checks.len(),
            worst_margin(&rep),
            failing(&rep),
            elapsed
        ),
    );
}

#[test]
fn criterion_2_derivation_suite() {
    let t0 = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.tol.assoc = 1e-6;
    cfg.tol.exact = 1e-12;
    cfg.derivations.bracket_alpha = None;
    let rep = run_derivations(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let in_budget = elapsed <= Duration::from_secs(60);
    verdict(
        "criterion 2 (derivation suite)",
        rep.pass && in_budget,
        &format!(
            "{} checks, worst margin {:.2e} of bound, failing: {}, elapsed {:.1?} (budget 60s)",
            rep.checks.len(),
            worst_margin(&rep),
            failing(&rep),
            elapsed
        ),
    );
}

#[test]
fn criterion_3_group_action_suite() {
    let mut cfg = RunConfig::default();
    cfg.tol.assoc = 1e-6;
    cfg.group.pairs = 5;
    let rep = run_group(&cfg).unwrap();
    verdict(
        "criterion 3 (group action suite)",
        rep.pass,
        &format!(
            "{} checks over 5 pairs, worst margin {:.2e} of bound, failing: {}",
            rep.checks.len(),
            worst_margin(&rep),
            failing(&rep)
        ),
    );
}

#[test]
fn criterion_4_forms_suite() {
    let params = AlgebraParams::default();
    let trunc = Truncation::default();
    let profile = RandomProfile::default();
    let mut rng = ChaCha8Rng::seed_from_u64(40);

    let mut worst_dd = 0.0f64;
    for _ in 0..10 {
        let a = random_element(params, trunc, rng.gen(), &profile).unwrap();
        let dd = d1form(&d0(&a).unwrap()).unwrap();
        worst_dd = worst_dd.max(dd.l2_norm() / a.l2_norm());
    }

    let ident = AlgebraElement::identity(params, trunc).unwrap();
    let zero = ident.zero_like();
    let w = OneForm::from_components([zero.clone(), zero.clone(), ident.clone()]).unwrap();
    let out = d1form(&w).unwrap();
    let want = ident.scale(Complex64::new(-1.0 / params.alpha, 0.0));
    let corollary = out
        .coord(1)
        .l2_norm()
        .max(out.coord(2).l2_norm())
        .max(out.coord(3).sub(&want).unwrap().l2_norm());

    let a = random_element(params, trunc, rng.gen(), &profile).unwrap();
    let flipped = d1form_signed(&d0(&a).unwrap(), AlphaTermSign::Flipped).unwrap();
    let control = flipped.l2_norm() / a.l2_norm();

    verdict(
        "criterion 4 (forms suite)",
        worst_dd <= 1e-6 && corollary <= 1e-12 && control >= 1e-1,
        &format!(
            "worst d.d residual {worst_dd:.2e} (<= 1e-6), corollary defect {corollary:.2e} \
             (<= 1e-12), flipped-sign control {control:.2e} (>= 1e-1)"
        ),
    );
}

#[test]
fn criterion_5_representation_oracle() {
    let t0 = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.tol.oracle = 1e-5;
    cfg.oracle.pairs = 5;
    cfg.oracle.trials = 5;
    cfg.oracle.p_zero_only = false;
    let interior = run_oracle(&cfg).unwrap();

    cfg.oracle.p_zero_only = true;
    cfg.oracle.tol_p_zero = 1e-10;
    let base = run_oracle(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let in_budget = elapsed <= Duration::from_secs(120);
    verdict(
        "criterion 5 (representation oracle)",
        interior.pass && base.pass && in_budget,
        &format!(
            "interior worst margin {:.2e} of 1e-5, p=0 worst margin {:.2e} of 1e-10, \
             failing: {} / {}, elapsed {:.1?} (budget 120s)",
            worst_margin(&interior),
            worst_margin(&base),
            failing(&interior),
            failing(&base),
            elapsed
        ),
    );
}

#[test]
fn criterion_6_main_theorem() {
    let t0 = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.tol.thm = 1e-5;
    cfg.equivalence.seeds_q1 = vec![101, 102, 103, 104, 105];
    cfg.equivalence.seeds_q2 = vec![201, 202, 203];
    cfg.equivalence.flip_alpha_term = false;
    cfg.equivalence.c_d = 1.0;
    let rep = run_equivalence(&cfg).unwrap();

    // Closed-form check on the central family at t = 0.9: the two
    // functionals evaluate to t^2/alpha^2 and t^2/(2 alpha^2).
    let params = AlgebraParams::default();
    let trunc = Truncation::default();
    let alpha = params.alpha;
    let t = 0.9;
    let ident = AlgebraElement::identity(params, trunc).unwrap();
    let zero = AlgebraMatrix::zeros_like(&ident, 1);
    let a3 = AlgebraMatrix::from_entries(1, vec![ident.scale(Complex64::new(0.0, t))]).unwrap();
    let conn = make_connection(ModuleSpec::new(1).unwrap(), zero.clone(), zero, a3).unwrap();
    let v = ym_cr(&conn).unwrap();
    let vt = ym_spectral(
        &spectral_theta(&to_spectral(&conn).unwrap()).unwrap(),
        &FormsConfig { c_d: 1.0 },
    )
    .unwrap();
    let central_defect =
        (v - t * t / (alpha * alpha)).abs().max((vt - t * t / (2.0 * alpha * alpha)).abs());

    let elapsed = t0.elapsed();
    let in_budget = elapsed <= Duration::from_secs(300);
    verdict(
        "criterion 6 (main theorem)",
        rep.pass && central_defect <= 1e-10 && in_budget,
        &format!(
            "8 seeded connections worst margin {:.2e} of 1e-5, failing: {}, central family \
             closed-form defect {:.2e} (<= 1e-10), elapsed {:.1?} (budget 300s)",
            worst_margin(&rep),
            failing(&rep),
            central_defect,
            elapsed
        ),
    );
}

#[test]
fn criterion_7_optimizer() {
    let params = AlgebraParams::default();
    let trunc = Truncation::default();

    // Analytic gradient against central finite differences, step 1e-4, at
    // twenty random chart points across both module ranks.
    let mut worst_fd = 0.0f64;
    for (q, count, seed) in [(1usize, 14usize, 70u64), (2, 6, 71)] {
        let ch = ParamChart::new(params, trunc, ChartSpec { q, ..ChartSpec::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..count {
            let x = random_chart_point(&ch, seed ^ (k as u64) << 8, 0.1);
            let (_, g) = ym_value_grad(&ch, &x).unwrap();
            let c = rng.gen_range(0..ch.dim());
            let eps = 1e-4;
            let mut xp = x.clone();
            xp[c] += eps;
            let mut xm = x.clone();
            xm[c] -= eps;
            let fd = (qhm::opt::ym_cr(&ch, &xp).unwrap() - qhm::opt::ym_cr(&ch, &xm).unwrap())
                / (2.0 * eps);
            worst_fd = worst_fd.max((fd - g[c]).abs() / g[c].abs().max(1.0));
        }
    }
    let fd_ok = worst_fd <= 1e-5;

    // Descent from a 0.1-scaled random band-limited skew start at the
    // default truncation. The chart metric is anisotropic by a factor of
    // about alpha^2 nx^2 / 8, so plain Armijo descent needs several hundred
    // thousand iterations here; a bounded run records the honest shortfall.
    let ch = ParamChart::new(params, trunc, ChartSpec::default()).unwrap();
    let x0 = random_skew_chart_point(&ch, 7, 0.1).unwrap();
    let opts = OptimOptions {
        max_iters: 2000,
        grad_tol: 1e-4,
        initial_step: 0.5,
        beta: 0.5,
        sigma: 0.1,
    };
    let (_, rep) = minimize(&ch, &x0, &opts, 7).unwrap();
    let monotone = rep.values.windows(2).all(|w| w[1] <= w[0]);
    let terminal = *rep.values.last().unwrap();
    let descent_ok = monotone && terminal <= 1e-6;

    // Supporting evidence that the walk itself is sound: the same protocol
    // at a quarter of the grid resolution, where the stiffness ratio is 64
    // times smaller, converges below the target.
    let tr16 = Truncation { nx: 16, ..trunc };
    let ch16 = ParamChart::new(params, tr16, ChartSpec::default()).unwrap();
    let x016 = random_skew_chart_point(&ch16, 7, 0.1).unwrap();
    let opts16 = OptimOptions { max_iters: 30000, ..opts };
    let (_, rep16) = minimize(&ch16, &x016, &opts16, 7).unwrap();
    let t16 = *rep16.values.last().unwrap();
    let m16 = rep16.values.windows(2).all(|w| w[1] <= w[0]);

    verdict(
        "criterion 7 (optimizer)",
        fd_ok && descent_ok,
        &format!(
            "worst FD mismatch {worst_fd:.2e} (<= 1e-5); descent at nx=64: monotone {monotone}, \
             terminal {terminal:.2e} after {} iters (target 1e-6, not reached; the nodal chart \
             at nx=64 conditions the quadratic form at about 1.6e5 and plain Armijo descent \
             would need several hundred thousand iterations); quarter-resolution control at \
             nx=16: monotone {m16}, terminal {t16:.2e} after {} iters (<= 1e-6: {})",
            rep.iters,
            rep16.iters,
            t16 <= 1e-6
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let mut mismatch = Vec::new();
    let strip = |rep: &mut SuiteReport| rep.timestamp_unix = 0;

    let mut axioms_cfg = RunConfig::default();
    axioms_cfg.axioms.nx_ladder = vec![16, 32];
    let mut oracle_cfg = RunConfig::default();
    oracle_cfg.oracle.pairs = 2;
    oracle_cfg.oracle.trials = 2;
    let mut equiv_cfg = RunConfig::default();
    equiv_cfg.equivalence.seeds_q1 = vec![101];
    equiv_cfg.equivalence.seeds_q2 = vec![];
    let mut minimize_cfg = RunConfig::default();
    minimize_cfg.minimize.optim.max_iters = 25;

    let runs: Vec<(&str, Box<dyn Fn() -> SuiteReport>)> = vec![
        ("axioms", Box::new(move || run_axioms(&axioms_cfg).unwrap())),
        ("derivations", Box::new(|| run_derivations(&RunConfig::default()).unwrap())),
        ("group", Box::new(|| run_group(&RunConfig::default()).unwrap())),
        ("equivalence", Box::new(move || run_equivalence(&equiv_cfg).unwrap())),
        ("minimize", Box::new(move || run_minimize(&minimize_cfg).unwrap())),
        ("oracle", Box::new(move || run_oracle(&oracle_cfg).unwrap())),
    ];
    for (name, run) in &runs {
        let mut first = run();
        let mut second = run();
        strip(&mut first);
        strip(&mut second);
        if first.to_json().unwrap() != second.to_json().unwrap() {
            mismatch.push(*name);
        }
    }
    verdict(
        "criterion 8 (determinism)",
        mismatch.is_empty(),
        &format!(
            "six commands run twice each with fixed seeds; payload mismatches: {}",
            if mismatch.is_empty() { "none".to_string() } else { mismatch.join(", ") }
        ),
    );
}
