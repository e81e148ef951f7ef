//! Acceptance gate: each criterion prints one PASS/FAIL line; the process
//! exits non-zero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use hardy_flow::fit::linear_fit;
use hardy_flow::flow::{energy_identity, run, taylor_green, SolverConfig};
use hardy_flow::grid::{random_band_limited, Axis, GridSpec, ScalarField};
use hardy_flow::inviscid::{
    member_majorization, run_sweep, taylor_green_gap, verify_rate, ExperimentConfig, InitialCondition, Sweep,
};
use hardy_flow::logineq::{centred_square, scan_corpus, standard_corpus, verify_zygmund_estimate, zygmund_constant};
use hardy_flow::osgood::{gronwall_bound, integrate_majorant, rate_exponent, OsgoodProblem, MAJORIZATION_TOL};
use hardy_flow::splitting::{sweep, threshold_sweep, GRID_SLACK};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        o.pass = false;
        o.detail.push_str(&format!("; runtime {elapsed:.1?} over budget {budget:?}"));
    } else {
        o.detail.push_str(&format!("; {elapsed:.1?}"));
    }
    o
}

fn main_inequality() -> Outcome {
    let sizes = [32, 64, 128];
    let scan = scan_corpus(&standard_corpus(), &sizes).expect("corpus scan");
    let maxima: Vec<Option<f64>> = sizes.iter().map(|&s| scan.max_ratio(s)).collect();
    let finite = maxima.iter().all(|m| m.is_some_and(f64::is_finite));
    let slope = scan.refinement_slope();
    let pass = finite && slope.is_some_and(|s| s <= 0.05);
    Outcome::new(pass, format!("max ratio per size {maxima:.4?}, refinement slope {slope:.4?} (<= 0.05)"))
}

fn zygmund_growth() -> Outcome {
    let grid = GridSpec::new(512).unwrap();
    let ns: Vec<f64> = (1..=6).map(|k| f64::from(1u32 << k)).collect();
    let records: Vec<_> =
        ns.iter().map(|&n| verify_zygmund_estimate(&centred_square(grid, 1.0 / n, n).unwrap()).unwrap()).collect();
    let ln_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let lhs: Vec<f64> = records.iter().map(|r| r.lhs()).collect();
    let llogl: Vec<f64> = records.iter().map(|r| r.llogl).collect();
    let riesz_slope = linear_fit(&ln_n, &lhs).unwrap().1;
    let llogl_slope = linear_fit(&ln_n, &llogl).unwrap().1;
    let rel = (riesz_slope / llogl_slope - 1.0).abs();
    let c0 = zygmund_constant(&records);
    let dominated = records.iter().all(|r| r.lhs() <= r.bound(c0) * (1.0 + 1e-12));
    Outcome::new(
        rel <= 0.2 && dominated,
        format!(
            "growth vs ln N: Riesz L1 {riesz_slope:.4}, L ln L {llogl_slope:.4}, relative gap {rel:.3} (<= 0.2); \
             C0 = {c0:.4} dominates: {dominated}"
        ),
    )
}

fn riesz_identity() -> Outcome {
    let grid = GridSpec::new(64).unwrap();
    let worst = (0..50u64)
        .map(|seed| {
            let g = random_band_limited(grid, 12, seed).unwrap().shifted(0.1 * seed as f64).unwrap();
            let sum = Axis::ALL
                .iter()
                .map(|&a| g.riesz_transform(a).riesz_transform(a))
                .reduce(|a, b| a.add(&b).unwrap())
                .unwrap();
            let target = g.minus_mean().scaled(-1.0).unwrap();
            let d = sum.sub(&target).unwrap();
            d.inner(&d).unwrap().sqrt()
        })
        .fold(0.0, f64::max);
    Outcome::new(worst <= 1e-10, format!("worst L2 residual over 50 fields {worst:.3e} (<= 1e-10)"))
}

fn osgood_oracle() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    let mut prefactor: f64 = 0.0;
    for m in [0.5, 1.0, 2.0] {
        for nu in [1e-2, 1e-3] {
            let p = OsgoodProblem::constant(m, 0.0, 0.0, nu, 1.0).unwrap();
            let tr = integrate_majorant(&p).unwrap();
            let oracle = common::separable_majorant(m, nu, p.log_penalty, 1.0);
            worst_rel = worst_rel.max((tr.final_value() - oracle).abs() / oracle);
            for (&t, &y) in tr.times.iter().zip(&tr.y) {
                prefactor = prefactor.max(y / gronwall_bound(&p, t, 1.0).unwrap());
            }
        }
    }
    Outcome::new(
        worst_rel <= 1e-6 && prefactor <= 4.0,
        format!("worst relative error vs oracle {worst_rel:.2e} (<= 1e-6); fitted prefactor {prefactor:.4} (<= 4)"),
    )
}

fn rate_formula() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for (m, t) in [(1.0, 1.0), (2.0, 0.5)] {
        let r = rate_exponent(m, t).unwrap();
        worst = worst.max((r.extrapolated_limit(16, 8).unwrap() - (-2.0 * m * t).exp()).abs());
        monotone &= r.certify_convergence(&[2, 4, 8, 16, 64, 256, 1024, 1 << 16]).unwrap();
    }
    let anchor = rate_exponent(1.0, 1.0).unwrap().exponent;
    let anchor_ok = (anchor - 0.135335).abs() <= 1e-6;
    Outcome::new(
        worst <= 1e-8 && monotone && anchor_ok,
        format!("extrapolation error {worst:.2e} (<= 1e-8); monotone within envelope {monotone}; e^-2 = {anchor:.7}"),
    )
}

fn taylor_green_anchors() -> Outcome {
    let grid = GridSpec::new(64).unwrap();
    let u0 = taylor_green(grid).unwrap();
    let base = SolverConfig::new(grid, 0.0, 1.0).unwrap();
    let euler = run(&u0, base).unwrap();
    let steady =
        euler.samples.iter().map(|s| s.velocity().sub(&u0).unwrap().l2_norm() / u0.l2_norm()).fold(0.0, f64::max);
    let nu = 1e-2;
    let ns = run(&u0, base.with_nu(nu).unwrap()).unwrap();
    let decay = ns
        .samples
        .iter()
        .map(|s| {
            let exact = u0.scaled((-2.0 * nu * s.time).exp()).unwrap();
            s.velocity().sub(&exact).unwrap().l2_norm() / exact.l2_norm()
        })
        .fold(0.0, f64::max);
    let cfg = ExperimentConfig::new(base, vec![1e-1, 1e-2, 1e-3], 1.0, InitialCondition::TaylorGreen).unwrap();
    let sweep = run_sweep(&cfg).unwrap();
    let gap_err = sweep
        .series
        .nus
        .iter()
        .zip(&sweep.series.sup_gap)
        .map(|(&nu, &g)| (g / taylor_green_gap(nu, 1.0) - 1.0).abs())
        .fold(0.0, f64::max);
    let rho = verify_rate(&sweep.series, true).unwrap().rho.unwrap_or(f64::NAN);
    let pass = steady <= 1e-8 && decay <= 1e-6 && gap_err <= 0.01 && (rho - 1.0).abs() <= 0.02;
    Outcome::new(
        pass,
        format!(
            "(a) steady drift {steady:.2e} (<= 1e-8); (b) decay error {decay:.2e} (<= 1e-6); \
             (c) gap error {gap_err:.2e} (<= 1e-2), rho {rho:.5} (1 +- 0.02)"
        ),
    )
}

fn corpus_sweeps() -> Vec<(InitialCondition, Sweep)> {
    let base = SolverConfig::new(GridSpec::new(64).unwrap(), 0.0, 0.5).unwrap();
    InitialCondition::CORPUS
        .iter()
        .map(|&ic| {
            let cfg = ExperimentConfig::new(base, vec![1e-1, 1e-2, 1e-3, 1e-4], 1.0, ic).unwrap();
            (ic, run_sweep(&cfg).unwrap())
        })
        .collect()
}

fn rate_bound(sweeps: &[(InitialCondition, Sweep)]) -> Outcome {
    let mut violations = 0;
    let mut parts = Vec::new();
    for (ic, s) in sweeps {
        let r = verify_rate(&s.series, true).unwrap();
        let complete = s.aborted_at.is_none() && s.members.len() == 4;
        violations += r.violations.len() + usize::from(!complete);
        parts.push(format!(
            "{ic}: M {:.2}, exponent {:.3e}, violations {}",
            s.series.m,
            r.theory_exponent,
            r.violations.len()
        ));
    }
    Outcome::new(violations == 0, parts.join("; "))
}

fn splitting_chain(sweeps: &[(InitialCondition, Sweep)]) -> Outcome {
    let grid = GridSpec::new(64).unwrap();
    let mut fields: Vec<(String, ScalarField)> =
        standard_corpus().iter().map(|e| (e.id.clone(), e.build(grid).unwrap())).collect();
    for (ic, s) in sweeps {
        for m in &s.members {
            for k in [s.euler.samples.len() / 2, s.euler.samples.len() - 1] {
                let w = m.run.samples[k].velocity().sub(&s.euler.samples[k].velocity()).unwrap();
                let alpha = w.magnitude().map(|v| v * v).unwrap();
                fields.push((format!("{ic}/nu={}/k={k}", m.nu), alpha));
            }
        }
    }
    let mut checked = 0;
    let mut failures = Vec::new();
    for (id, f) in &fields {
        for r in sweep(f, 1.0, &threshold_sweep(f, 20)).unwrap() {
            checked += 1;
            if !r.holds(GRID_SLACK) {
                failures.push(format!("{id}@{:.3}", r.threshold));
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("{checked} threshold checks over {} fields, failures {:?}", fields.len(), failures),
    )
}

fn energy_difference_identity() -> Outcome {
    let grid = GridSpec::new(64).unwrap();
    let u0 = taylor_green(grid).unwrap();
    let residual = |max_dt: f64| {
        let base =
            SolverConfig::new(grid, 0.0, 1.0).unwrap().with_min_samples(8).unwrap().with_max_dt(Some(max_dt)).unwrap();
        let e = run(&u0, base).unwrap();
        let v = run(&u0, base.with_nu(0.1).unwrap()).unwrap();
        energy_identity(&v, &e).unwrap()
    };
    let coarse = residual(1.0 / 32.0);
    let fine = residual(1.0 / 64.0);
    let rel = coarse.relative_residual().max(fine.relative_residual());
    let factor = coarse.max_residual() / fine.max_residual();
    Outcome::new(
        rel <= 0.01 && factor >= 8.0,
        format!("relative residual {rel:.2e} (<= 1e-2); halving dt reduces residual {factor:.1}x (>= 8)"),
    )
}

fn majorization(sweeps: &[(InitialCondition, Sweep)]) -> Outcome {
    let grid_sizes = [32, 64, 128];
    let c0 = scan_corpus(&standard_corpus(), &grid_sizes).unwrap().empirical_constant().unwrap();
    let mut failed = Vec::new();
    let mut count = 0;
    for (ic, s) in sweeps {
        for m in &s.members {
            count += 1;
            let r = member_majorization(s, m, c0, MAJORIZATION_TOL).unwrap();
            if !r.holds {
                failed.push(format!("{ic}/nu={}", m.nu));
            }
        }
    }
    Outcome::new(failed.is_empty(), format!("{count} members with C0 = {c0:.4}, failures {failed:?}"))
}

fn main() {
    let minute = Duration::from_secs(60);
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 main inequality bounded under refinement", timed(2 * minute, main_inequality)),
        ("2 Zygmund estimate growth", timed(minute, zygmund_growth)),
        ("3 Riesz identity", timed(minute, riesz_identity)),
        ("4 majorant vs separable oracle", timed(minute, osgood_oracle)),
        ("5 rate formula limit", timed(minute, rate_formula)),
        ("6 Taylor-Green anchors", timed(5 * minute, taylor_green_anchors)),
    ];
    let mut sweeps = Vec::new();
    results.push((
        "7 rate bound on corpus sweeps",
        timed(15 * minute, || {
            sweeps = corpus_sweeps();
            rate_bound(&sweeps)
        }),
    ));
    results.push(("8 splitting chain", timed(5 * minute, || splitting_chain(&sweeps))));
    results.push(("9 energy-difference identity", timed(5 * minute, energy_difference_identity)));
    results.push(("10 majorization of sweep members", timed(15 * minute, || majorization(&sweeps))));

    let mut failed = 0;
    for (name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{name}] {}", o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
