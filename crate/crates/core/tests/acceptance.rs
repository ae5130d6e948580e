//! Acceptance suite. Runs every criterion in sequence, prints one line per
//! criterion and fails if any criterion fails.
//!
//! `cargo test --test acceptance -- --nocapture`

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::{Duration, Instant};

use bdescent::backtracking::{
    descent_direction, grid_budget, is_grid_member, local_step_size, HyperParams, LocalData,
    StepRule,
};
use bdescent::driver::{
    converged_point_audit, run_descent, tail_diagnostics, Audit, DescentTrace, Outcome, StopSpec,
};
use bdescent::experiments::{
    run, saddle_mc, ExperimentKind, McConfig, McStart, ObjectiveName, RawConfig, Report,
    TAIL_FRACTION,
};
use bdescent::objectives::{gradient_check, Quadratic};
use bdescent::poisson::{
    direct_solve, energy_objective, solution_errors, GridSpec, PoissonProblem, Source,
};
use bdescent::sequence_space::{duality_map, pairing};
use bdescent::{Exponent, VecP};
use common::{builtins, cube_point, e, rng};
use rand::Rng;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Suite {
    failed: Vec<u8>,
}

impl Suite {
    fn criterion(
        &mut self,
        id: u8,
        name: &str,
        limit: Option<Duration>,
        f: impl FnOnce() -> Verdict,
    ) {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!(
                "took {:.3} s, limit {:.1} s",
                elapsed.as_secs_f64(),
                l.as_secs_f64()
            )),
            (r, _) => r,
        };
        let budget = limit.map_or(String::new(), |l| format!(" / {:.1} s", l.as_secs_f64()));
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {id} {tag} {name} [{:.3} s{budget}] {detail}",
            elapsed.as_secs_f64()
        );
        if result.is_err() {
            self.failed.push(id);
        }
    }
}

fn duality_identities() -> Verdict {
    let mut r = rng(2024);
    let mut worst_pair = 0.0_f64;
    let mut worst_norm = 0.0_f64;
    let mut worst_mono = f64::INFINITY;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let p = Exponent::new(p).unwrap();
        let sample = |r: &mut rand_chacha::ChaCha8Rng| {
            let scale = 10f64.powf(r.gen_range(-3.0..3.0));
            let c = (0..50).map(|_| scale * r.gen_range(-1.0..1.0)).collect();
            VecP::new(c, p).unwrap()
        };
        for _ in 0..1000 {
            let y = sample(&mut r);
            let j = duality_map(&y);
            let n = y.norm();
            let tol = 1e-12 * (n * n).max(1.0);
            let dp = (pairing(&y, &j).unwrap() - n * n).abs();
            let dn = (j.norm() - n).abs();
            ensure!(
                dp <= tol && dn <= tol,
                "p = {}: pairing {dp:e}, norm {dn:e}",
                p.get()
            );
            worst_pair = worst_pair.max(dp / (n * n).max(1.0));
            worst_norm = worst_norm.max(dn / (n * n).max(1.0));
        }
        for _ in 0..1000 {
            let (a, b) = (sample(&mut r), sample(&mut r));
            let m = pairing(
                &a.sub(&b).unwrap(),
                &duality_map(&a).sub(&duality_map(&b)).unwrap(),
            )
            .unwrap();
            ensure!(m >= -1e-12, "p = {}: monotonicity {m:e}", p.get());
            worst_mono = worst_mono.min(m);
        }
    }
    Ok(format!(
        "max pairing {worst_pair:.1e}, max norm {worst_norm:.1e}, min monotonicity {worst_mono:.1e}"
    ))
}

fn step_size_rule() -> Verdict {
    let hp = HyperParams::default();
    for (g, radius, l, want) in [
        (4.0, 2.0, 2.0, 0.125),
        (0.0, 1.0, 1.0, 0.25),
        (100.0, 1.0, 0.1, 0.0078125),
    ] {
        let d = local_step_size(&hp, g, radius, l).map_err(|e| e.to_string())?;
        ensure!(d == want, "g={g}, r={radius}, L={l}: {d} != {want}");
        ensure!(is_grid_member(&hp, d, grid_budget(&hp)), "{d} off the grid");
    }
    let mut r = rng(99);
    for _ in 0..1000 {
        let hp = HyperParams::new(
            r.gen_range(0.01..0.99),
            r.gen_range(0.05..0.95),
            r.gen_range(1e-2..1e2),
        )
        .unwrap();
        let g = if r.gen_bool(0.1) {
            0.0
        } else {
            10f64.powf(r.gen_range(-6.0..4.0))
        };
        let radius = 10f64.powf(r.gen_range(-3.0..3.0));
        let l = 10f64.powf(r.gen_range(-3.0..5.0));
        let d = local_step_size(&hp, g, radius, l).map_err(|e| e.to_string())?;
        let ok = |d: f64| d < hp.alpha / l && d * g < radius;
        ensure!(ok(d), "{d:e} violates the constraints");
        ensure!(
            is_grid_member(&hp, d, grid_budget(&hp)),
            "{d:e} off the grid"
        );
        if d != hp.delta0 {
            // the previous grid element, regenerated by multiplication
            let mut prev = hp.delta0;
            while prev * hp.beta != d {
                prev *= hp.beta;
            }
            ensure!(!ok(prev), "{prev:e} also satisfies the constraints");
        }
    }
    Ok("three examples exact, 1000 random tuples maximal".into())
}

fn descent_inequality() -> Verdict {
    let hp = HyperParams::default();
    let mut r = rng(31);
    let mut worst = f64::NEG_INFINITY;
    for b in builtins() {
        for _ in 0..100 {
            let x = cube_point(b.obj.dim(), b.spread, &mut r);
            let g = b.obj.gradient(&x).norm();
            let local = LocalData::at(b.obj.as_ref(), &x);
            let delta = local_step_size(&hp, g, local.radius, local.lipschitz)
                .map_err(|e| e.to_string())?;
            let d = descent_direction(b.obj.as_ref(), &x);
            let next = VecP::new(
                x.coeffs()
                    .iter()
                    .zip(d.coeffs())
                    .map(|(a, v)| a - delta * v)
                    .collect(),
                x.exponent(),
            )
            .unwrap();
            let gap =
                b.obj.value(&next) - (b.obj.value(&x) - delta * (1.0 - hp.alpha / 2.0) * g * g);
            worst = worst.max(gap);
            ensure!(gap <= 1e-10, "{}: excess {gap:e}", b.label);
        }
    }
    Ok(format!("largest excess over the bound {worst:.1e}"))
}

fn spd_quadratic() -> Verdict {
    let q = Quadratic::identity(2).unwrap();
    let trace = run_descent(
        &q,
        &e(&[1.0, 0.0]),
        &StepRule::local(HyperParams::default()),
        &StopSpec::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        trace.outcome == Outcome::GradConverged,
        "outcome {:?}",
        trace.outcome
    );
    ensure!(trace.iters() == 65, "{} iterations", trace.iters());
    ensure!(
        trace.records.windows(2).all(|w| w[1].value <= w[0].value),
        "f not monotone"
    );
    let dist = trace.terminal.norm();
    ensure!(dist <= 1e-8, "terminal distance {dist:e}");
    Ok(format!("65 iterations, terminal distance {dist:.2e}"))
}

fn raw(pairs: &[(&str, &str)]) -> RawConfig {
    let mut r = RawConfig::default();
    for (k, v) in pairs {
        r.set(k, *v).unwrap();
    }
    r
}

/// Every trace produced by the built-in experiments at their defaults, plus
/// the generic quartic start and the Monte Carlo trials.
fn experiment_traces() -> Result<Vec<(String, DescentTrace, f64)>, String> {
    let mut out = Vec::new();
    let descent_runs: &[&[(&str, &str)]] = &[
        &[("objective", "identity")],
        &[("objective", "indefinite")],
        &[("objective", "quartic")],
        &[("objective", "quartic"), ("x0", "1,0.3,0")],
        &[("objective", "quartic"), ("dim", "2")],
    ];
    for pairs in descent_runs {
        let cfg = raw(pairs)
            .validate(ExperimentKind::Descent)
            .map_err(|e| e.to_string())?;
        match run(&cfg).map_err(|e| e.to_string())? {
            Report::Descent(_, t) => out.push((format!("descent {pairs:?}"), t, cfg.stop.step_tol)),
            _ => unreachable!(),
        }
    }
    let poisson_runs: &[&[(&str, &str)]] = &[&[], &[("dim", "2"), ("n", "15")]];
    for pairs in poisson_runs {
        let cfg = raw(pairs)
            .validate(ExperimentKind::Poisson)
            .map_err(|e| e.to_string())?;
        match run(&cfg).map_err(|e| e.to_string())? {
            Report::Poisson(_, t, ..) => {
                out.push((format!("poisson {pairs:?}"), t, cfg.stop.step_tol))
            }
            _ => unreachable!(),
        }
    }
    let mc_runs: &[&[(&str, &str)]] = &[
        &[("objective", "quartic"), ("trials", "500"), ("seed", "7")],
        &[
            ("objective", "indefinite"),
            ("trials", "500"),
            ("seed", "7"),
        ],
        &[
            ("objective", "quartic"),
            ("trials", "1"),
            ("jitter", "0"),
            ("x0", "1,0,0"),
        ],
    ];
    for pairs in mc_runs {
        let mut pairs = pairs.to_vec();
        pairs.push(("keep-traces", "true"));
        let cfg = raw(&pairs)
            .validate(ExperimentKind::SaddleMc)
            .map_err(|e| e.to_string())?;
        match run(&cfg).map_err(|e| e.to_string())? {
            Report::SaddleMc(_, results) => {
                for r in results {
                    let t = r.trace.ok_or(format!("trial {} has no trace", r.trial))?;
                    out.push((
                        format!("saddle-mc {pairs:?} trial {}", r.trial),
                        t,
                        cfg.stop.step_tol,
                    ));
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(out)
}

fn dichotomy() -> Verdict {
    let traces = experiment_traces()?;
    let mut diverging = 0;
    let mut worst_ratio = 0.0_f64;
    for (label, t, step_tol) in &traces {
        if t.outcome.is_diverging() {
            diverging += 1;
            continue;
        }
        let d = tail_diagnostics(t, TAIL_FRACTION).map_err(|e| e.to_string())?;
        ensure!(
            d.max_step_norm <= 10.0 * step_tol,
            "{label}: {:?}, tail step {:e} > 10 * {step_tol:e}",
            t.outcome,
            d.max_step_norm
        );
        worst_ratio = worst_ratio.max(d.max_step_norm / step_tol);
    }
    Ok(format!(
        "{} traces, {diverging} diverging, largest tail step {worst_ratio:.2} * step_tol",
        traces.len()
    ))
}

fn poisson_pipeline() -> Verdict {
    let exact = Source::Sine.exact(1).unwrap();
    let err = |n: usize| -> Result<f64, String> {
        let prob = PoissonProblem::sampled(GridSpec::new(1, n).unwrap(), Source::Sine);
        let u = direct_solve(&prob).map_err(|e| e.to_string())?;
        Ok(solution_errors(&u, &prob, exact)
            .map_err(|e| e.to_string())?
            .0)
    };
    let (e63, e127) = (err(63)?, err(127)?);
    ensure!(e63 <= 5e-3, "direct max error {e63:e}");
    let ratio = e63 / e127;
    ensure!((3.5..=4.5).contains(&ratio), "refinement ratio {ratio}");

    let prob = PoissonProblem::sampled(GridSpec::new(1, 63).unwrap(), Source::Sine);
    let energy = energy_objective(&prob);
    let direct = VecP::euclidean(direct_solve(&prob).map_err(|e| e.to_string())?).unwrap();
    let stop = ObjectiveName::Poisson.default_stop();
    ensure!(
        stop.grad_tol == 1e-9 && stop.max_iters == 200_000,
        "unexpected stop {stop:?}"
    );
    let trace = run_descent(
        &energy,
        &VecP::zeros(63, Exponent::EUCLIDEAN),
        &StepRule::local(HyperParams::default()),
        &stop,
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        trace.outcome == Outcome::GradConverged,
        "descent ended {:?}",
        trace.outcome
    );
    let rel = trace.terminal.sub(&direct).unwrap().norm() / direct.norm().max(1.0);
    ensure!(rel <= 1e-6, "descent vs direct {rel:e}");
    Ok(format!(
        "max error {e63:.3e}, ratio {ratio:.3}, descent vs direct {rel:.1e} after {} iterations",
        trace.iters()
    ))
}

fn mc_config(trials: usize, start: McStart, jitter: f64, name: ObjectiveName) -> McConfig {
    McConfig {
        trials,
        start,
        hyper: HyperParams::default(),
        jitter,
        seed: 7,
        rule: bdescent::backtracking::StepKind::LocalBacktracking,
        stop: name.default_stop(),
        p: 2.0,
        parallel: true,
        keep_traces: false,
    }
}

fn saddle_avoidance() -> Verdict {
    let quartic = bdescent::objectives::make_quartic_saddle(3).unwrap();
    let (q, _) = saddle_mc(
        &quartic,
        &mc_config(500, McStart::Ball(1.0), 0.05, ObjectiveName::Quartic),
    )
    .map_err(|e| e.to_string())?;
    ensure!(q.counts.total() == 500, "quartic counts {:?}", q.counts);
    ensure!(
        q.counts.saddle == 0,
        "quartic saddle trials {:?}",
        q.saddle_trials
    );
    ensure!(
        q.counts.minimum >= 490,
        "quartic minima {}",
        q.counts.minimum
    );

    let indefinite = Quadratic::indefinite(3).unwrap();
    let (i, _) = saddle_mc(
        &indefinite,
        &mc_config(500, McStart::Ball(1.0), 0.05, ObjectiveName::Indefinite),
    )
    .map_err(|e| e.to_string())?;
    ensure!(i.counts.total() == 500, "indefinite counts {:?}", i.counts);
    ensure!(
        i.counts.saddle == 0,
        "indefinite saddle trials {:?}",
        i.saddle_trials
    );

    let control = run_descent(
        &quartic,
        &e(&[1.0, 0.0, 0.0]),
        &StepRule::local(HyperParams::default()),
        &ObjectiveName::Quartic.default_stop(),
    )
    .map_err(|e| e.to_string())?;
    let audit = converged_point_audit(&quartic, &control, 1e-7).map_err(|e| e.to_string())?;
    ensure!(
        audit == Audit::CriticalSaddle,
        "control run audited {audit:?}"
    );
    let (c, _) = saddle_mc(
        &quartic,
        &mc_config(
            1,
            McStart::Fixed(vec![1.0, 0.0, 0.0]),
            0.0,
            ObjectiveName::Quartic,
        ),
    )
    .map_err(|e| e.to_string())?;
    ensure!(c.counts.saddle == 1, "control trial counts {:?}", c.counts);

    Ok(format!(
        "quartic {:?}, indefinite {:?}, control {audit:?}",
        q.counts, i.counts
    ))
}

fn gradient_consistency() -> Verdict {
    let mut r = rng(5);
    let mut worst = 0.0_f64;
    for b in builtins() {
        for _ in 0..100 {
            let x = cube_point(b.obj.dim(), b.spread, &mut r);
            let d = gradient_check(b.obj.as_ref(), &x, 1e-5);
            ensure!(d <= 1e-6, "{}: discrepancy {d:e}", b.label);
            worst = worst.max(d);
        }
    }
    Ok(format!("largest discrepancy {worst:.1e}"))
}

fn determinism() -> Verdict {
    let summary = |parallel: bool| -> Result<String, String> {
        let mut cfg = raw(&[("trials", "500"), ("seed", "7")])
            .validate(ExperimentKind::SaddleMc)
            .map_err(|e| e.to_string())?;
        cfg.parallel = parallel;
        run(&cfg)
            .and_then(|r| r.summary_json())
            .map_err(|e| e.to_string())
    };
    let first = summary(true)?;
    ensure!(first == summary(true)?, "parallel reruns differ");
    ensure!(
        first == summary(false)?,
        "serial and parallel summaries differ"
    );
    Ok(format!("{} identical bytes across three runs", first.len()))
}

#[test]
fn acceptance() {
    let mut suite = Suite { failed: Vec::new() };
    let secs = |s: f64| Some(Duration::from_secs_f64(s));
    suite.criterion(1, "duality identities", secs(1.0), duality_identities);
    suite.criterion(2, "step-size rule", secs(1.0), step_size_rule);
    suite.criterion(3, "descent inequality", secs(5.0), descent_inequality);
    suite.criterion(4, "SPD quadratic convergence", secs(0.1), spd_quadratic);
    suite.criterion(5, "divergence or vanishing steps", secs(30.0), dichotomy);
    suite.criterion(6, "Poisson pipeline", secs(60.0), poisson_pipeline);
    suite.criterion(7, "saddle avoidance", secs(60.0), saddle_avoidance);
    suite.criterion(8, "gradient consistency", secs(5.0), gradient_consistency);
    suite.criterion(9, "determinism", None, determinism);
    assert!(
        suite.failed.is_empty(),
        "failed criteria: {:?}",
        suite.failed
    );
}
