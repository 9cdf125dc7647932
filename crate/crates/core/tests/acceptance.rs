//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line with
//! its measurements; the test fails if any criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;

use common::{gaussian, l1, random_point, random_tangent, rel_err, rng, unit_vector};
use rgcg::harness::{
    generate_instance, run_batch, run_experiment, ExperimentConfig, ManifoldSpec, SolverKind, StrategyKind,
};
use rgcg::kernels::{inv_sqrt_spd, soft_threshold, solve_matrix_eq, DenseMatrix};
use rgcg::manifold::{Geometry, Manifold, TangentVector};
use rgcg::objectives::CompositeObjective;
use rgcg::solvers::{accelerated_solve_observed, rgcg_solve_observed, IterationEvent, SolverConfig, SolverReport};
use rgcg::sphere::{sph_parallel_transport, solve_l1_sphere};
use rgcg::stepsize::StepSizeStrategy;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Writes straight to stderr so the lines survive output capture.
fn report(id: usize, title: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed < limit;
    let _ = writeln!(
        std::io::stderr(),
        "[{}] criterion {id}: {title} ({:.1}s / {}s) {}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        out.detail
    );
    pass
}

fn random_geometry(r: &mut impl Rng, stiefel: bool) -> Geometry {
    let n = r.gen_range(2..=24);
    if stiefel {
        Geometry::stiefel(n, r.gen_range(1..=n.min(6))).unwrap()
    } else {
        Geometry::sphere(n).unwrap()
    }
}

fn criterion_1() -> Outcome {
    const CASES: usize = 1000;
    let mut r = rng(101);
    let mut worst = [0.0f64; 6];
    for stiefel in [false, true] {
        for _ in 0..CASES {
            let geom = random_geometry(&mut r, stiefel);
            let x = random_point(&mut r, &geom);
            let scale = r.gen_range(0.0..3.0);
            let eta = random_tangent(&mut r, &geom, &x, scale);
            worst[0] = worst[0].max(geom.point_residual(&geom.retract(&x, &eta)));

            let len = r.gen_range(1e-6..1.5);
            let short = random_tangent(&mut r, &geom, &x, len);
            let back = geom.inv_retract(&x, &geom.retract(&x, &short)).unwrap();
            worst[1] = worst[1].max((back.coords() - short.coords()).norm());

            let xi = random_tangent(&mut r, &geom, &x, 1.0);
            let zero = TangentVector::zeros(x.shape());
            worst[2] = worst[2].max((geom.transport(&x, &zero, &xi).unwrap().coords() - xi.coords()).norm());

            let zeta = random_tangent(&mut r, &geom, &x, 1.0);
            let (a, b) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
            let lhs = geom.transport(&x, &short, &xi.lin_comb(a, &zeta, b)).unwrap();
            let rhs = geom
                .transport(&x, &short, &xi)
                .unwrap()
                .lin_comb(a, &geom.transport(&x, &short, &zeta).unwrap(), b);
            worst[3] = worst[3].max((lhs.coords() - rhs.coords()).norm() / (1.0 + a.abs() + b.abs()));
            worst[4] = worst[4].max(geom.tangent_residual(&geom.retract(&x, &short), &lhs));

            if !stiefel {
                let moved = sph_parallel_transport(&x, &eta, &xi);
                worst[5] = worst[5].max((moved.norm() - xi.norm()).abs());
            }
        }
    }
    let limits = [1e-10, 1e-8, 1e-9, 1e-9, 1e-9, 1e-10];
    let pass = worst.iter().zip(limits).all(|(w, l)| *w <= l);
    outcome(
        pass,
        format!(
            "{CASES} cases per geometry; on-manifold {:.1e}, round trip {:.1e}, identity {:.1e}, linearity {:.1e}, tangency {:.1e}, isometry {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}

fn prox_on_grid(v: f64, lam: f64) -> f64 {
    let (lo, hi, steps) = (-6.0, 6.0, 240_000);
    let h = (hi - lo) / steps as f64;
    (0..=steps)
        .map(|i| lo + i as f64 * h)
        .map(|z| (0.5 * (z - v).powi(2) + lam * z.abs(), z))
        .fold((f64::INFINITY, 0.0), |best, c| if c.0 < best.0 { c } else { best })
        .1
}

fn criterion_2() -> Outcome {
    let mut r = rng(102);
    let (mut syl, mut lyap, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..300 {
        let p = r.gen_range(1..=8);
        let m1 = gaussian(&mut r, p, p);
        let m2 = gaussian(&mut r, p, p);
        let b1 = &m1 * m1.transpose() + DenseMatrix::identity(p, p) * 0.5;
        let b2 = &m2 * m2.transpose() + DenseMatrix::identity(p, p) * 0.5;
        let k = gaussian(&mut r, p, p);
        let x = solve_matrix_eq(&b1, &b2, &k).unwrap();
        syl = syl.max((&b1 * &x + &x * &b2 - &k).norm() / (1.0 + k.norm()));

        let b = &b1 + gaussian(&mut r, p, p) * 0.1;
        let two = DenseMatrix::identity(p, p) * 2.0;
        let s = solve_matrix_eq(&b, &b.transpose(), &two).unwrap();
        lyap = lyap.max((&b * &s + &s * b.transpose() - two).norm());

        let root = inv_sqrt_spd(&b1).unwrap();
        inv = inv.max((&root * &b1 * &root - DenseMatrix::identity(p, p)).norm());
    }
    let mut prox = 0.0f64;
    for _ in 0..40 {
        let lam = r.gen_range(0.0..2.0);
        let v = DenseMatrix::from_fn(4, 1, |_, _| r.gen_range(-4.0..4.0));
        let out = soft_threshold(&v, lam).unwrap();
        for i in 0..4 {
            prox = prox.max((out[i] - prox_on_grid(v[i], lam)).abs());
        }
    }
    let pass = syl <= 1e-10 && lyap <= 1e-10 && inv <= 1e-9 && prox <= 5e-5;
    outcome(
        pass,
        format!("sylvester {syl:.1e}, lyapunov {lyap:.1e}, inv_sqrt {inv:.1e}, prox vs grid {prox:.1e} (grid step 5e-5)"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng(103);
    for spec in [ManifoldSpec::Sphere { n: 100 }, ManifoldSpec::Stiefel { n: 100, p: 10 }] {
        let (inst, _) = generate_instance(3, spec, 0.1).unwrap();
        let geom = spec.geometry().unwrap();
        let obj = inst.objective(geom).unwrap();
        for _ in 0..20 {
            let x = random_point(&mut r, &geom);
            let eta = random_tangent(&mut r, &geom, &x, 1.0);
            let h = 1e-6;
            let fp = obj.f(&geom.retract(&x, &eta.scale(h)));
            let fm = obj.f(&geom.retract(&x, &eta.scale(-h)));
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max(rel_err(fd, geom.inner(&x, &obj.riem_grad(&x), &eta)));
        }
    }
    outcome(worst <= 1e-5, format!("sphere n=100 and stiefel 100x10, 20 points each; worst relative error {worst:.1e}"))
}

fn l1_sphere_objective(y: &DenseMatrix, x: &DenseMatrix, lam: f64) -> f64 {
    (y - x).norm_squared() / (2.0 * lam) + l1(y)
}

/// Projected subgradient descent from `start`, returning the best value seen.
fn refine(start: &DenseMatrix, x: &DenseMatrix, lam: f64, steps: usize) -> f64 {
    let mut y = start.clone();
    let mut best = l1_sphere_objective(&y, x, lam);
    for t in 0..steps {
        let sub = (&y - x) / lam + y.map(|v| v.signum() * (v != 0.0) as u8 as f64);
        let step = 0.05 / ((t + 1) as f64).sqrt();
        let moved = &y - sub * step;
        let nrm = moved.norm();
        if nrm == 0.0 {
            break;
        }
        y = moved / nrm;
        best = best.min(l1_sphere_objective(&y, x, lam));
    }
    best
}

fn criterion_4() -> Outcome {
    let mut r = rng(104);
    let mut worst_mc = f64::NEG_INFINITY;
    let mut worst_sg = f64::NEG_INFINITY;
    for n in [2usize, 3, 5] {
        let probes: Vec<DenseMatrix> = (0..100_000).map(|_| unit_vector(&mut r, n)).collect();
        for lam in [0.1, 0.5, 1.0] {
            for _ in 0..200 {
                let x = gaussian(&mut r, n, 1) * 1.5;
                let y = solve_l1_sphere(&x, lam).unwrap();
                let v = l1_sphere_objective(&y, &x, lam);
                let (best, best_probe) = probes
                    .iter()
                    .map(|u| (l1_sphere_objective(u, &x, lam), u))
                    .fold((f64::INFINITY, &probes[0]), |a, b| if b.0 < a.0 { b } else { a });
                worst_mc = worst_mc.max(v - best);
                worst_sg = worst_sg.max(v - refine(best_probe, &x, lam, 500));
            }
        }
    }
    let pass = worst_mc <= 1e-9 && worst_sg <= 1e-9;
    outcome(
        pass,
        format!("1800 inputs; max(closed form - sampled min) {worst_mc:.1e}, max(closed form - refined) {worst_sg:.1e}"),
    )
}

/// Largest manifold residual over iterates and tangency residual of the
/// directions (and momentum, when present) seen by an observer.
#[derive(Default)]
struct Watch {
    point: f64,
    tangent: f64,
    max_theta: f64,
}

impl Watch {
    fn observe(&mut self, geom: &Geometry, ev: &IterationEvent<'_>) {
        self.point = self.point.max(geom.point_residual(ev.x)).max(geom.point_residual(ev.anchor));
        self.tangent = self.tangent.max(geom.tangent_residual(ev.anchor, &ev.gap.d));
        if let Some(m) = ev.momentum {
            self.tangent = self.tangent.max(geom.tangent_residual(&m.beta_base, &m.beta));
        }
        self.max_theta = self.max_theta.max(ev.record.theta);
    }
}

fn harness_solve(
    cfg: &ExperimentConfig,
    kind: StrategyKind,
    solver: SolverKind,
    run: usize,
    watch: &mut Watch,
) -> (SolverReport, CompositeObjective) {
    let (inst, init) = generate_instance(cfg.seed, cfg.manifold, cfg.lam).unwrap();
    let geom = cfg.manifold.geometry().unwrap();
    let obj = inst.objective(geom).unwrap();
    let scfg = cfg.solver_config(kind.resolve(&obj, cfg.armijo));
    let x0 = init.point(run);
    let mut observer = |ev: &IterationEvent<'_>| watch.observe(&geom, ev);
    let rep = match solver {
        SolverKind::Rgcg => rgcg_solve_observed(&x0, &obj, &scfg, &mut observer),
        SolverKind::Accelerated => accelerated_solve_observed(&x0, &obj, &scfg, &mut observer),
    }
    .unwrap();
    (rep, obj)
}

fn armijo_violations(rep: &SolverReport, cfg: &SolverConfig) -> usize {
    let StepSizeStrategy::Armijo(p) = cfg.strategy else { return 0 };
    rep.records
        .windows(2)
        .filter(|w| w[1].total > w[0].total || w[1].total > w[0].total + p.zeta * w[0].lambda * w[0].theta)
        .count()
}

fn criterion_5() -> Outcome {
    let mut watch = Watch::default();
    let mut violations = 0;
    let mut errors = 0;
    let mut solves = 0;
    for (spec, runs) in [(ManifoldSpec::Sphere { n: 10 }, 10), (ManifoldSpec::Stiefel { n: 50, p: 5 }, 5)] {
        let cfg = ExperimentConfig::new(spec, 0.1, 0);
        for kind in StrategyKind::ALL {
            for run in 0..runs {
                let (rep, obj) = harness_solve(&cfg, kind, SolverKind::Rgcg, run, &mut watch);
                let scfg = cfg.solver_config(kind.resolve(&obj, cfg.armijo));
                violations += armijo_violations(&rep, &scfg);
                errors += rep.status.is_error() as usize;
                watch.max_theta = rep.records.iter().fold(watch.max_theta, |m, r| m.max(r.theta));
                solves += 1;
            }
        }
    }
    let pass = watch.max_theta <= 1e-12 && violations == 0 && errors == 0 && watch.point <= 1e-9;
    outcome(
        pass,
        format!(
            "{solves} solves; max theta {:.1e}, armijo violations {violations}, errors {errors}, manifold residual {:.1e}",
            watch.max_theta, watch.point
        ),
    )
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) as f64 / 2.0
    } else {
        v[m] as f64
    }
}

fn iters(batch: &rgcg::harness::BatchResult, kind: StrategyKind) -> Vec<usize> {
    let s = batch.summaries().find(|s| s.strategy == kind).unwrap();
    s.runs.iter().map(|r| r.iters).collect()
}

fn criterion_6() -> Outcome {
    let small = run_batch(&ExperimentConfig::new(ManifoldSpec::Sphere { n: 10 }, 0.1, 0)).unwrap();
    let arm = iters(&small, StrategyKind::Armijo);
    let dim = iters(&small, StrategyKind::Diminishing);
    let med = median(arm.clone());
    let wins = arm.iter().zip(&dim).filter(|(a, d)| a <= d).count();

    let large = run_batch(&ExperimentConfig::new(ManifoldSpec::Sphere { n: 100 }, 0.1, 0)).unwrap();
    let all_stop = large.summaries().all(|s| s.converged_runs() == s.runs.len());
    let mean = |k| large.summaries().find(|s| s.strategy == k).unwrap().mean_iters;
    let (ma, mad, md) = (mean(StrategyKind::Armijo), mean(StrategyKind::Adaptive), mean(StrategyKind::Diminishing));

    let pass = med <= 60.0 && wins >= 8 && all_stop && ma < md;
    outcome(
        pass,
        format!(
            "n=10: armijo median {med}, armijo <= diminishing in {wins}/10; n=100: all stopped {all_stop}, mean iters armijo {ma:.1} / adaptive {mad:.1} / diminishing {md:.1}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = ExperimentConfig::new(ManifoldSpec::Stiefel { n: 100, p: 10 }, 0.1, 0);
    let mut watch = Watch::default();
    let mut means = Vec::new();
    let mut stopped = true;
    for kind in StrategyKind::ALL {
        let mut total = 0;
        for run in 0..cfg.runs {
            let (rep, _) = harness_solve(&cfg, kind, SolverKind::Rgcg, run, &mut watch);
            stopped &= rep.status.is_converged();
            total += rep.iterations();
        }
        means.push(total as f64 / cfg.runs as f64);
    }
    let pass = stopped && watch.point <= 1e-8;
    outcome(
        pass,
        format!(
            "all stopped {stopped}; mean iters armijo {:.1} / adaptive {:.1} / diminishing {:.1}; orthonormality drift {:.1e}",
            means[0], means[1], means[2], watch.point
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut within = [0usize; 3];
    let mut watch = Watch::default();
    let mut errors = 0;
    for seed in 0..10 {
        let mut cfg = ExperimentConfig::new(ManifoldSpec::Sphere { n: 100 }, 0.1, seed);
        cfg.max_iters = 50;
        cfg.tol_theta = 1e-300;
        cfg.tol_fstall = 1e-300;
        let mut plain = Vec::new();
        for kind in StrategyKind::ALL {
            let (rep, _) = harness_solve(&cfg, kind, SolverKind::Rgcg, 0, &mut Watch::default());
            plain.push(rep.final_value());
        }
        let lo = plain.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-9;
        let hi = plain.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
        for (i, kind) in StrategyKind::ALL.into_iter().enumerate() {
            let (rep, _) = harness_solve(&cfg, kind, SolverKind::Accelerated, 0, &mut watch);
            errors += rep.status.is_error() as usize;
            let f = rep.final_value();
            within[i] += (lo..=hi).contains(&f) as usize;
        }
    }
    let pass = errors == 0 && watch.point <= 1e-9 && watch.tangent <= 1e-9 && within[0] >= 7;
    outcome(
        pass,
        format!(
            "errors {errors}, manifold {:.1e}, tangency {:.1e}; accelerated armijo inside envelope {}/10 (adaptive {}/10, diminishing {}/10)",
            watch.point, watch.tangent, within[0], within[1], within[2]
        ),
    )
}

fn trace_columns(path: &std::path::Path) -> Vec<(String, String)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[3].to_string(), rec[6].to_string())
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let mut identical = true;
    let mut rows = 0;
    for spec in [ManifoldSpec::Sphere { n: 30 }, ManifoldSpec::Stiefel { n: 20, p: 3 }] {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let traces: Vec<Vec<Vec<(String, String)>>> = dirs
            .iter()
            .map(|d| {
                let mut cfg = ExperimentConfig::new(spec, 0.1, 42);
                cfg.runs = 4;
                cfg.solvers = vec![SolverKind::Rgcg, SolverKind::Accelerated];
                cfg.output_dir = d.path().to_path_buf();
                let (_, files) = run_experiment(&cfg).unwrap();
                files.traces.iter().map(|p| trace_columns(p)).collect()
            })
            .collect();
        identical &= traces[0] == traces[1];
        rows += traces[0].iter().map(Vec::len).sum::<usize>();
    }
    outcome(identical, format!("{rows} trace rows per invocation; F and theta columns identical: {identical}"))
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let results = [
        report(1, "geometry suite", secs(30), criterion_1),
        report(2, "kernel suite", secs(10), criterion_2),
        report(3, "gradient checks", secs(10), criterion_3),
        report(4, "L1-sphere closed form optimality", secs(60), criterion_4),
        report(5, "solver invariants", secs(120), criterion_5),
        report(6, "sphere iteration counts", secs(300), criterion_6),
        report(7, "stiefel n=100 p=10 termination", secs(600), criterion_7),
        report(8, "accelerated solver sanity", secs(120), criterion_8),
        report(9, "determinism", secs(60), criterion_9),
    ];
    let failed: Vec<usize> = (1..=9).filter(|i| !results[i - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
