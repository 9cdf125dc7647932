//! Sparse leading principal component on the sphere: every step-size rule at
//! one penalty, then a penalty sweep with Armijo.

use rgcg::harness::{generate_instance, ExperimentConfig, ManifoldSpec, StrategyKind};
use rgcg::prelude::*;

fn nonzeros(report: &SolverReport) -> usize {
    report.final_point.coords().iter().filter(|v| v.abs() > 1e-8).count()
}

fn main() -> Result<()> {
    let spec = ManifoldSpec::Sphere { n: 50 };
    let geometry = spec.geometry()?;

    let cfg = ExperimentConfig::new(spec, 0.1, 7);
    let (instance, starts) = generate_instance(cfg.seed, spec, cfg.lam)?;
    let obj = instance.objective(geometry)?;
    let x0 = starts.point(0);
    for kind in StrategyKind::ALL {
        let report = rgcg_solve(&x0, &obj, &cfg.solver_config(kind.resolve(&obj, cfg.armijo)))?;
        println!(
            "{:<12} {:>5} iterations  F = {:>10.4}  ({})",
            kind.name(),
            report.iterations(),
            report.final_value(),
            report.status
        );
    }

    println!();
    for lam in [0.1, 10.0, 20.0, 30.0, 40.0] {
        let cfg = ExperimentConfig { lam, ..cfg.clone() };
        let (instance, _) = generate_instance(cfg.seed, spec, lam)?;
        let obj = instance.objective(geometry)?;
        let report = rgcg_solve(&x0, &obj, &cfg.solver_config(StrategyKind::Armijo.resolve(&obj, cfg.armijo)))?;
        println!("lambda = {lam:>5}: {:>2}/50 nonzero loadings, F = {:.4}", nonzeros(&report), report.final_value());
    }
    Ok(())
}
