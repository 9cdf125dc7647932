//! Several sparse components at once on the Stiefel manifold, with a
//! per-iteration observer tracking orthonormality drift.

use rgcg::harness::{generate_instance, ManifoldSpec};
use rgcg::prelude::*;
use rgcg::solvers::rgcg_solve_observed;

fn main() -> Result<()> {
    let spec = ManifoldSpec::Stiefel { n: 40, p: 4 };
    let (instance, starts) = generate_instance(3, spec, 0.1)?;
    let geometry = spec.geometry()?;
    let obj = instance.objective(geometry)?;

    let mut drift: f64 = 0.0;
    let report = rgcg_solve_observed(&starts.point(0), &obj, &SolverConfig::default(), &mut |ev| {
        drift = drift.max(geometry.point_residual(ev.x));
        if ev.k % 10 == 0 {
            println!("k = {:>3}  F = {:>10.4}  theta = {:>10.3e}", ev.k, ev.record.total, ev.record.theta);
        }
    })?;

    let x = report.final_point.coords();
    let sparsity = x.iter().filter(|v| v.abs() < 1e-3).count() as f64 / x.len() as f64;
    println!(
        "{} after {} iterations, F = {:.4}, max drift {drift:.1e}, {:.0}% entries below 1e-3",
        report.status,
        report.iterations(),
        report.final_value(),
        100.0 * sparsity
    );
    Ok(())
}
