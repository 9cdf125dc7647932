//! Seeded multi-run batch with CSV traces and a summary table.
//!
//! ```text
//! cargo run --release --example batch_experiment -- results/demo
//! ```

use std::path::PathBuf;

use rgcg::harness::{run_experiment, ExperimentConfig, ManifoldSpec, SolverKind};

fn main() -> rgcg::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("rgcg-batch"), PathBuf::from);
    let mut cfg = ExperimentConfig::new(ManifoldSpec::Stiefel { n: 30, p: 3 }, 0.1, 11);
    cfg.runs = 5;
    cfg.solvers = vec![SolverKind::Rgcg, SolverKind::Accelerated];
    cfg.output_dir = out;

    let (batch, files) = run_experiment(&cfg)?;
    for s in batch.summaries() {
        println!(
            "{:<12} {:<12} mean iters {:>7.1}  mean time {:.4}s  converged {}/{}",
            s.solver.name(),
            s.strategy.name(),
            s.mean_iters,
            s.mean_time,
            s.converged_runs(),
            s.runs.len()
        );
    }
    println!("summary written to {}", files.summary.display());
    Ok(())
}
