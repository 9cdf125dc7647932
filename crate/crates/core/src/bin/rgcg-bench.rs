//! Sparse-PCA benchmark runner.
//!
//! ```text
//! rgcg-bench --manifold sphere --n 100 --lambda 0.1 --strategy all --runs 10 --out results
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use rgcg::harness::{
    run_experiment, ExperimentConfig, ManifoldSpec, MatrixSource, SolverKind, Standardization,
    StrategyKind,
};
use rgcg::stepsize::ArmijoParams;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ManifoldArg {
    Sphere,
    Stiefel,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Armijo,
    Adaptive,
    Diminishing,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Rgcg,
    Accelerated,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScalingArg {
    Variance,
    Norm,
}

#[derive(Debug, Parser)]
#[command(name = "rgcg-bench", about = "Seeded sparse-PCA experiments for the conditional gradient solvers")]
struct Args {
    #[arg(long, value_enum, default_value = "sphere")]
    manifold: ManifoldArg,
    /// Ambient dimension; inferred from --matrix-csv when omitted.
    #[arg(long)]
    n: Option<usize>,
    /// Number of columns on the Stiefel manifold.
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long = "lambda", default_value_t = 0.1)]
    lam: f64,
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "rgcg")]
    solver: SolverArg,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol_theta: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol_fstall: f64,
    #[arg(long, default_value_t = 0.1)]
    zeta: f64,
    #[arg(long, default_value_t = 0.05)]
    omega1: f64,
    #[arg(long, default_value_t = 0.95)]
    omega2: f64,
    /// Column scaling of the generated matrix [default: variance on the
    /// sphere, norm on Stiefel].
    #[arg(long, value_enum)]
    standardize: Option<ScalingArg>,
    /// Fixed-point iterations per sphere gap subproblem.
    #[arg(long, default_value_t = 1)]
    sphere_subproblem_iters: usize,
    /// Dense CSV data matrix (no header) instead of a generated one.
    #[arg(long)]
    matrix_csv: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, String> {
    let n = match (args.n, &args.matrix_csv) {
        (Some(n), _) => n,
        // placeholder, replaced by the matrix width when the CSV is loaded
        (None, Some(_)) => args.p.max(2),
        (None, None) => return Err("--n is required unless --matrix-csv is given".into()),
    };
    let manifold = match args.manifold {
        ManifoldArg::Sphere => ManifoldSpec::Sphere { n },
        ManifoldArg::Stiefel => ManifoldSpec::Stiefel { n, p: args.p },
    };
    let mut cfg = ExperimentConfig::new(manifold, args.lam, args.seed);
    cfg.strategies = match args.strategy {
        StrategyArg::Armijo => vec![StrategyKind::Armijo],
        StrategyArg::Adaptive => vec![StrategyKind::Adaptive],
        StrategyArg::Diminishing => vec![StrategyKind::Diminishing],
        StrategyArg::All => StrategyKind::ALL.to_vec(),
    };
    cfg.solvers = match args.solver {
        SolverArg::Rgcg => vec![SolverKind::Rgcg],
        SolverArg::Accelerated => vec![SolverKind::Accelerated],
        SolverArg::Both => vec![SolverKind::Rgcg, SolverKind::Accelerated],
    };
    cfg.runs = args.runs;
    cfg.max_iters = args.max_iters;
    cfg.tol_theta = args.tol_theta;
    cfg.tol_fstall = args.tol_fstall;
    cfg.armijo = ArmijoParams {
        zeta: args.zeta,
        omega1: args.omega1,
        omega2: args.omega2,
        ..ArmijoParams::default()
    };
    if let Some(s) = args.standardize {
        cfg.standardization = match s {
            ScalingArg::Variance => Standardization::UnitVariance,
            ScalingArg::Norm => Standardization::UnitNorm,
        };
    }
    cfg.sphere_subproblem_iters = args.sphere_subproblem_iters;
    cfg.output_dir = args.out.clone();
    if let Some(path) = &args.matrix_csv {
        cfg.matrix_source = MatrixSource::Csv(path.clone());
        if let Some(n) = args.n {
            let a = rgcg::harness::read_matrix_csv(path).map_err(|e| e.to_string())?;
            if a.ncols() != n {
                return Err(format!("--n {n} does not match the {} columns of {}", a.ncols(), path.display()));
            }
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("rgcg-bench: {e}");
            return ExitCode::from(2);
        }
    };
    let (batch, files) = match run_experiment(&cfg) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("rgcg-bench: {e}");
            return ExitCode::from(2);
        }
    };
    println!(
        "{:<12} {:<12} {:>10} {:>10} {:>10}",
        "solver", "strategy", "time(s)", "iters", "converged"
    );
    for s in batch.summaries() {
        println!(
            "{:<12} {:<12} {:>10.4} {:>10.2} {:>7}/{}",
            s.solver.name(),
            s.strategy.name(),
            s.mean_time,
            s.mean_iters,
            s.converged_runs(),
            s.runs.len()
        );
    }
    println!("summary: {}", files.summary.display());
    for t in &files.traces {
        println!("trace:   {}", t.display());
    }
    if batch.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
