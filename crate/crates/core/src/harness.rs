//! Seeded sparse-PCA experiment batches and their CSV outputs.
//!
//! A batch solves one instance (generated from the seed or read from CSV)
//! `runs` times per (solver, strategy) pair, each run starting from its own
//! seeded initial point. Run `r` uses the same initial point for every pair.
//!
//! Randomness comes from ChaCha20 streams keyed by `(seed, purpose, index)`,
//! so every number is independent of execution order and runs can execute
//! in parallel without affecting the trajectories.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::{polar_factor, DenseMatrix};
use crate::manifold::{Geometry, Manifold, ManifoldPoint};
use crate::objectives::{CompositeObjective, SparsePcaInstance};
use crate::solvers::{
    accelerated_solve, rgcg_solve, SolverConfig, SolverReport, SolverStatus,
};
use crate::stepsize::{ArmijoParams, StepSizeStrategy};

/// Which manifold an experiment runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManifoldSpec {
    Sphere { n: usize },
    Stiefel { n: usize, p: usize },
}

impl ManifoldSpec {
    pub fn n(&self) -> usize {
        match *self {
            ManifoldSpec::Sphere { n } | ManifoldSpec::Stiefel { n, .. } => n,
        }
    }

    pub fn p(&self) -> usize {
        match *self {
            ManifoldSpec::Sphere { .. } => 1,
            ManifoldSpec::Stiefel { p, .. } => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldSpec::Sphere { .. } => "sphere",
            ManifoldSpec::Stiefel { .. } => "stiefel",
        }
    }

    pub fn geometry(&self) -> Result<Geometry> {
        match *self {
            ManifoldSpec::Sphere { n } => Geometry::sphere(n),
            ManifoldSpec::Stiefel { n, p } => Geometry::stiefel(n, p),
        }
    }

    fn with_n(self, n: usize) -> Self {
        match self {
            ManifoldSpec::Sphere { .. } => ManifoldSpec::Sphere { n },
            ManifoldSpec::Stiefel { p, .. } => ManifoldSpec::Stiefel { n, p },
        }
    }
}

/// Step-size strategy selector, resolved against an objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Armijo,
    Adaptive,
    Diminishing,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Armijo,
        StrategyKind::Adaptive,
        StrategyKind::Diminishing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Armijo => "armijo",
            StrategyKind::Adaptive => "adaptive",
            StrategyKind::Diminishing => "diminishing",
        }
    }

    /// Concrete strategy; the adaptive rule takes `L` from the objective.
    pub fn resolve(&self, obj: &CompositeObjective, armijo: ArmijoParams) -> StepSizeStrategy {
        match self {
            StrategyKind::Armijo => StepSizeStrategy::Armijo(armijo),
            StrategyKind::Adaptive => StepSizeStrategy::Adaptive {
                lipschitz: obj.lipschitz(),
            },
            StrategyKind::Diminishing => StepSizeStrategy::Diminishing,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Rgcg,
    Accelerated,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Rgcg => "rgcg",
            SolverKind::Accelerated => "accelerated",
        }
    }

    pub fn solve(
        &self,
        x0: &ManifoldPoint,
        obj: &CompositeObjective,
        cfg: &SolverConfig,
    ) -> Result<SolverReport> {
        match self {
            SolverKind::Rgcg => rgcg_solve(x0, obj, cfg),
            SolverKind::Accelerated => accelerated_solve(x0, obj, cfg),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the data matrix `A` comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixSource {
    /// Gaussian, column-standardized, drawn from the experiment seed.
    Generated,
    /// Dense CSV, one row per line, no header.
    Csv(PathBuf),
}

/// Column scaling applied to a generated data matrix after centering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Standardization {
    /// Unit sample variance per column.
    UnitVariance,
    /// Unit Euclidean norm per column.
    UnitNorm,
}

impl Standardization {
    /// Unit variance on the sphere, unit norm on Stiefel.
    pub fn default_for(manifold: ManifoldSpec) -> Self {
        match manifold {
            ManifoldSpec::Sphere { .. } => Standardization::UnitVariance,
            ManifoldSpec::Stiefel { .. } => Standardization::UnitNorm,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Standardization::UnitVariance => "variance",
            Standardization::UnitNorm => "norm",
        }
    }
}

/// Full description of an experiment batch.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSpec,
    pub lam: f64,
    pub strategies: Vec<StrategyKind>,
    pub solvers: Vec<SolverKind>,
    pub runs: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol_theta: f64,
    pub tol_fstall: f64,
    pub fstall_window: usize,
    pub armijo: ArmijoParams,
    pub output_dir: PathBuf,
    pub matrix_source: MatrixSource,
    /// Column scaling of generated matrices (ignored for CSV input).
    pub standardization: Standardization,
    /// Fixed-point iterations per sphere gap subproblem.
    pub sphere_subproblem_iters: usize,
    /// Solve the runs of a pair concurrently.
    pub parallel: bool,
}

impl ExperimentConfig {
    /// Defaults: all strategies, plain solver, 10 runs, the standard
    /// tolerances, one fixed-point iteration per sphere subproblem and the
    /// manifold's default [`Standardization`].
    pub fn new(manifold: ManifoldSpec, lam: f64, seed: u64) -> Self {
        let solver = SolverConfig::default();
        Self {
            manifold,
            lam,
            strategies: StrategyKind::ALL.to_vec(),
            solvers: vec![SolverKind::Rgcg],
            runs: 10,
            seed,
            max_iters: solver.max_iters,
            tol_theta: solver.tol_theta,
            tol_fstall: solver.tol_fstall,
            fstall_window: solver.fstall_window,
            armijo: ArmijoParams::default(),
            output_dir: PathBuf::from("results"),
            matrix_source: MatrixSource::Generated,
            standardization: Standardization::default_for(manifold),
            sphere_subproblem_iters: 1,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = (self.manifold.n(), self.manifold.p());
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if n < 2 || p < 1 || p > n {
            return Err(Error::Config(format!("need n >= 2 and 1 <= p <= n, got n = {n}, p = {p}")));
        }
        if !(self.lam >= 0.0) || !self.lam.is_finite() {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lam)));
        }
        if self.strategies.is_empty() || self.solvers.is_empty() {
            return Err(Error::Config("need at least one strategy and one solver".into()));
        }
        self.armijo.validate()?;
        self.solver_config(StepSizeStrategy::Diminishing).validate()
    }

    /// Solver configuration for one strategy.
    pub fn solver_config(&self, strategy: StepSizeStrategy) -> SolverConfig {
        let mut cfg = SolverConfig {
            max_iters: self.max_iters,
            tol_theta: self.tol_theta,
            tol_fstall: self.tol_fstall,
            fstall_window: self.fstall_window,
            ..SolverConfig::new(strategy)
        };
        cfg.sphere.max_outer_iters = self.sphere_subproblem_iters;
        cfg
    }

    /// Short stable hash of everything that determines the numerical results.
    pub fn config_hash(&self) -> String {
        let canonical = format!(
            "{}|n={}|p={}|lam={:e}|strategies={:?}|solvers={:?}|runs={}|seed={}|max_iters={}|tol_theta={:e}|tol_fstall={:e}|window={}|armijo={:?}|matrix={:?}|scaling={}|sphere_iters={}",
            self.manifold.name(),
            self.manifold.n(),
            self.manifold.p(),
            self.lam,
            self.strategies,
            self.solvers,
            self.runs,
            self.seed,
            self.max_iters,
            self.tol_theta,
            self.tol_fstall,
            self.fstall_window,
            self.armijo,
            self.matrix_source,
            self.standardization.name(),
            self.sphere_subproblem_iters,
        );
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Deterministic RNG stream for `(seed, purpose, index)`.
pub fn keyed_rng(seed: u64, purpose: &str, index: u64) -> ChaCha20Rng {
    let digest = Sha256::digest(format!("rgcg/{seed}/{purpose}/{index}").as_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    // column-major fill, independent of nalgebra's from_fn traversal order
    for v in m.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    m
}

/// Shifts every column to zero mean and scales it to unit sample variance.
/// Constant columns are only centered.
pub fn standardize_columns(a: &mut DenseMatrix) {
    scale_columns(a, Standardization::UnitVariance);
}

/// Centers every column and applies `scaling`. Constant columns are only
/// centered.
pub fn scale_columns(a: &mut DenseMatrix, scaling: Standardization) {
    let rows = a.nrows();
    if rows < 2 {
        return;
    }
    for mut col in a.column_iter_mut() {
        let mean = col.sum() / rows as f64;
        col.add_scalar_mut(-mean);
        let sq = col.norm_squared();
        let denom = match scaling {
            Standardization::UnitVariance => (sq / (rows - 1) as f64).sqrt(),
            Standardization::UnitNorm => sq.sqrt(),
        };
        if denom > 0.0 {
            col /= denom;
        }
    }
}

/// Seeded initial points for the runs of a batch.
#[derive(Clone, Copy, Debug)]
pub struct InitialPoints {
    seed: u64,
    geometry: Geometry,
}

impl InitialPoints {
    pub fn new(seed: u64, geometry: Geometry) -> Self {
        Self { seed, geometry }
    }

    /// Initial point of run `run`: a normalized Gaussian vector on the sphere,
    /// the polar factor of a Gaussian `n x p` matrix on Stiefel.
    pub fn point(&self, run: usize) -> ManifoldPoint {
        let (n, p) = self.geometry.shape();
        let mut rng = keyed_rng(self.seed, "initial-point", run as u64);
        loop {
            let g = gaussian_matrix(&mut rng, n, p);
            let coords = match self.geometry {
                Geometry::Sphere(_) => {
                    let nrm = g.norm();
                    if nrm == 0.0 {
                        continue;
                    }
                    g / nrm
                }
                Geometry::Stiefel(_) => match polar_factor(&g) {
                    Ok(q) => q,
                    Err(_) => continue,
                },
            };
            return self.geometry.renormalize(ManifoldPoint::from_coords_unchecked(coords));
        }
    }
}

/// Random sparse-PCA instance: i.i.d. standard normal `n x n` matrix with
/// standardized columns, additionally symmetrized on Stiefel. Uses the
/// manifold's default [`Standardization`].
pub fn generate_instance(
    seed: u64,
    manifold: ManifoldSpec,
    lam: f64,
) -> Result<(SparsePcaInstance, InitialPoints)> {
    generate_instance_scaled(seed, manifold, lam, Standardization::default_for(manifold))
}

/// [`generate_instance`] with an explicit column scaling.
pub fn generate_instance_scaled(
    seed: u64,
    manifold: ManifoldSpec,
    lam: f64,
    scaling: Standardization,
) -> Result<(SparsePcaInstance, InitialPoints)> {
    let geometry = manifold.geometry()?;
    let n = manifold.n();
    let mut rng = keyed_rng(seed, "data-matrix", n as u64);
    let mut a = gaussian_matrix(&mut rng, n, n);
    scale_columns(&mut a, scaling);
    if let ManifoldSpec::Stiefel { .. } = manifold {
        a = (&a + a.transpose()) * 0.5;
    }
    let instance = SparsePcaInstance::new(a, lam, manifold.p())?;
    Ok((instance, InitialPoints::new(seed, geometry)))
}

/// Reads a dense matrix from CSV: comma-separated, one row per line, no header.
pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::Config(format!("{}: row {}: invalid number {f:?}", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Config(format!("{}: empty matrix", path.display())));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Dimension(format!(
            "{}: row {} has {} entries, expected {cols}",
            path.display(),
            bad + 1,
            rows[bad].len()
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DenseMatrix::from_row_slice(flat.len() / cols, cols, &flat))
}

/// Per-run statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub time: f64,
    pub iters: usize,
    pub final_f: f64,
    pub final_theta: f64,
    pub status: SolverStatus,
}

/// Aggregate over the runs of one (solver, strategy) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub manifold: &'static str,
    pub n: usize,
    pub p: usize,
    pub lam: f64,
    pub solver: SolverKind,
    pub strategy: StrategyKind,
    pub mean_time: f64,
    pub mean_iters: f64,
    pub runs: Vec<RunStats>,
}

impl RunSummary {
    /// Runs that ended with `theta_converged` or `f_stalled`.
    pub fn converged_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.status.is_converged()).count()
    }
}

/// All reports of one (solver, strategy) pair, indexed by run.
#[derive(Clone, Debug)]
pub struct PairResult {
    pub solver: SolverKind,
    pub strategy: StrategyKind,
    pub reports: Vec<Option<SolverReport>>,
    pub summary: RunSummary,
}

/// Output of [`run_batch`].
#[derive(Clone, Debug)]
pub struct BatchResult {
    pub instance: SparsePcaInstance,
    pub pairs: Vec<PairResult>,
}

impl BatchResult {
    pub fn summaries(&self) -> impl Iterator<Item = &RunSummary> {
        self.pairs.iter().map(|p| &p.summary)
    }

    /// `true` when no run ended in an error.
    pub fn all_ok(&self) -> bool {
        self.pairs
            .iter()
            .all(|p| p.summary.runs.iter().all(|r| !r.status.is_error()))
    }
}

/// Loads or generates the instance for `cfg`. With a CSV source the ambient
/// dimension is taken from the matrix.
pub fn resolve_instance(cfg: &ExperimentConfig) -> Result<(SparsePcaInstance, InitialPoints, ManifoldSpec)> {
    match &cfg.matrix_source {
        MatrixSource::Generated => {
            let (inst, init) = generate_instance_scaled(cfg.seed, cfg.manifold, cfg.lam, cfg.standardization)?;
            Ok((inst, init, cfg.manifold))
        }
        MatrixSource::Csv(path) => {
            let a = read_matrix_csv(path)?;
            let manifold = cfg.manifold.with_n(a.ncols());
            let geometry = manifold.geometry()?;
            let inst = SparsePcaInstance::new(a, cfg.lam, manifold.p())?;
            Ok((inst, InitialPoints::new(cfg.seed, geometry), manifold))
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Runs every (solver, strategy) pair of `cfg` on one shared instance.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let (instance, init, manifold) = resolve_instance(cfg)?;
    let geometry = manifold.geometry()?;
    let obj = instance.objective(geometry)?;
    let starts: Vec<ManifoldPoint> = (0..cfg.runs).map(|r| init.point(r)).collect();

    let mut pairs = Vec::new();
    for &solver in &cfg.solvers {
        for &strategy in &cfg.strategies {
            let scfg = cfg.solver_config(strategy.resolve(&obj, cfg.armijo));
            let solve_one = |x0: &ManifoldPoint| solver.solve(x0, &obj, &scfg);
            let results: Vec<Result<SolverReport>> = if cfg.parallel {
                starts.par_iter().map(solve_one).collect()
            } else {
                starts.iter().map(solve_one).collect()
            };
            let mut reports = Vec::with_capacity(results.len());
            let mut runs = Vec::with_capacity(results.len());
            for res in results {
                match res {
                    Ok(rep) => {
                        runs.push(RunStats {
                            time: rep.total_time,
                            iters: rep.iterations(),
                            final_f: rep.final_value(),
                            final_theta: rep.final_theta(),
                            status: rep.status.clone(),
                        });
                        reports.push(Some(rep));
                    }
                    Err(e) => {
                        runs.push(RunStats {
                            time: 0.0,
                            iters: 0,
                            final_f: f64::NAN,
                            final_theta: f64::NAN,
                            status: SolverStatus::Failed(e.to_string()),
                        });
                        reports.push(None);
                    }
                }
            }
            let summary = RunSummary {
                manifold: manifold.name(),
                n: manifold.n(),
                p: manifold.p(),
                lam: cfg.lam,
                solver,
                strategy,
                mean_time: mean(runs.iter().map(|r| r.time)),
                mean_iters: mean(runs.iter().map(|r| r.iters as f64)),
                runs,
            };
            pairs.push(PairResult {
                solver,
                strategy,
                reports,
                summary,
            });
        }
    }
    Ok(BatchResult { instance, pairs })
}

/// Paths written by [`write_outputs`].
#[derive(Clone, Debug)]
pub struct OutputFiles {
    pub summary: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Creates the output directory and checks that it is writable.
pub fn preflight_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".rgcg-write-probe");
    fs::File::create(&probe)?.write_all(b"ok")?;
    fs::remove_file(&probe)?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 8] = ["run", "iter", "time_s", "F", "f", "g", "theta", "lambda"];

pub const SUMMARY_HEADER: [&str; 9] = [
    "manifold",
    "n",
    "p",
    "lambda",
    "solver",
    "strategy",
    "mean_time_s",
    "mean_iters",
    "converged_runs",
];

/// Writes one trace CSV per (solver, strategy) pair and one summary CSV.
/// File names are derived from [`ExperimentConfig::config_hash`].
pub fn write_outputs(batch: &BatchResult, cfg: &ExperimentConfig) -> Result<OutputFiles> {
    if batch.pairs.is_empty() {
        return Err(Error::Config("nothing to write".into()));
    }
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let hash = cfg.config_hash();

    let mut traces = Vec::new();
    for pair in &batch.pairs {
        let path = dir.join(format!("trace_{hash}_{}_{}.csv", pair.solver, pair.strategy));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(TRACE_HEADER)?;
        for (run, rep) in pair.reports.iter().enumerate() {
            let Some(rep) = rep else { continue };
            for r in &rep.records {
                w.write_record([
                    run.to_string(),
                    r.k.to_string(),
                    r.wall_time.to_string(),
                    r.total.to_string(),
                    r.smooth.to_string(),
                    r.nonsmooth.to_string(),
                    r.theta.to_string(),
                    r.lambda.to_string(),
                ])?;
            }
        }
        w.flush()?;
        traces.push(path);
    }

    let summary = dir.join(format!("summary_{hash}.csv"));
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record(SUMMARY_HEADER)?;
    for s in batch.summaries() {
        w.write_record([
            s.manifold.to_string(),
            s.n.to_string(),
            s.p.to_string(),
            s.lam.to_string(),
            s.solver.to_string(),
            s.strategy.to_string(),
            s.mean_time.to_string(),
            s.mean_iters.to_string(),
            s.converged_runs().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(OutputFiles { summary, traces })
}

/// Preflight, batch, outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(BatchResult, OutputFiles)> {
    cfg.validate()?;
    preflight_output_dir(&cfg.output_dir)?;
    let batch = run_batch(cfg)?;
    let files = write_outputs(&batch, cfg)?;
    Ok((batch, files))
}
