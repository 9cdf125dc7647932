//! Conditional-gradient driving loops.
//!
//! [`rgcg_solve`] iterates
//!
//! 1. `p, theta, d` from the gap subproblem at `x^k`,
//! 2. a step size `lambda_k` from the configured strategy,
//! 3. `x^{k+1} = R_{x^k}(lambda_k d)`,
//!
//! until the gap or the objective stalls. [`accelerated_solve`] adds a
//! momentum aggregate of transported gradients and an extrapolated anchor
//! point `y_k` at which the gap subproblem is solved.

use std::fmt;
use std::time::Instant;

use log::debug;

use crate::error::{Error, Result};
use crate::manifold::{Geometry, Manifold, ManifoldPoint, TangentVector, POINT_TOL};
use crate::objectives::CompositeObjective;
use crate::sphere::{sph_gap_subproblem, SphereSubproblemConfig};
use crate::stepsize::{
    adaptive_step, armijo_search, diminishing_step, ArmijoParams, StepSizeStrategy,
};
use crate::stiefel::{st_gap_subproblem, StiefelSubproblemConfig};

/// Solution of the gap subproblem at `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapResult {
    /// Subproblem minimizer `p(x)`.
    pub p: ManifoldPoint,
    /// Frank-Wolfe gap, always `<= 0`.
    pub theta: f64,
    /// Search direction `R_x^{-1}(p)`, tangent at `x`.
    pub d: TangentVector,
}

impl GapResult {
    /// Builds a result, replacing a positive (non-improving) or non-finite gap
    /// by the trivial solution `p = x`, `theta = 0`, `d = 0`.
    pub fn clamped(x: &ManifoldPoint, p: ManifoldPoint, theta: f64, d: TangentVector) -> Self {
        if theta <= 0.0 {
            Self { p, theta, d }
        } else {
            Self::stationary(x)
        }
    }

    pub fn stationary(x: &ManifoldPoint) -> Self {
        Self {
            p: x.clone(),
            theta: 0.0,
            d: TangentVector::zeros(x.shape()),
        }
    }
}

/// Weight of the new gradient in the accelerated solver's aggregate
/// `beta_{k+1} = (1 - tau_k) beta_k~ + w grad f(y_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MomentumWeight {
    /// `w = tau_k`: `beta` stays a weighted average of past gradients.
    #[default]
    Tau,
    /// `w` = the previous iteration's step size (1 at `k = 0`). Under Armijo
    /// the step can shrink by many orders of magnitude, and `beta` with it.
    PreviousStep,
}

/// Solver parameters shared by both driving loops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub strategy: StepSizeStrategy,
    pub max_iters: usize,
    /// Stop once `|theta_k| <= tol_theta`.
    pub tol_theta: f64,
    /// Compare `F_k` with `F_{k - fstall_window}`.
    pub fstall_window: usize,
    /// Stop once `|F_k - F_{k - fstall_window}| <= tol_fstall`.
    pub tol_fstall: f64,
    pub sphere: SphereSubproblemConfig,
    pub stiefel: StiefelSubproblemConfig,
    /// Only used by the accelerated solver.
    pub momentum: MomentumWeight,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(StepSizeStrategy::Armijo(ArmijoParams::default()))
    }
}

impl SolverConfig {
    pub fn new(strategy: StepSizeStrategy) -> Self {
        Self {
            strategy,
            max_iters: 2000,
            tol_theta: 1e-4,
            fstall_window: 5,
            tol_fstall: 1e-4,
            sphere: SphereSubproblemConfig::default(),
            stiefel: StiefelSubproblemConfig::default(),
            momentum: MomentumWeight::default(),
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        self.sphere.validate()?;
        self.stiefel.validate()?;
        if !(self.tol_theta > 0.0) || !(self.tol_fstall > 0.0) || self.fstall_window < 1 {
            return Err(Error::Config(format!(
                "tolerances must be positive and the stall window >= 1 (got tol_theta = {}, tol_fstall = {}, window = {})",
                self.tol_theta, self.tol_fstall, self.fstall_window
            )));
        }
        Ok(())
    }
}

/// One row of the solver trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(x^k)`.
    pub total: f64,
    /// `f(x^k)`.
    pub smooth: f64,
    /// `g(x^k)`.
    pub nonsmooth: f64,
    pub theta: f64,
    /// Step taken from `x^k`; 0 on the final record.
    pub lambda: f64,
    /// Seconds since the solve started.
    pub wall_time: f64,
}

/// Why a solve ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverStatus {
    ThetaConverged,
    FStalled,
    MaxIters,
    LineSearchStalled,
    Failed(String),
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::ThetaConverged => "theta_converged",
            SolverStatus::FStalled => "f_stalled",
            SolverStatus::MaxIters => "max_iters",
            SolverStatus::LineSearchStalled => "line_search_stalled",
            SolverStatus::Failed(_) => "error",
        }
    }

    /// `theta_converged` or `f_stalled`.
    pub fn is_converged(&self) -> bool {
        matches!(self, SolverStatus::ThetaConverged | SolverStatus::FStalled)
    }

    pub fn is_error(&self) -> bool {
        matches!(self, SolverStatus::Failed(_))
    }
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverStatus::Failed(msg) => write!(f, "error: {msg}"),
            other => f.write_str(other.as_str()),
        }
    }
}

/// Trace and outcome of a solve.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub records: Vec<IterationRecord>,
    pub status: SolverStatus,
    pub final_point: ManifoldPoint,
    pub total_time: f64,
}

impl SolverReport {
    /// Number of steps taken (index of the last record).
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.total)
    }

    pub fn final_theta(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.theta)
    }
}

/// Momentum state of the accelerated solver.
#[derive(Clone, Debug)]
pub struct AcceleratedState {
    /// Aggregated gradient `beta_k`, tangent at `beta_base`.
    pub beta: TangentVector,
    pub beta_base: ManifoldPoint,
    /// Last subproblem direction, tangent at `d_base`.
    pub d: TangentVector,
    pub d_base: ManifoldPoint,
    /// `tau_k = 2 / (k + 3)`.
    pub tau: f64,
}

/// `2 / (k + 3)`.
pub fn accelerated_tau(k: usize) -> f64 {
    2.0 / (k as f64 + 3.0)
}

/// Snapshot handed to solver observers once per iteration.
#[derive(Debug)]
pub struct IterationEvent<'a> {
    pub k: usize,
    /// Current iterate `x^k`.
    pub x: &'a ManifoldPoint,
    /// Point at which the gap subproblem was solved (`x^k`, or `y_k` when accelerated).
    pub anchor: &'a ManifoldPoint,
    pub gap: &'a GapResult,
    pub record: &'a IterationRecord,
    /// Momentum state, accelerated solver only.
    pub momentum: Option<&'a AcceleratedState>,
}

/// Stopping rule. Checked in priority order: gap, objective stall, iteration cap.
pub fn check_stop(records: &[IterationRecord], cfg: &SolverConfig) -> Option<SolverStatus> {
    let last = records.last()?;
    if last.theta.abs() <= cfg.tol_theta {
        return Some(SolverStatus::ThetaConverged);
    }
    let k = records.len() - 1;
    if k >= cfg.fstall_window
        && (last.total - records[k - cfg.fstall_window].total).abs() <= cfg.tol_fstall
    {
        return Some(SolverStatus::FStalled);
    }
    if last.k >= cfg.max_iters {
        return Some(SolverStatus::MaxIters);
    }
    None
}

/// Gap subproblem at `x` with an arbitrary linear term `grad` (tangent at `x`).
pub fn gap_with_gradient(
    x: &ManifoldPoint,
    grad: &TangentVector,
    obj: &CompositeObjective,
    cfg: &SolverConfig,
) -> Result<GapResult> {
    let g = |m: &crate::kernels::DenseMatrix| obj.g(m);
    match obj.geometry() {
        Geometry::Sphere(_) => {
            let sc = SphereSubproblemConfig {
                lam: obj.lam(),
                ..cfg.sphere
            };
            sph_gap_subproblem(x, grad, &g, &sc)
        }
        Geometry::Stiefel(_) => {
            let sc = StiefelSubproblemConfig {
                lam: obj.lam(),
                ..cfg.stiefel
            };
            st_gap_subproblem(x, grad, &g, &sc)
        }
    }
}

/// Gap subproblem at `x` for the Riemannian gradient of `f`.
pub fn compute_gap(
    x: &ManifoldPoint,
    obj: &CompositeObjective,
    cfg: &SolverConfig,
) -> Result<GapResult> {
    let grad = obj.riem_grad(x);
    gap_with_gradient(x, &grad, obj, cfg)
}

fn check_start(x0: &ManifoldPoint, obj: &CompositeObjective, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    let geom = obj.geometry();
    if x0.shape() != geom.shape() {
        return Err(Error::Dimension(format!(
            "initial point has shape {:?}, manifold expects {:?}",
            x0.shape(),
            geom.shape()
        )));
    }
    let r = geom.point_residual(x0);
    if !(r <= POINT_TOL) {
        return Err(Error::Contract(format!(
            "initial point is off the manifold (residual {r:e})"
        )));
    }
    Ok(())
}

enum Step {
    Take(f64),
    Stop(SolverStatus),
}

fn choose_step(
    cfg: &SolverConfig,
    k: usize,
    theta: f64,
    dist2: f64,
    f_x: f64,
    f_at: impl FnMut(f64) -> f64,
) -> Step {
    match cfg.strategy {
        StepSizeStrategy::Armijo(params) => match armijo_search(f_at, f_x, theta, &params) {
            Ok(out) if out.stalled => Step::Stop(SolverStatus::LineSearchStalled),
            Ok(out) => Step::Take(out.lambda),
            Err(e) => Step::Stop(SolverStatus::Failed(e.to_string())),
        },
        StepSizeStrategy::Adaptive { lipschitz } => match adaptive_step(theta, lipschitz, dist2) {
            Ok(l) => Step::Take(l),
            Err(e) => Step::Stop(SolverStatus::Failed(e.to_string())),
        },
        StepSizeStrategy::Diminishing => Step::Take(diminishing_step(k)),
    }
}

fn record(k: usize, obj: &CompositeObjective, x: &ManifoldPoint, theta: f64, start: &Instant) -> IterationRecord {
    let ev = obj.eval(x);
    IterationRecord {
        k,
        total: ev.total,
        smooth: ev.smooth,
        nonsmooth: ev.nonsmooth,
        theta,
        lambda: 0.0,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Riemannian generalized conditional gradient method.
pub fn rgcg_solve(
    x0: &ManifoldPoint,
    obj: &CompositeObjective,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    rgcg_solve_observed(x0, obj, cfg, &mut |_| {})
}

/// [`rgcg_solve`] with a callback invoked after every iteration's step-size
/// decision (and once on the final record).
pub fn rgcg_solve_observed(
    x0: &ManifoldPoint,
    obj: &CompositeObjective,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationEvent<'_>),
) -> Result<SolverReport> {
    check_start(x0, obj, cfg)?;
    let geom = obj.geometry();
    let start = Instant::now();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut x = x0.clone();
    let mut k = 0usize;

    let status = loop {
        let gap = match compute_gap(&x, obj, cfg) {
            Ok(g) => g,
            Err(e) => {
                if records.is_empty() {
                    records.push(record(k, obj, &x, 0.0, &start));
                }
                break SolverStatus::Failed(format!("gap subproblem failed at iteration {k}: {e}"));
            }
        };
        let rec = record(k, obj, &x, gap.theta, &start);
        records.push(rec);
        if let Some(s) = check_stop(&records, cfg) {
            observer(&IterationEvent {
                k,
                x: &x,
                anchor: &x,
                gap: &gap,
                record: records.last().unwrap(),
                momentum: None,
            });
            break s;
        }

        let step = choose_step(cfg, k, gap.theta, gap.d.norm_squared(), rec.total, |l| {
            obj.value(&geom.retract(&x, &gap.d.scale(l)))
        });
        let lambda = match step {
            Step::Take(l) => l,
            Step::Stop(s) => break s,
        };
        records.last_mut().unwrap().lambda = lambda;
        observer(&IterationEvent {
            k,
            x: &x,
            anchor: &x,
            gap: &gap,
            record: records.last().unwrap(),
            momentum: None,
        });
        x = geom.renormalize(geom.retract(&x, &gap.d.scale(lambda)));
        k += 1;
    };

    Ok(SolverReport {
        records,
        status,
        final_point: x,
        total_time: start.elapsed().as_secs_f64(),
    })
}

/// Accelerated conditional gradient method with momentum.
///
/// Per iteration, with `tau_k = 2 / (k + 3)`:
///
/// - `y_k = R_{x^k}(tau_k d~)` where `d~` is the previous subproblem direction
///   moved to the tangent space at `x^k`;
/// - `beta_{k+1} = (1 - tau_k) beta_k~ + w grad f(y_k)`, with `beta_k~` the
///   previous aggregate moved to `y_k` and `w` chosen by
///   [`SolverConfig::momentum`];
/// - `p_{k+1}`, `theta` and `d_{k+1}` from the gap subproblem at `y_k` with
///   `beta_{k+1}` as the linear term;
/// - `x^{k+1} = R_{x^k}(lambda_k R_{x^k}^{-1}(p_{k+1}))`, falling back to
///   `R_{y_k}(lambda_k d_{k+1})` when the inverse retraction is undefined.
pub fn accelerated_solve(
    x0: &ManifoldPoint,
    obj: &CompositeObjective,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    accelerated_solve_observed(x0, obj, cfg, &mut |_| {})
}

/// [`accelerated_solve`] with an iteration callback.
pub fn accelerated_solve_observed(
    x0: &ManifoldPoint,
    obj: &CompositeObjective,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationEvent<'_>),
) -> Result<SolverReport> {
    check_start(x0, obj, cfg)?;
    let geom = obj.geometry();
    let start = Instant::now();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut x = x0.clone();
    let mut state = AcceleratedState {
        beta: TangentVector::zeros(x0.shape()),
        beta_base: x0.clone(),
        d: TangentVector::zeros(x0.shape()),
        d_base: x0.clone(),
        tau: accelerated_tau(0),
    };
    let mut prev_lambda = 1.0;
    let mut k = 0usize;

    let status = loop {
        let tau = accelerated_tau(k);
        state.tau = tau;
        let d_here = geom.transport_between(&state.d_base, &x, &state.d);
        let y = geom.renormalize(geom.retract(&x, &d_here.scale(tau)));
        let beta_here = geom.transport_between(&state.beta_base, &y, &state.beta);
        let grad_y = obj.riem_grad(&y);
        let weight = match cfg.momentum {
            MomentumWeight::Tau => tau,
            MomentumWeight::PreviousStep => prev_lambda,
        };
        state.beta = beta_here.lin_comb(1.0 - tau, &grad_y, weight);
        state.beta_base = y.clone();

        let gap = match gap_with_gradient(&y, &state.beta, obj, cfg) {
            Ok(g) => g,
            Err(e) => {
                if records.is_empty() {
                    records.push(record(k, obj, &x, 0.0, &start));
                }
                break SolverStatus::Failed(format!("gap subproblem failed at iteration {k}: {e}"));
            }
        };
        let rec = record(k, obj, &x, gap.theta, &start);
        records.push(rec);
        if let Some(s) = check_stop(&records, cfg) {
            observer(&IterationEvent {
                k,
                x: &x,
                anchor: &y,
                gap: &gap,
                record: records.last().unwrap(),
                momentum: Some(&state),
            });
            break s;
        }

        // direction at x^k towards p_{k+1}, or the y_k-anchored fallback
        let (base, dir) = match geom.inv_retract(&x, &gap.p) {
            Ok(v) => (x.clone(), v),
            Err(e) => {
                debug!("iteration {k}: {e}; stepping from y_k instead");
                (y.clone(), gap.d.clone())
            }
        };
        let f_base = obj.value(&base);
        let step = choose_step(cfg, k, gap.theta, dir.norm_squared(), f_base, |l| {
            obj.value(&geom.retract(&base, &dir.scale(l)))
        });
        let lambda = match step {
            Step::Take(l) => l,
            Step::Stop(s) => break s,
        };
        records.last_mut().unwrap().lambda = lambda;
        observer(&IterationEvent {
            k,
            x: &x,
            anchor: &y,
            gap: &gap,
            record: records.last().unwrap(),
            momentum: Some(&state),
        });
        x = geom.renormalize(geom.retract(&base, &dir.scale(lambda)));
        state.d = gap.d;
        state.d_base = y;
        prev_lambda = lambda;
        k += 1;
    };

    Ok(SolverReport {
        records,
        status,
        final_point: x,
        total_time: start.elapsed().as_secs_f64(),
    })
}
