//! The Stiefel manifold `St(p, n) = { X in R^{n x p} : X^T X = I_p }` with the
//! Euclidean metric, the polar retraction, its inverse, and the vector
//! transport obtained by differentiating the polar retraction.
//!
//! The gap subproblem here follows the generic local-model scheme: an outer
//! loop over tangent directions `d` at `X` with a projected-subgradient inner
//! solve at `Y = R_X(d)` and a sufficient-decrease backtracking step.

use log::debug;

use crate::error::{Error, Result};
use crate::kernels::{inv_sqrt_spd, polar_factor, solve_matrix_eq, sym, DenseMatrix};
use crate::manifold::{Manifold, ManifoldPoint, TangentVector, RENORMALIZE_DRIFT};
use crate::solvers::GapResult;

/// Round-trip residual above which the inverse retraction is rejected.
const INV_RETRACT_ROUNDTRIP_TOL: f64 = 1e-6;

/// `St(p, n)` embedded in `R^{n x p}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stiefel {
    n: usize,
    p: usize,
}

impl Stiefel {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p < 1 || n < 2 || p > n {
            return Err(Error::Dimension(format!(
                "Stiefel manifold needs 1 <= p <= n and n >= 2, got p = {p}, n = {n}"
            )));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

/// How the gradient at `X` enters the inner model at `Y = R_X(d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ModelTransport {
    /// Orthogonal projection onto the tangent space at `Y`.
    #[default]
    Projection,
    /// Differentiated polar retraction, falling back to projection when the
    /// Sylvester solve fails.
    Differentiated,
}

/// Parameters of the Stiefel gap subproblem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiefelSubproblemConfig {
    /// Outer local-model iterations.
    pub max_alg2_iters: usize,
    /// Projected-subgradient steps per inner solve.
    pub inner_subgrad_iters: usize,
    /// Inner step schedule `inner_step0 / sqrt(t + 1)`.
    pub inner_step0: f64,
    /// Sufficient-decrease constant of the outer backtracking.
    pub sigma: f64,
    /// Weight of the L1 term.
    pub lam: f64,
    pub transport: ModelTransport,
}

impl Default for StiefelSubproblemConfig {
    fn default() -> Self {
        Self {
            max_alg2_iters: 2,
            inner_subgrad_iters: 50,
            inner_step0: 0.1,
            sigma: 1e-4,
            lam: 0.1,
            transport: ModelTransport::Projection,
        }
    }
}

impl StiefelSubproblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_alg2_iters < 1
            || self.inner_subgrad_iters < 1
            || !(self.inner_step0 > 0.0)
            || !(self.sigma > 0.0)
            || !(self.lam >= 0.0)
        {
            return Err(Error::Config(format!("invalid Stiefel subproblem config {self:?}")));
        }
        Ok(())
    }
}

/// Smallest step accepted by the outer backtracking loop.
const BACKTRACK_FLOOR: f64 = 1e-8;

/// `V - X sym(X^T V)`.
pub fn st_project(x: &ManifoldPoint, v: &DenseMatrix) -> TangentVector {
    let xc = x.coords();
    let s = sym(&(xc.transpose() * v));
    TangentVector::from_coords(v - xc * s)
}

/// `||X^T eta + eta^T X||_F`.
pub fn tangency_residual(x: &DenseMatrix, eta: &DenseMatrix) -> f64 {
    let a = x.transpose() * eta;
    (&a + a.transpose()).norm()
}

/// Polar retraction `(X + eta)(I + eta^T eta)^{-1/2}`.
pub fn st_polar_retract(x: &ManifoldPoint, eta: &TangentVector) -> ManifoldPoint {
    if eta.is_zero() {
        return x.clone();
    }
    let e = eta.coords();
    let p = e.ncols();
    let m = DenseMatrix::identity(p, p) + e.transpose() * e;
    // I + eta^T eta has all eigenvalues >= 1
    let n = inv_sqrt_spd(&sym(&m)).expect("I + eta^T eta is SPD");
    ManifoldPoint::from_coords_unchecked((x.coords() + e) * n)
}

/// Inverse of the polar retraction.
///
/// `R_X(eta) = Y` forces `X + eta = Y S` with `S = (I + eta^T eta)^{1/2}`;
/// tangency of `eta` then gives the Lyapunov equation
/// `(X^T Y) S + S (Y^T X) = 2 I`, solved for `S`, and `eta = Y S - X`.
pub fn st_inv_polar_retract(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
    let (xc, yc) = (x.coords(), y.coords());
    let p = xc.ncols();
    let b1 = xc.transpose() * yc;
    let b2 = b1.transpose();
    let rhs = DenseMatrix::identity(p, p) * 2.0;
    let s = solve_matrix_eq(&b1, &b2, &rhs).map_err(|e| {
        Error::InverseRetractionUndefined(format!("Lyapunov solve failed: {e}"))
    })?;
    let s = sym(&s);
    if s.clone().cholesky().is_none() {
        return Err(Error::InverseRetractionUndefined(
            "Lyapunov solution is not positive definite".into(),
        ));
    }
    let eta = TangentVector::from_coords(yc * &s - xc);
    let back = st_polar_retract(x, &eta);
    let resid = (back.coords() - yc).norm();
    if !(resid <= INV_RETRACT_ROUNDTRIP_TOL) {
        return Err(Error::InverseRetractionUndefined(format!(
            "round-trip residual {resid:e} too large"
        )));
    }
    Ok(eta)
}

/// Vector transport by differentiated polar retraction:
/// `Y Omega + (I - Y Y^T) xi (Y^T (X + eta))^{-1}` where `Omega` solves
/// `B Omega + Omega B = Y^T xi - xi^T Y` with `B = Y^T (X + eta)`.
pub fn st_diff_transport(
    x: &ManifoldPoint,
    eta: &TangentVector,
    xi: &TangentVector,
) -> Result<TangentVector> {
    if eta.is_zero() {
        return Ok(xi.clone());
    }
    let y = st_polar_retract(x, eta);
    let yc = y.coords();
    let xe = x.coords() + eta.coords();
    let b = sym(&(yc.transpose() * &xe));
    let yt_xi = yc.transpose() * xi.coords();
    let k = &yt_xi - yt_xi.transpose();
    let omega = solve_matrix_eq(&b, &b, &k)
        .map_err(|e| Error::Transport(format!("Sylvester solve failed: {e}")))?;
    let b_inv = b
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Transport("Y^T (X + eta) is singular".into()))?;
    let normal = xi.coords() - yc * &yt_xi;
    Ok(TangentVector::from_coords(yc * omega + normal * b_inv))
}

fn l1_subgradient(v: &DenseMatrix, lam: f64) -> DenseMatrix {
    v.map(|a| {
        if a > 0.0 {
            lam
        } else if a < 0.0 {
            -lam
        } else {
            0.0
        }
    })
}

/// Projected-subgradient solve of `min <G, xi> + lam ||Y + xi||_1` over the
/// tangent space at `Y` (the constraint `xi^T Y + Y^T xi = 0`). Returns the
/// best iterate found.
pub fn st_inner_subgradient(
    y: &ManifoldPoint,
    g: &TangentVector,
    lam: f64,
    iters: usize,
    step0: f64,
) -> TangentVector {
    let yc = y.coords();
    let model = |xi: &DenseMatrix| -> f64 {
        g.coords().dot(xi) + lam * (yc + xi).iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut xi = DenseMatrix::zeros(yc.nrows(), yc.ncols());
    let mut best = xi.clone();
    let mut best_val = model(&xi);
    for t in 0..iters {
        let sub = g.coords() + l1_subgradient(&(yc + &xi), lam);
        let alpha = step0 / ((t + 1) as f64).sqrt();
        xi = st_project(y, &(&xi - sub * alpha)).into_coords();
        let val = model(&xi);
        if val < best_val {
            best_val = val;
            best = xi.clone();
        }
    }
    TangentVector::from_coords(best)
}

/// Result of [`st_gap_subproblem_traced`]: the gap plus the local-model value
/// `l_X(d) = <grad_f, d> + g(R_X(d))` after each accepted outer step.
#[derive(Clone, Debug)]
pub struct StiefelGapTrace {
    pub gap: GapResult,
    pub model_values: Vec<f64>,
    pub transport_fallbacks: usize,
}

/// Stiefel gap subproblem: see [`st_gap_subproblem_traced`].
pub fn st_gap_subproblem(
    x: &ManifoldPoint,
    grad_f: &TangentVector,
    g_eval: &dyn Fn(&DenseMatrix) -> f64,
    cfg: &StiefelSubproblemConfig,
) -> Result<GapResult> {
    Ok(st_gap_subproblem_traced(x, grad_f, g_eval, cfg)?.gap)
}

/// Minimizes `l_X(d) = <grad_f, d> + g(R_X(d))` approximately over `d` in the
/// tangent space at `X`, starting from `d = 0`.
///
/// Each outer step forms the local model at `Y = R_X(d)`, solves it with
/// [`st_inner_subgradient`], maps the inner solution back to `T_X` by
/// projection, and halves the step until the model value drops by at least
/// `sigma * alpha * ||xi||^2`.
pub fn st_gap_subproblem_traced(
    x: &ManifoldPoint,
    grad_f: &TangentVector,
    g_eval: &dyn Fn(&DenseMatrix) -> f64,
    cfg: &StiefelSubproblemConfig,
) -> Result<StiefelGapTrace> {
    cfg.validate()?;
    let shape = x.shape();
    let model = |d: &TangentVector| -> f64 {
        grad_f.coords().dot(d.coords()) + g_eval(st_polar_retract(x, d).coords())
    };
    let mut d = TangentVector::zeros(shape);
    let mut current = model(&d);
    let mut model_values = vec![current];
    let mut transport_fallbacks = 0;

    for outer in 0..cfg.max_alg2_iters {
        let y = st_polar_retract(x, &d);
        let g_model = match cfg.transport {
            ModelTransport::Projection => st_project(&y, grad_f.coords()),
            ModelTransport::Differentiated => match st_diff_transport(x, &d, grad_f) {
                Ok(v) => v,
                Err(e) => {
                    debug!("outer step {outer}: transport failed ({e}), using projection");
                    transport_fallbacks += 1;
                    st_project(&y, grad_f.coords())
                }
            },
        };
        let xi = st_inner_subgradient(&y, &g_model, cfg.lam, cfg.inner_subgrad_iters, cfg.inner_step0);
        let xi_sq = xi.norm_squared();
        if xi_sq == 0.0 {
            break;
        }
        let pulled = st_project(x, xi.coords());
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= BACKTRACK_FLOOR {
            let trial = d.lin_comb(1.0, &pulled, alpha);
            let val = model(&trial);
            if val < current - cfg.sigma * alpha * xi_sq {
                accepted = Some((trial, val));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, val)) => {
                d = trial;
                current = val;
                model_values.push(val);
            }
            None => break,
        }
    }

    let p = st_polar_retract(x, &d);
    let theta = grad_f.coords().dot(d.coords()) + g_eval(p.coords()) - g_eval(x.coords());
    Ok(StiefelGapTrace {
        gap: GapResult::clamped(x, p, theta, d),
        model_values,
        transport_fallbacks,
    })
}

impl Manifold for Stiefel {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    fn point_residual(&self, x: &ManifoldPoint) -> f64 {
        let c = x.coords();
        (c.transpose() * c - DenseMatrix::identity(self.p, self.p)).norm()
    }

    fn tangent_residual(&self, x: &ManifoldPoint, v: &TangentVector) -> f64 {
        tangency_residual(x.coords(), v.coords()) / (1.0 + v.norm())
    }

    fn retract(&self, x: &ManifoldPoint, eta: &TangentVector) -> ManifoldPoint {
        st_polar_retract(x, eta)
    }

    fn inv_retract(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        st_inv_polar_retract(x, y)
    }

    fn transport(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        xi: &TangentVector,
    ) -> Result<TangentVector> {
        st_diff_transport(x, eta, xi)
    }

    /// Projection onto `T_X`, a self-adjoint surrogate for the adjoint of the
    /// differentiated transport.
    fn transport_back(
        &self,
        x: &ManifoldPoint,
        _eta: &TangentVector,
        w: &TangentVector,
    ) -> Result<TangentVector> {
        Ok(st_project(x, w.coords()))
    }

    fn transport_between(
        &self,
        _from: &ManifoldPoint,
        to: &ManifoldPoint,
        v: &TangentVector,
    ) -> TangentVector {
        st_project(to, v.coords())
    }

    fn project_tangent(&self, x: &ManifoldPoint, v: &DenseMatrix) -> TangentVector {
        st_project(x, v)
    }

    fn dist(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        Ok(st_inv_polar_retract(x, y)?.norm())
    }

    fn renormalize(&self, x: ManifoldPoint) -> ManifoldPoint {
        if self.point_residual(&x) > RENORMALIZE_DRIFT {
            match polar_factor(x.coords()) {
                Ok(q) => ManifoldPoint::from_coords_unchecked(q),
                Err(_) => x,
            }
        } else {
            x
        }
    }
}
