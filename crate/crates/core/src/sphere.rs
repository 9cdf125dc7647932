//! The unit sphere `S^{n-1}` with the exponential map as retraction, the
//! logarithm as its inverse, and parallel transport along great circles.
//!
//! Also hosts the sphere-specific gap subproblem: the closed-form minimizer of
//! `(1/(2 lam)) ||y - x||^2 + ||y||_1` over the sphere, iterated on a
//! linearization of the logarithmic term.

use crate::error::{Error, Result};
use crate::kernels::{soft_threshold, DenseMatrix};
use crate::manifold::{
    Manifold, ManifoldPoint, TangentVector, RENORMALIZE_DRIFT,
};
use crate::solvers::GapResult;

/// Below this tangent norm `sph_exp` switches to its series form.
const EXP_SERIES_NORM: f64 = 1e-9;

/// `x^T y` at or below `-1 + ANTIPODAL_MARGIN` is treated as antipodal.
pub const ANTIPODAL_MARGIN: f64 = 1e-8;

/// Below `1 - t = LOG_SERIES_GAP` the log-map scale is evaluated by series.
/// The closed-form derivative loses about `1e-16 / (1 - t)^{3/2}` relative
/// accuracy to cancellation, so the switch sits well above `1e-6`.
const LOG_SERIES_GAP: f64 = 1e-2;

/// `S^{n-1}` embedded in `R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sphere {
    n: usize,
}

impl Sphere {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("sphere needs n >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Parameters of the sphere gap subproblem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereSubproblemConfig {
    /// Cap on linearize-and-solve rounds.
    pub max_outer_iters: usize,
    /// Fixed-point tolerance on `||y_{k+1} - y_k||`.
    pub tol: f64,
    /// Weight of the L1 term.
    pub lam: f64,
}

impl Default for SphereSubproblemConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 10,
            tol: 1e-10,
            lam: 0.1,
        }
    }
}

impl SphereSubproblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters < 1 || !(self.tol > 0.0) || !(self.lam >= 0.0) {
            return Err(Error::Config(format!("invalid sphere subproblem config {self:?}")));
        }
        Ok(())
    }
}

fn dot(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.dot(b)
}

/// `a(t) = arccos(t) / sqrt(1 - t^2)`, the log-map scale, together with its
/// derivative `a'(t) = (t a(t) - 1) / (1 - t^2)`.
pub fn log_scale(t: f64) -> (f64, f64) {
    let s = 1.0 - t;
    if s < LOG_SERIES_GAP {
        // a = 1 + s/3 + 2s^2/15 + 2s^3/35 + 8s^4/315 + 8s^5/693 + 16s^6/3003 + O(s^7)
        let a = 1.0
            + s * (1.0 / 3.0
                + s * (2.0 / 15.0
                    + s * (2.0 / 35.0 + s * (8.0 / 315.0 + s * (8.0 / 693.0 + s * (16.0 / 3003.0))))));
        let da = -(1.0 / 3.0
            + s * (4.0 / 15.0
                + s * (6.0 / 35.0 + s * (32.0 / 315.0 + s * (40.0 / 693.0 + s * (96.0 / 3003.0))))));
        (a, da)
    } else {
        let w = s * (1.0 + t);
        let sin = w.sqrt();
        let a = sin.atan2(t) / sin;
        (a, (t * a - 1.0) / w)
    }
}

/// Exponential map `x cos||eta|| + eta sin||eta|| / ||eta||`.
pub fn sph_exp(x: &ManifoldPoint, eta: &TangentVector) -> ManifoldPoint {
    if eta.is_zero() {
        return x.clone();
    }
    let nrm = eta.norm();
    let xc = x.coords();
    let y = if nrm <= EXP_SERIES_NORM {
        xc * (1.0 - 0.5 * nrm * nrm) + eta.coords()
    } else {
        xc * nrm.cos() + eta.coords() * (nrm.sin() / nrm)
    };
    let yn = y.norm();
    ManifoldPoint::from_coords_unchecked(y / yn)
}

/// Logarithm map, the inverse of [`sph_exp`] away from the antipode.
///
/// The angle is computed as `atan2(||(I - x x^T) y||, x^T y)`, which equals
/// `arccos(x^T y)` but stays accurate for nearby points.
pub fn sph_log(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
    let xc = x.coords();
    let t = dot(xc, y.coords());
    if t <= -1.0 + ANTIPODAL_MARGIN {
        return Err(Error::InverseRetractionUndefined(format!(
            "points are (nearly) antipodal, x^T y = {t}"
        )));
    }
    let v = y.coords() - xc * t;
    let vn = v.norm();
    if vn == 0.0 {
        return Ok(TangentVector::zeros(x.shape()));
    }
    let angle = vn.atan2(t);
    Ok(TangentVector::from_coords(v * (angle / vn)))
}

/// Parallel transport of `xi` along the geodesic `t -> exp_x(t eta)` to `exp_x(eta)`.
pub fn sph_parallel_transport(
    x: &ManifoldPoint,
    eta: &TangentVector,
    xi: &TangentVector,
) -> TangentVector {
    let nrm = eta.norm();
    if nrm <= EXP_SERIES_NORM {
        return xi.clone();
    }
    let ex = dot(eta.coords(), xi.coords());
    let out = xi.coords() - x.coords() * (nrm.sin() * ex / nrm)
        + eta.coords() * ((nrm.cos() - 1.0) * ex / (nrm * nrm));
    TangentVector::from_coords(out)
}

// Ambient transpose of the parallel-transport map applied to w.
fn sph_parallel_transport_adjoint(
    x: &ManifoldPoint,
    eta: &TangentVector,
    w: &TangentVector,
) -> DenseMatrix {
    let nrm = eta.norm();
    if nrm <= EXP_SERIES_NORM {
        return w.coords().clone();
    }
    let xw = dot(x.coords(), w.coords());
    let ew = dot(eta.coords(), w.coords());
    w.coords()
        + eta.coords() * (-nrm.sin() * xw / nrm + (nrm.cos() - 1.0) * ew / (nrm * nrm))
}

/// Global minimizer of `(1/(2 lam)) ||y - x||^2 + ||y||_1` over the unit sphere
/// in the ambient space of `x` (any shape; the norm is Frobenius).
///
/// With `z = soft_threshold(x, lam)` the minimizer is `z / ||z||` if `z != 0`,
/// and otherwise `sign(x_i) e_i` for the first index `i` of largest `|x_i|`.
pub fn solve_l1_sphere(x: &DenseMatrix, lam: f64) -> Result<DenseMatrix> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("solve_l1_sphere input is not finite".into()));
    }
    let z = soft_threshold(x, lam)?;
    let zn = z.norm();
    if zn > 0.0 {
        return Ok(z / zn);
    }
    let (mut imax, mut best) = (0usize, -1.0_f64);
    // column-major linear index; nalgebra's iter() walks the same order
    for (i, v) in x.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            imax = i;
        }
    }
    let mut out = DenseMatrix::zeros(x.nrows(), x.ncols());
    out[imax] = if x[imax] < 0.0 { -1.0 } else { 1.0 };
    Ok(out)
}

/// Gradient of `h(y) = (1/lam) <g, log_x(y)>` in the ambient space, for `g`
/// tangent at `x`. Uses `h(y) = (1/lam) a(x^T y) g^T y`.
pub fn sphere_model_gradient(
    x: &ManifoldPoint,
    grad_f: &TangentVector,
    y: &DenseMatrix,
    lam: f64,
) -> DenseMatrix {
    let t = dot(x.coords(), y);
    let (a, da) = log_scale(t);
    let gy = dot(grad_f.coords(), y);
    (x.coords() * (da * gy) + grad_f.coords() * a) / lam
}

// Unscaled version of sphere_model_gradient (lam = 1).
fn log_term_gradient(x: &ManifoldPoint, g: &TangentVector, y: &DenseMatrix) -> DenseMatrix {
    let t = dot(x.coords(), y);
    let (a, da) = log_scale(t);
    let gy = dot(g.coords(), y);
    x.coords() * (da * gy) + g.coords() * a
}

/// Sphere gap subproblem `min_y <grad_f, log_x(y)> + g(y) - g(x)`.
///
/// Starting from `y = x`, each round linearizes the log term at the current
/// `y` and solves the resulting L1-regularized problem in closed form with
/// [`solve_l1_sphere`]. Candidates too close to the antipode of `x` are
/// rejected and the previous iterate is kept.
pub fn sph_gap_subproblem(
    x: &ManifoldPoint,
    grad_f: &TangentVector,
    g_eval: &dyn Fn(&DenseMatrix) -> f64,
    cfg: &SphereSubproblemConfig,
) -> Result<GapResult> {
    cfg.validate()?;
    let mut y = x.coords().clone();
    if !grad_f.is_zero() || cfg.lam > 0.0 {
        for _ in 0..cfg.max_outer_iters {
            let gh = log_term_gradient(x, grad_f, &y);
            let cand = if cfg.lam > 0.0 {
                // argmin <gh, y> + lam ||y||_1 == solve_l1_sphere(-gh / lam, 1)
                solve_l1_sphere(&(-gh / cfg.lam), 1.0)?
            } else {
                let gn = gh.norm();
                if gn == 0.0 {
                    break;
                }
                -gh / gn
            };
            if dot(x.coords(), &cand) <= -1.0 + ANTIPODAL_MARGIN {
                break;
            }
            let step = (&cand - &y).norm();
            y = cand;
            if step <= cfg.tol {
                break;
            }
        }
    }
    let p = ManifoldPoint::from_coords_unchecked(y);
    let d = sph_log(x, &p)?;
    let theta = dot(grad_f.coords(), d.coords()) + g_eval(p.coords()) - g_eval(x.coords());
    Ok(GapResult::clamped(x, p, theta, d))
}

impl Manifold for Sphere {
    fn shape(&self) -> (usize, usize) {
        (self.n, 1)
    }

    fn point_residual(&self, x: &ManifoldPoint) -> f64 {
        (x.coords().norm() - 1.0).abs()
    }

    fn tangent_residual(&self, x: &ManifoldPoint, v: &TangentVector) -> f64 {
        dot(x.coords(), v.coords()).abs() / (1.0 + v.norm())
    }

    fn retract(&self, x: &ManifoldPoint, eta: &TangentVector) -> ManifoldPoint {
        sph_exp(x, eta)
    }

    fn inv_retract(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        sph_log(x, y)
    }

    fn transport(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        xi: &TangentVector,
    ) -> Result<TangentVector> {
        Ok(sph_parallel_transport(x, eta, xi))
    }

    fn transport_back(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        w: &TangentVector,
    ) -> Result<TangentVector> {
        let back = sph_parallel_transport_adjoint(x, eta, w);
        Ok(self.project_tangent(x, &back))
    }

    fn transport_between(
        &self,
        from: &ManifoldPoint,
        to: &ManifoldPoint,
        v: &TangentVector,
    ) -> TangentVector {
        match sph_log(from, to) {
            Ok(eta) => {
                let moved = sph_parallel_transport(from, &eta, v);
                self.project_tangent(to, moved.coords())
            }
            Err(_) => self.project_tangent(to, v.coords()),
        }
    }

    fn project_tangent(&self, x: &ManifoldPoint, v: &DenseMatrix) -> TangentVector {
        let xc = x.coords();
        TangentVector::from_coords(v - xc * dot(xc, v))
    }

    fn dist(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        let t = dot(x.coords(), y.coords()).clamp(-1.0, 1.0);
        let s = (y.coords() - x.coords() * t).norm();
        Ok(s.atan2(t))
    }

    fn renormalize(&self, x: ManifoldPoint) -> ManifoldPoint {
        if self.point_residual(&x) > RENORMALIZE_DRIFT {
            let c = x.into_coords();
            let n = c.norm();
            ManifoldPoint::from_coords_unchecked(c / n)
        } else {
            x
        }
    }
}
