//! Composite objectives `F = f + g` with smooth `f` and `g = lam ||x||_1`.
//!
//! The sparse-PCA instances use `f(X) = -trace(X^T G X)` with `G = A^T A`
//! precomputed, on either the sphere (`p = 1`) or the Stiefel manifold.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{asymmetry, spectral_norm_sym, DenseMatrix};
use crate::manifold::{Geometry, Manifold, ManifoldPoint, TangentVector};

/// The smooth part `f` of a composite objective, evaluated in ambient coordinates.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: &DenseMatrix) -> f64;
    fn euclidean_gradient(&self, x: &DenseMatrix) -> DenseMatrix;
}

/// `-trace(X^T G X)` for a symmetric `G`.
#[derive(Clone, Debug)]
pub struct NegativeQuadratic {
    gram: DenseMatrix,
}

impl NegativeQuadratic {
    pub fn new(gram: DenseMatrix) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::Dimension("quadratic form must be square".into()));
        }
        Ok(Self { gram })
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }
}

impl SmoothFunction for NegativeQuadratic {
    fn value(&self, x: &DenseMatrix) -> f64 {
        -x.dot(&(&self.gram * x))
    }

    fn euclidean_gradient(&self, x: &DenseMatrix) -> DenseMatrix {
        &self.gram * x * -2.0
    }
}

/// Value of `F = f + g` together with its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// `F = f + g`.
    pub total: f64,
    /// Smooth part `f`.
    pub smooth: f64,
    /// Nonsmooth part `g`.
    pub nonsmooth: f64,
}

/// Composite objective `F = f + lam ||.||_1` on a given geometry.
#[derive(Clone)]
pub struct CompositeObjective {
    geometry: Geometry,
    smooth: Arc<dyn SmoothFunction>,
    lam: f64,
    lipschitz: f64,
}

impl fmt::Debug for CompositeObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeObjective")
            .field("geometry", &self.geometry)
            .field("lam", &self.lam)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl CompositeObjective {
    /// Builds an objective from any smooth part. `lipschitz` is the
    /// smoothness-constant estimate used by the adaptive step size.
    pub fn new(
        geometry: Geometry,
        smooth: Arc<dyn SmoothFunction>,
        lam: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lam >= 0.0) || !lam.is_finite() {
            return Err(Error::Config(format!("lambda must be >= 0, got {lam}")));
        }
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(Error::Config(format!(
                "smoothness estimate must be positive, got {lipschitz}"
            )));
        }
        Ok(Self {
            geometry,
            smooth,
            lam,
            lipschitz,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn lam(&self) -> f64 {
        self.lam
    }

    /// Smoothness-constant estimate `L`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn f(&self, x: &ManifoldPoint) -> f64 {
        self.smooth.value(x.coords())
    }

    pub fn euclidean_gradient(&self, x: &ManifoldPoint) -> DenseMatrix {
        self.smooth.euclidean_gradient(x.coords())
    }

    /// `lam * sum |x_ij|`.
    pub fn g(&self, x: &DenseMatrix) -> f64 {
        l1_penalty(x, self.lam)
    }

    /// Riemannian gradient: tangent projection of the Euclidean gradient.
    pub fn riem_grad(&self, x: &ManifoldPoint) -> TangentVector {
        self.geometry
            .project_tangent(x, &self.smooth.euclidean_gradient(x.coords()))
    }

    pub fn eval(&self, x: &ManifoldPoint) -> Evaluation {
        let smooth = self.f(x);
        let nonsmooth = self.g(x.coords());
        Evaluation {
            total: smooth + nonsmooth,
            smooth,
            nonsmooth,
        }
    }

    /// `F(x)` alone.
    pub fn value(&self, x: &ManifoldPoint) -> f64 {
        self.eval(x).total
    }
}

/// `lam * sum |v_ij|`.
pub fn l1_penalty(v: &DenseMatrix, lam: f64) -> f64 {
    lam * v.iter().map(|a| a.abs()).sum::<f64>()
}

/// Data behind a sparse-PCA objective.
#[derive(Clone, Debug)]
pub struct SparsePcaInstance {
    pub a: DenseMatrix,
    /// `A^T A`.
    pub gram: DenseMatrix,
    pub lam: f64,
    /// Number of components (1 on the sphere).
    pub p: usize,
}

impl SparsePcaInstance {
    pub fn new(a: DenseMatrix, lam: f64, p: usize) -> Result<Self> {
        let gram = a.transpose() * &a;
        let scale = gram.amax().max(1.0);
        if asymmetry(&gram) > 1e-10 * scale {
            return Err(Error::Contract("A^T A is not symmetric".into()));
        }
        if p < 1 || p > a.ncols() {
            return Err(Error::Dimension(format!(
                "need 1 <= p <= n = {}, got p = {p}",
                a.ncols()
            )));
        }
        Ok(Self { a, gram, lam, p })
    }

    pub fn n(&self) -> usize {
        self.gram.nrows()
    }

    /// Builds the composite objective on `geometry`.
    pub fn objective(&self, geometry: Geometry) -> Result<CompositeObjective> {
        let (n, p) = (geometry.n(), geometry.p());
        if n != self.n() || p != self.p {
            return Err(Error::Dimension(format!(
                "instance is n = {}, p = {} but geometry is n = {n}, p = {p}",
                self.n(),
                self.p
            )));
        }
        let lipschitz = 2.0 * spectral_norm_sym(&self.gram)?;
        let smooth = Arc::new(NegativeQuadratic::new(self.gram.clone())?);
        // an all-zero A gives f = 0; any positive constant is a valid bound
        CompositeObjective::new(geometry, smooth, self.lam, lipschitz.max(f64::MIN_POSITIVE))
    }
}

/// Sparse-PCA objective `-trace(X^T A^T A X) + lam ||X||_1` on `geometry`.
///
/// `A` must have `n` columns, where `n` is the ambient dimension of `geometry`.
pub fn make_sparse_pca(a: &DenseMatrix, lam: f64, geometry: Geometry) -> Result<CompositeObjective> {
    if a.ncols() != geometry.n() {
        return Err(Error::Dimension(format!(
            "A has {} columns but the manifold lives in R^{}",
            a.ncols(),
            geometry.n()
        )));
    }
    if !(lam >= 0.0) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lam}")));
    }
    SparsePcaInstance::new(a.clone(), lam, geometry.p())?.objective(geometry)
}
