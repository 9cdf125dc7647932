//! The manifold contract shared by the sphere and Stiefel geometries.
//!
//! Points and tangent vectors are stored in ambient coordinates: an `n x 1`
//! matrix on the sphere `S^{n-1}` and an `n x p` matrix on `St(p, n)`. Both
//! geometries use the metric inherited from the ambient Euclidean space, so
//! inner products are Frobenius products of the coordinate matrices.
//!
//! A [`TangentVector`] does not carry its base point; the base is implied by
//! the call site (every operation takes the base point explicitly).

use std::ops::{Add, Sub};

use crate::error::{Error, Result};
use crate::kernels::DenseMatrix;
use crate::sphere::Sphere;
use crate::stiefel::Stiefel;

/// Tolerance on the point invariant (unit norm / orthonormal columns).
pub const POINT_TOL: f64 = 1e-10;

/// Tolerance on the relative tangency residual.
pub const TANGENT_TOL: f64 = 1e-9;

/// Drift above which solvers pull an iterate back onto the manifold.
pub const RENORMALIZE_DRIFT: f64 = 1e-12;

/// A point on a manifold, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint {
    coords: DenseMatrix,
}

impl ManifoldPoint {
    /// Wraps ambient coordinates without checking the manifold invariant.
    /// Use [`Manifold::point`] for a validated constructor.
    pub fn from_coords_unchecked(coords: DenseMatrix) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &DenseMatrix {
        &self.coords
    }

    pub fn into_coords(self) -> DenseMatrix {
        self.coords
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coords.shape()
    }
}

/// A tangent vector in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    coords: DenseMatrix,
}

impl TangentVector {
    pub fn from_coords(coords: DenseMatrix) -> Self {
        Self { coords }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self {
            coords: DenseMatrix::zeros(shape.0, shape.1),
        }
    }

    pub fn coords(&self) -> &DenseMatrix {
        &self.coords
    }

    pub fn into_coords(self) -> DenseMatrix {
        self.coords
    }

    pub fn shape(&self) -> (usize, usize) {
        self.coords.shape()
    }

    /// Frobenius norm, which is the Riemannian norm for both geometries.
    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.coords.norm_squared()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|v| *v == 0.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            coords: &self.coords * a,
        }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            coords: &self.coords * a + &other.coords * b,
        }
    }
}

impl Add for &TangentVector {
    type Output = TangentVector;
    fn add(self, rhs: Self) -> TangentVector {
        TangentVector::from_coords(&self.coords + &rhs.coords)
    }
}

impl Sub for &TangentVector {
    type Output = TangentVector;
    fn sub(self, rhs: Self) -> TangentVector {
        TangentVector::from_coords(&self.coords - &rhs.coords)
    }
}

/// Riemannian geometry operations consumed by the solvers.
pub trait Manifold: Send + Sync {
    /// Ambient shape of points and tangent vectors.
    fn shape(&self) -> (usize, usize);

    /// Violation of the point invariant (`| ||x|| - 1 |` or `||X^T X - I||_F`).
    fn point_residual(&self, x: &ManifoldPoint) -> f64;

    /// Tangency residual of `v` at `x`, divided by `1 + ||v||`.
    fn tangent_residual(&self, x: &ManifoldPoint, v: &TangentVector) -> f64;

    fn inner(&self, _x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> f64 {
        u.coords().dot(v.coords())
    }

    fn norm(&self, _x: &ManifoldPoint, u: &TangentVector) -> f64 {
        u.norm()
    }

    /// Retraction `R_x(eta)`. `R_x(0) = x` exactly.
    fn retract(&self, x: &ManifoldPoint, eta: &TangentVector) -> ManifoldPoint;

    /// Inverse retraction `R_x^{-1}(y)`.
    fn inv_retract(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector>;

    /// Vector transport of `xi` along `eta`, landing in the tangent space at `R_x(eta)`.
    fn transport(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        xi: &TangentVector,
    ) -> Result<TangentVector>;

    /// Adjoint of [`Manifold::transport`]: maps `w` at `R_x(eta)` back to `x` so that
    /// `<transport_back(x, eta, w), z>_x = <w, transport(x, eta, z)>_y`.
    fn transport_back(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        w: &TangentVector,
    ) -> Result<TangentVector>;

    /// Moves a tangent vector at `from` to the tangent space at `to`.
    /// Used by the accelerated solver; never fails.
    fn transport_between(
        &self,
        from: &ManifoldPoint,
        to: &ManifoldPoint,
        v: &TangentVector,
    ) -> TangentVector;

    /// Orthogonal projection of an ambient array onto the tangent space at `x`.
    fn project_tangent(&self, x: &ManifoldPoint, v: &DenseMatrix) -> TangentVector;

    fn dist(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64>;

    /// Pulls `x` back onto the manifold when its drift exceeds [`RENORMALIZE_DRIFT`].
    fn renormalize(&self, x: ManifoldPoint) -> ManifoldPoint;

    /// Validated point constructor.
    fn point(&self, coords: DenseMatrix) -> Result<ManifoldPoint> {
        if coords.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "expected point of shape {:?}, got {:?}",
                self.shape(),
                coords.shape()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("point has non-finite coordinates".into()));
        }
        let x = ManifoldPoint::from_coords_unchecked(coords);
        let r = self.point_residual(&x);
        if r > POINT_TOL {
            return Err(Error::Contract(format!(
                "point violates the manifold invariant (residual {r:e})"
            )));
        }
        Ok(x)
    }

    /// Validated tangent constructor.
    fn tangent(&self, x: &ManifoldPoint, coords: DenseMatrix) -> Result<TangentVector> {
        if coords.shape() != self.shape() {
            return Err(Error::Dimension(format!(
                "expected tangent of shape {:?}, got {:?}",
                self.shape(),
                coords.shape()
            )));
        }
        let v = TangentVector::from_coords(coords);
        let r = self.tangent_residual(x, &v);
        if r > TANGENT_TOL {
            return Err(Error::Contract(format!(
                "vector is not tangent (relative residual {r:e})"
            )));
        }
        Ok(v)
    }
}

/// The two geometries supported by the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Sphere(Sphere),
    Stiefel(Stiefel),
}

impl Geometry {
    pub fn sphere(n: usize) -> Result<Self> {
        Ok(Geometry::Sphere(Sphere::new(n)?))
    }

    pub fn stiefel(n: usize, p: usize) -> Result<Self> {
        Ok(Geometry::Stiefel(Stiefel::new(n, p)?))
    }

    /// Ambient dimension `n`.
    pub fn n(&self) -> usize {
        self.shape().0
    }

    /// Number of columns `p` (1 on the sphere).
    pub fn p(&self) -> usize {
        self.shape().1
    }

    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Sphere(_) => "sphere",
            Geometry::Stiefel(_) => "stiefel",
        }
    }

    fn inner_manifold(&self) -> &dyn Manifold {
        match self {
            Geometry::Sphere(m) => m,
            Geometry::Stiefel(m) => m,
        }
    }
}

impl Manifold for Geometry {
    fn shape(&self) -> (usize, usize) {
        self.inner_manifold().shape()
    }
    fn point_residual(&self, x: &ManifoldPoint) -> f64 {
        self.inner_manifold().point_residual(x)
    }
    fn tangent_residual(&self, x: &ManifoldPoint, v: &TangentVector) -> f64 {
        self.inner_manifold().tangent_residual(x, v)
    }
    fn retract(&self, x: &ManifoldPoint, eta: &TangentVector) -> ManifoldPoint {
        self.inner_manifold().retract(x, eta)
    }
    fn inv_retract(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector> {
        self.inner_manifold().inv_retract(x, y)
    }
    fn transport(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        xi: &TangentVector,
    ) -> Result<TangentVector> {
        self.inner_manifold().transport(x, eta, xi)
    }
    fn transport_back(
        &self,
        x: &ManifoldPoint,
        eta: &TangentVector,
        w: &TangentVector,
    ) -> Result<TangentVector> {
        self.inner_manifold().transport_back(x, eta, w)
    }
    fn transport_between(
        &self,
        from: &ManifoldPoint,
        to: &ManifoldPoint,
        v: &TangentVector,
    ) -> TangentVector {
        self.inner_manifold().transport_between(from, to, v)
    }
    fn project_tangent(&self, x: &ManifoldPoint, v: &DenseMatrix) -> TangentVector {
        self.inner_manifold().project_tangent(x, v)
    }
    fn dist(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
        self.inner_manifold().dist(x, y)
    }
    fn renormalize(&self, x: ManifoldPoint) -> ManifoldPoint {
        self.inner_manifold().renormalize(x)
    }
}
