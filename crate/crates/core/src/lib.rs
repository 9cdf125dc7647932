//! Riemannian generalized conditional gradient (Frank-Wolfe) methods for
//! composite objectives `F = f + lam ||x||_1` on the unit sphere and the
//! Stiefel manifold.
//!
//! - [`kernels`]: small dense linear algebra (SPD inverse square root,
//!   Sylvester solve, soft-thresholding, spectral norm).
//! - [`manifold`], [`sphere`], [`stiefel`]: geometry and the per-manifold gap
//!   subproblems.
//! - [`objectives`]: composite objectives and the sparse-PCA instances.
//! - [`stepsize`]: Armijo, adaptive and diminishing step sizes.
//! - [`solvers`]: the plain and accelerated driving loops.
//! - [`harness`]: seeded experiment batches with CSV output.
//!
//! ```
//! use rgcg::prelude::*;
//!
//! let a = DenseMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.3, 0.0, 0.3, 0.5]);
//! let geometry = Geometry::sphere(3).unwrap();
//! let obj = make_sparse_pca(&a, 0.1, geometry).unwrap();
//! let x0 = geometry
//!     .point(DenseMatrix::from_column_slice(3, 1, &[0.6, 0.0, 0.8]))
//!     .unwrap();
//! let report = rgcg_solve(&x0, &obj, &SolverConfig::default()).unwrap();
//! assert!(report.status.is_converged());
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod kernels;
pub mod manifold;
pub mod objectives;
pub mod solvers;
pub mod sphere;
pub mod stepsize;
pub mod stiefel;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::kernels::DenseMatrix;
    pub use crate::manifold::{Geometry, Manifold, ManifoldPoint, TangentVector};
    pub use crate::objectives::{make_sparse_pca, CompositeObjective, SparsePcaInstance};
    pub use crate::solvers::{
        accelerated_solve, compute_gap, rgcg_solve, GapResult, MomentumWeight, SolverConfig, SolverReport,
        SolverStatus,
    };
    pub use crate::sphere::Sphere;
    pub use crate::stepsize::{ArmijoParams, StepSizeStrategy};
    pub use crate::stiefel::Stiefel;
}
