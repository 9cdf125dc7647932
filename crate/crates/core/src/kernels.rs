//! Small dense numerical primitives used by the Stiefel geometry and the
//! sparse-PCA objectives.
//!
//! All matrices are `nalgebra::DMatrix<f64>`. Vectors on the sphere are stored
//! as `n x 1` matrices so that both geometries share one representation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type DenseMatrix = DMatrix<f64>;

/// Symmetry tolerance for inputs that must be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues at or below this floor make `inv_sqrt_spd` fail.
pub const SPD_EIGEN_FLOOR: f64 = 1e-14;

const POWER_MAX_ITERS: usize = 10_000;

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DenseMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn require_square(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn require_symmetric(m: &DenseMatrix, what: &str) -> Result<()> {
    require_square(m, what)?;
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Contract(format!(
            "{what} is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

/// Returns `(M + M^T) / 2`.
pub fn sym(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

/// Inverse square root `M^{-1/2}` of a symmetric positive definite matrix,
/// computed as `Q diag(l_i^{-1/2}) Q^T` from a symmetric eigendecomposition.
pub fn inv_sqrt_spd(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_symmetric(m, "inv_sqrt_spd input")?;
    let eig = SymmetricEigen::new(sym(m));
    let min = eig.eigenvalues.min();
    if min <= SPD_EIGEN_FLOOR {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {min:e} is below the SPD floor {SPD_EIGEN_FLOOR:e}"
        )));
    }
    let scaled = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(spectral_compose(&eig.eigenvectors, &scaled))
}

/// Square root `M^{1/2}` of a symmetric positive definite matrix.
pub fn sqrt_spd(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_symmetric(m, "sqrt_spd input")?;
    let eig = SymmetricEigen::new(sym(m));
    let min = eig.eigenvalues.min();
    if min <= SPD_EIGEN_FLOOR {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {min:e} is below the SPD floor {SPD_EIGEN_FLOOR:e}"
        )));
    }
    let scaled = eig.eigenvalues.map(f64::sqrt);
    Ok(spectral_compose(&eig.eigenvectors, &scaled))
}

// Q diag(w) Q^T, symmetrized to remove rounding asymmetry.
fn spectral_compose(q: &DenseMatrix, w: &DVector<f64>) -> DenseMatrix {
    let mut qw = q.clone();
    for (j, mut col) in qw.column_iter_mut().enumerate() {
        col *= w[j];
    }
    sym(&(qw * q.transpose()))
}

/// Orthonormal polar factor `M (M^T M)^{-1/2}` of a full-column-rank matrix.
pub fn polar_factor(m: &DenseMatrix) -> Result<DenseMatrix> {
    let gram = m.transpose() * m;
    Ok(m * inv_sqrt_spd(&sym(&gram))?)
}

/// Solves `B1 * X + X * B2 = K` for square `p x p` matrices by forming the
/// `p^2 x p^2` Kronecker system `(I ⊗ B1 + B2^T ⊗ I) vec(X) = vec(K)`.
///
/// Intended for small `p` (tens at most). Fails with
/// [`Error::SylvesterSingular`] when the operator is numerically singular.
pub fn solve_matrix_eq(b1: &DenseMatrix, b2: &DenseMatrix, k: &DenseMatrix) -> Result<DenseMatrix> {
    require_square(b1, "B1")?;
    let p = b1.nrows();
    if b2.shape() != (p, p) || k.shape() != (p, p) {
        return Err(Error::Dimension(format!(
            "Sylvester operands must all be {p}x{p}, got B2 {:?} and K {:?}",
            b2.shape(),
            k.shape()
        )));
    }
    let n = p * p;
    // vec() is column-major, matching nalgebra's storage: vec index of X_ij is i + j*p.
    let mut sys = DenseMatrix::zeros(n, n);
    for j in 0..p {
        for i in 0..p {
            let row = i + j * p;
            for q in 0..p {
                // (B1 X)_ij = sum_q B1_iq X_qj
                sys[(row, q + j * p)] += b1[(i, q)];
                // (X B2)_ij = sum_q X_iq B2_qj
                sys[(row, i + q * p)] += b2[(q, j)];
            }
        }
    }
    let rhs = DVector::from_column_slice(k.as_slice());
    let lu = sys.clone().full_piv_lu();
    let scale = sys.amax().max(f64::MIN_POSITIVE);
    let diag = lu.u().diagonal();
    let min_pivot = diag.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::SylvesterSingular);
    }
    let sol = lu.solve(&rhs).ok_or(Error::SylvesterSingular)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SylvesterSingular);
    }
    Ok(DenseMatrix::from_column_slice(p, p, sol.as_slice()))
}

/// Scalar soft-thresholding operator, the proximal map of `lam * |.|`.
#[inline]
pub fn soft_threshold_scalar(v: f64, lam: f64) -> f64 {
    if v > lam {
        v - lam
    } else if v < -lam {
        v + lam
    } else {
        0.0
    }
}

/// Entrywise soft-thresholding. `lam` must be positive.
pub fn soft_threshold(v: &DenseMatrix, lam: f64) -> Result<DenseMatrix> {
    if !(lam > 0.0) {
        return Err(Error::Contract(format!(
            "soft-threshold level must be positive, got {lam}"
        )));
    }
    Ok(v.map(|x| soft_threshold_scalar(x, lam)))
}

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// Power iteration from a fixed deterministic start vector, stopping when the
/// eigenpair residual `||M v - mu v||` drops below `1e-10 |mu|`. If that does
/// not happen within 10 000 iterations (e.g. `+l` and `-l` both extremal) the
/// full symmetric eigendecomposition is used instead.
pub fn spectral_norm_sym(m: &DenseMatrix) -> Result<f64> {
    require_symmetric(m, "spectral_norm_sym input")?;
    let n = m.nrows();
    if m.amax() == 0.0 {
        return Ok(0.0);
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 1.0 / (i as f64 + 2.0));
    v /= v.norm();
    for _ in 0..POWER_MAX_ITERS {
        let mv = m * &v;
        let mu = v.dot(&mv);
        let resid = (&mv - &v * mu).norm();
        if mu != 0.0 && resid <= 1e-10 * mu.abs() {
            // the start vector could in principle be orthogonal to the dominant
            // eigenvector; the deterministic start makes that non-generic.
            return Ok(mu.abs());
        }
        let nrm = mv.norm();
        if nrm == 0.0 {
            break;
        }
        v = mv / nrm;
    }
    let eig = SymmetricEigen::new(sym(m));
    Ok(eig.eigenvalues.amax())
}
