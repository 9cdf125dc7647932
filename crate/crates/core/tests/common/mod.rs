#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use rgcg::kernels::{polar_factor, DenseMatrix};
use rgcg::manifold::{Geometry, Manifold, ManifoldPoint, TangentVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_point(rng: &mut impl Rng, geom: &Geometry) -> ManifoldPoint {
    let (n, p) = geom.shape();
    let g = gaussian(rng, n, p);
    let coords = match geom {
        Geometry::Sphere(_) => {
            let nrm = g.norm();
            g / nrm
        }
        Geometry::Stiefel(_) => polar_factor(&g).unwrap(),
    };
    ManifoldPoint::from_coords_unchecked(coords)
}

/// Random tangent vector at `x` with Frobenius norm `scale`.
pub fn random_tangent(rng: &mut impl Rng, geom: &Geometry, x: &ManifoldPoint, scale: f64) -> TangentVector {
    let (n, p) = geom.shape();
    let v = geom.project_tangent(x, &gaussian(rng, n, p));
    let nrm = v.norm();
    if nrm == 0.0 {
        return v;
    }
    v.scale(scale / nrm)
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let g = gaussian(rng, n, 1);
    let nrm = g.norm();
    g / nrm
}

pub fn l1(v: &DenseMatrix) -> f64 {
    v.iter().map(|a| a.abs()).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
