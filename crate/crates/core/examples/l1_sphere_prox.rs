//! Closed-form minimizer of `(1/(2 lam)) ||y - x||^2 + ||y||_1` over the unit
//! sphere, compared with a brute-force search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgcg::kernels::DenseMatrix;
use rgcg::sphere::solve_l1_sphere;

fn objective(y: &DenseMatrix, x: &DenseMatrix, lam: f64) -> f64 {
    (y - x).norm_squared() / (2.0 * lam) + y.iter().map(|v| v.abs()).sum::<f64>()
}

fn main() -> rgcg::Result<()> {
    let cases: [(&[f64], f64); 3] = [(&[2.0, 0.05, -1.5], 1.0), (&[0.3, -0.2], 0.5), (&[0.4, -0.9, 0.9], 0.2)];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (x, lam) in cases {
        let x = DenseMatrix::from_column_slice(x.len(), 1, x);
        let y = solve_l1_sphere(&x, lam)?;
        let best = (0..50_000)
            .map(|_| {
                let u = DenseMatrix::from_fn(x.nrows(), 1, |_, _| rng.gen_range(-1.0..1.0));
                let n = u.norm();
                objective(&(u / n), &x, lam)
            })
            .fold(f64::INFINITY, f64::min);
        println!(
            "x = {:?}, lam = {lam}: y = {:?}, objective {:.6} (best sampled {:.6})",
            x.as_slice(),
            y.as_slice().iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            objective(&y, &x, lam),
            best
        );
    }
    Ok(())
}
