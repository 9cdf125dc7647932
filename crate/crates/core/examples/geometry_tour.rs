//! Retractions, inverse retractions and transports on both manifolds.

use rgcg::prelude::*;
use rgcg::sphere::{sph_exp, sph_log, sph_parallel_transport};
use rgcg::stiefel::{st_inv_polar_retract, st_polar_retract};

fn col(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v)
}

fn main() -> Result<()> {
    let sphere = Geometry::sphere(3)?;
    let x = sphere.point(col(&[1.0, 0.0, 0.0]))?;
    let eta = sphere.tangent(&x, col(&[0.0, std::f64::consts::FRAC_PI_2, 0.0]))?;

    let y = sph_exp(&x, &eta);
    println!("exp_x(pi/2 e2)        = {:?}", y.coords().as_slice());
    println!("log_x(y)              = {:?}", sph_log(&x, &y)?.coords().as_slice());

    let xi = sphere.tangent(&x, col(&[0.0, 1.0, 0.0]))?;
    let moved = sph_parallel_transport(&x, &eta, &xi);
    println!("transport of e2       = {:?}", moved.coords().as_slice());

    let antipode = sphere.point(col(&[-1.0, 0.0, 0.0]))?;
    match sph_log(&x, &antipode) {
        Ok(_) => println!("unexpected log at the antipode"),
        Err(e) => println!("log at the antipode   : {e}"),
    }

    let stiefel = Geometry::stiefel(4, 2)?;
    let q = stiefel.point(DenseMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]))?;
    let step = stiefel.project_tangent(&q, &DenseMatrix::from_row_slice(4, 2, &[0.1, 0.3, -0.2, 0.0, 0.5, 0.2, 0.0, -0.4]));
    let r = st_polar_retract(&q, &step);
    let back = st_inv_polar_retract(&q, &r)?;
    println!("polar retraction drift  = {:.2e}", stiefel.point_residual(&r));
    println!("inverse polar error     = {:.2e}", (back.coords() - step.coords()).norm());

    let w = stiefel.project_tangent(&q, &DenseMatrix::from_element(4, 2, 1.0));
    let wt = stiefel.transport(&q, &step, &w)?;
    println!("transported tangency    = {:.2e}", stiefel.tangent_residual(&r, &wt));
    Ok(())
}
