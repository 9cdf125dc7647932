//! Sparse PCA on user data loaded from a headerless CSV file.

use std::fs;

use rgcg::harness::{read_matrix_csv, scale_columns, Standardization};
use rgcg::prelude::*;

fn main() -> Result<()> {
    let path = std::env::temp_dir().join("rgcg-custom-matrix.csv");
    // six observations of four variables; the first two are strongly correlated
    fs::write(
        &path,
        "2.1,1.9,0.3,-0.2\n-1.0,-1.2,0.1,0.4\n0.5,0.6,-0.8,0.0\n1.7,1.5,0.2,0.3\n-2.2,-2.0,0.5,-0.1\n-0.9,-0.8,-0.4,0.2\n",
    )?;
    let mut a = read_matrix_csv(&path)?;
    scale_columns(&mut a, Standardization::UnitVariance);

    let geometry = Geometry::sphere(a.ncols())?;
    let obj = SparsePcaInstance::new(a, 0.5, 1)?.objective(geometry)?;
    let x0 = geometry.point(DenseMatrix::from_element(4, 1, 0.5))?;
    let report = rgcg_solve(&x0, &obj, &SolverConfig::default())?;
    let loadings: Vec<f64> = report.final_point.coords().iter().map(|v| (v * 1e3).round() / 1e3).collect();
    println!("{} after {} iterations", report.status, report.iterations());
    println!("loadings: {loadings:?}");
    Ok(())
}
