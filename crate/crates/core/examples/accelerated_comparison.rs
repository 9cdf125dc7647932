//! Plain against accelerated conditional gradient over a fixed iteration
//! budget, with stopping rules disabled.

use rgcg::harness::{generate_instance, ManifoldSpec, StrategyKind};
use rgcg::prelude::*;

fn main() -> Result<()> {
    let spec = ManifoldSpec::Sphere { n: 100 };
    let (instance, starts) = generate_instance(0, spec, 0.1)?;
    let obj = instance.objective(spec.geometry()?)?;
    let x0 = starts.point(0);

    println!("{:<12} {:>14} {:>14}", "strategy", "plain F", "accelerated F");
    for kind in StrategyKind::ALL {
        let mut cfg = SolverConfig::new(kind.resolve(&obj, ArmijoParams::default())).with_max_iters(50);
        cfg.tol_theta = 1e-300;
        cfg.tol_fstall = 1e-300;
        cfg.sphere.max_outer_iters = 1;
        let plain = rgcg_solve(&x0, &obj, &cfg)?;
        let fast = accelerated_solve(&x0, &obj, &cfg)?;
        println!("{:<12} {:>14.6} {:>14.6}", kind.name(), plain.final_value(), fast.final_value());
    }
    Ok(())
}
