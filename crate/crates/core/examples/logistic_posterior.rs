//! Posterior sampling for ridge-regularized logistic regression on the bundled
//! 100×5 dataset.

use midpoint_langevin::samplers::{run_chains, Method, Schedule};
use midpoint_langevin::targets::{load_libsvm, logistic_target, GradientTarget};

fn main() -> midpoint_langevin::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_100x5.libsvm");
    let data = load_libsvm(path, false)?;
    let target = logistic_target(data, 1e-2)?;
    println!(
        "L = {:.3}, m = {}, κ = {:.0}",
        target.smoothness(),
        target.strong_convexity(),
        target.condition_number()
    );
    println!("posterior mode: {:.3?}", target.minimizer().unwrap());

    let sched = Schedule::explicit(0.05, 2000, target.smoothness(), 1, 2)?;
    let runs = run_chains(Method::Rmm, &target, &sched, 200, 5, None)?;
    let d = target.dim();
    let mean: Vec<f64> = (0..d)
        .map(|k| runs.iter().map(|r| r.state.x[k]).sum::<f64>() / runs.len() as f64)
        .collect();
    println!("posterior mean estimate: {mean:.3?}");
    Ok(())
}
