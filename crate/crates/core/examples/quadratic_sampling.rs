//! Sample a badly conditioned Gaussian with the accuracy-driven schedule and
//! compare the empirical spread with the target.

use midpoint_langevin::samplers::{run_chains, schedule, Method};
use midpoint_langevin::targets::{GradientTarget, QuadraticTarget};

fn main() -> midpoint_langevin::Result<()> {
    let target = QuadraticTarget::with_condition_number(4, 1.0, 50.0)?;
    let sched = schedule(0.25, target.condition_number(), 0.5, target.smoothness())?;
    println!("h = {:.4}, N = {}", sched.h, sched.n_steps);

    let runs = run_chains(Method::Rmm, &target, &sched, 2000, 7, None)?;
    let n = runs.len() as f64;
    for (i, var) in target.variances().iter().enumerate() {
        let m = runs.iter().map(|r| r.state.x[i]).sum::<f64>() / n;
        let v = runs.iter().map(|r| (r.state.x[i] - m).powi(2)).sum::<f64>() / (n - 1.0);
        println!("x{}: variance {v:.4} (target {var:.4})", i + 1);
    }
    println!("gradient evaluations per chain: {}", runs[0].grad_evals);
    Ok(())
}
