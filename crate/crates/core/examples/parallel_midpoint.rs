use midpoint_langevin::samplers::{run_chains, schedule_parallel, Method, Schedule};
use midpoint_langevin::targets::{GradientTarget, QuadraticTarget};

fn main() -> midpoint_langevin::Result<()> {
    let target = QuadraticTarget::with_condition_number(3, 1.0, 20.0)?;
    let sched = schedule_parallel(0.5, target.condition_number(), 0.5, target.smoothness(), 1.0, 3.0)?;
    println!(
        "schedule: h = {:.3}, R = {}, K = {}, N = {}",
        sched.h, sched.midpoints, sched.fixed_point_iters, sched.n_steps
    );

    // A cheaper run with the same step and a handful of nodes and sweeps.
    let (r, k, n) = (4, 3, 3000);
    let run = Schedule::explicit(sched.h, n, target.smoothness(), r, k)?;
    let runs = run_chains(Method::RmmParallel, &target, &run, 1000, 1, None)?;
    let chains = runs.len() as f64;
    for (i, var) in target.variances().iter().enumerate() {
        let v = runs.iter().map(|c| c.state.x[i].powi(2)).sum::<f64>() / chains;
        println!("Var x{} ≈ {v:.3} (target {var:.3})", i + 1);
    }
    println!("gradients per chain: {} = R·K·N = {}", runs[0].grad_evals, r * k * n as usize);
    Ok(())
}
