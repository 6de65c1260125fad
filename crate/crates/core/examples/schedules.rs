use midpoint_langevin::samplers::{schedule, schedule_parallel};

fn main() -> midpoint_langevin::Result<()> {
    println!("{:>8} {:>6} {:>9} {:>9} | {:>5} {:>3} {:>7}", "kappa", "eps", "h", "N", "R", "K", "N_par");
    for kappa in [10.0, 1e3, 1e6] {
        for eps in [0.5, 0.1, 0.01] {
            let s = schedule(eps, kappa, 0.5, 1.0)?;
            let p = schedule_parallel(eps, kappa, 0.5, 1.0, 1.0, 3.0)?;
            println!(
                "{kappa:>8.0e} {eps:>6} {:>9.2e} {:>9} | {:>5} {:>3} {:>7}",
                s.h, s.n_steps, p.midpoints, p.fixed_point_iters, p.n_steps
            );
        }
    }
    Ok(())
}
