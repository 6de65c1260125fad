//! Strong error against a fine reference on shared Brownian paths, for several
//! step sizes, with a log-log slope per method.

use midpoint_langevin::analysis::{coupled_error_experiment, CoupledConfig};
use midpoint_langevin::targets::QuadraticTarget;

fn main() -> midpoint_langevin::Result<()> {
    let target = QuadraticTarget::with_condition_number(4, 1.0, 10.0)?;
    let mut cfg = CoupledConfig::new(vec![0.025, 0.05, 0.1, 0.2], 10.0);
    cfg.chains = 16;
    cfg.seed = 3;
    let report = coupled_error_experiment(&target, &cfg)?;
    println!("{:>6} {:>14} {:>12}", "h", "method", "error");
    for row in &report.rows {
        println!("{:>6} {:>14} {:>12.3e}", row.h, row.method.to_string(), row.mean_error);
    }
    for (m, s) in &report.slopes {
        println!("slope {m}: {s:.2}");
    }
    if let Some(e) = report.reference_error {
        println!("reference error estimate: {e:.2e}");
    }
    Ok(())
}
