use midpoint_langevin::analysis::{contraction_check, contraction_worst_case};
use midpoint_langevin::targets::QuadraticTarget;

fn main() -> midpoint_langevin::Result<()> {
    for kappa in [1.0, 10.0, 100.0] {
        let target = QuadraticTarget::with_condition_number(2, 1.0, kappa)?;
        for t in [kappa / 10.0, kappa, 10.0 * kappa] {
            let worst = contraction_worst_case(&target, t)?;
            let one = contraction_check(&target, t, &[1.0, -1.0], &[0.5, 0.0])?;
            println!(
                "κ = {kappa:>5}, t = {t:>6}: worst ratio {:.3e}, sample ratio {:.3e}, bound {:.3e}",
                worst.ratio, one.ratio, worst.bound
            );
        }
    }
    Ok(())
}
