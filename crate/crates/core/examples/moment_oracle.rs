//! Exact law of the midpoint chain on a Gaussian target, iteration by
//! iteration, and its distance to the target.

use midpoint_langevin::analysis::{effective_diameter, exact_uld_moments, gaussian_w2, rmm_moment_oracle};
use midpoint_langevin::targets::QuadraticTarget;
use nalgebra::{DMatrix, DVector};

fn main() -> midpoint_langevin::Result<()> {
    let target = QuadraticTarget::with_condition_number(3, 1.0, 10.0)?;
    let d = 3;
    let x0 = vec![2.0; d];
    let v0 = vec![0.0; d];
    let h = 0.05;
    let trace = rmm_moment_oracle(&target, h, 4000, 128, &x0, &v0)?;
    println!("quadrature error estimate: {:.1e}", trace.quadrature_error);

    let target_mean = DVector::zeros(d);
    let target_cov = DMatrix::from_diagonal(&DVector::from_vec(target.variances()));
    for k in [0, 250, 500, 1000, 2000, 4000] {
        let mean = trace.means[k].rows(0, d).into_owned();
        let cov = trace.covariances[k].view((0, 0), (d, d)).into_owned();
        let w2 = gaussian_w2(&mean, &cov, &target_mean, &target_cov)?;
        let (exact_mean, exact_cov) = exact_uld_moments(&target, h * k as f64, &x0, &v0)?;
        let gap = (&trace.covariances[k] - exact_cov).amax().max((&trace.means[k] - exact_mean).amax());
        println!(
            "step {k:>4}: W2 to target / √(d/m) = {:.4}, max gap to the exact diffusion = {gap:.1e}",
            w2 / effective_diameter(&target)
        );
    }
    Ok(())
}
