use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::wasserstein::{effective_diameter, gaussian_w2, W2Result};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::samplers::{run_chains, Method, Schedule};
use crate::targets::GradientTarget;

const BOOTSTRAP_RESAMPLES: usize = 200;
const MIN_CHAINS: usize = 100;

/// Sample mean and (unbiased) covariance of a set of points.
pub fn empirical_moments(samples: &[Vec<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len();
    let d = samples.first().map_or(0, Vec::len);
    let mut mean = DVector::zeros(d);
    for s in samples {
        mean += DVector::from_column_slice(s);
    }
    mean /= n.max(1) as f64;
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        let c = DVector::from_column_slice(s) - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    if n > 1 {
        cov /= (n - 1) as f64;
    }
    (mean, cov)
}

/// Runs `chains` independent randomized midpoint chains (or `method`) under
/// `schedule` and measures the Gaussian-fit `W2` of the final positions
/// against the target law, with a 200-resample percentile bootstrap.
pub fn stationary_error_study<T: GradientTarget + ?Sized>(
    target: &T,
    method: Method,
    schedule: &Schedule,
    chains: usize,
    seed: u64,
) -> Result<W2Result> {
    let q = target.as_quadratic().ok_or_else(|| {
        Error::UnsupportedTarget("stationary error needs a Gaussian (quadratic) target".into())
    })?;
    if chains < 2 {
        return Err(Error::InvalidArgument("need at least two chains".into()));
    }
    let runs = run_chains(method, target, schedule, chains, seed, None)?;
    let finals: Vec<Vec<f64>> = runs.into_iter().map(|r| r.state.x).collect();
    let target_mean = DVector::from_column_slice(q.center());
    let target_cov = DMatrix::from_diagonal(&DVector::from_vec(q.variances()));
    let scale = effective_diameter(target);

    let (mean, cov) = empirical_moments(&finals);
    let distance = gaussian_w2(&mean, &cov, &target_mean, &target_cov)?;

    let mut rng = stream(seed, u64::MAX);
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = Vec::with_capacity(chains);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        resample.clear();
        resample.extend((0..chains).map(|_| finals[rng.random_range(0..chains)].clone()));
        let (m, c) = empirical_moments(&resample);
        boot.push(gaussian_w2(&m, &c, &target_mean, &target_cov)? / scale);
    }
    boot.sort_by(f64::total_cmp);
    let pick = |p: f64| boot[((p * (BOOTSTRAP_RESAMPLES - 1) as f64).round()) as usize];

    Ok(W2Result {
        distance,
        normalized: distance / scale,
        ci_low: Some(pick(0.025)),
        ci_high: Some(pick(0.975)),
        low_power: chains < MIN_CHAINS,
    })
}
