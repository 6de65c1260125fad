use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use crate::rng::{standard_normal, uniform};

use super::{find_minimizer, norm, GradientTarget};
use crate::error::{Error, Result};

/// Dense binary classification data with labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    /// `features` is row-major with `labels.len()` rows of length `dim`.
    pub fn new(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidTarget("dataset has no samples".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidTarget("dataset has zero features".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidTarget(format!(
                "feature matrix has {} entries, expected {} × {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|y| *y != 1.0 && *y != -1.0) {
            return Err(Error::InvalidTarget(format!(
                "label {} of sample {i} is not ±1",
                labels[i]
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTarget("features must be finite".into()));
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    /// Gaussian features with labels drawn from a logistic model around a
    /// random coefficient vector. Deterministic in `seed`.
    pub fn synthetic(n: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
            let z: f64 = row.iter().zip(&theta).map(|(a, b)| a * b).sum();
            let u = uniform(&mut rng);
            labels.push(if u < sigmoid(z) { 1.0 } else { -1.0 });
            features.extend(row);
        }
        Self::new(features, labels, dim)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    /// Rescales every column affinely onto `[−1, 1]`. Constant columns become 0.
    pub fn scale_columns(&mut self) {
        for j in 0..self.dim {
            let (lo, hi) = self
                .rows()
                .map(|r| r[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            let span = hi - lo;
            for i in 0..self.labels.len() {
                let x = &mut self.features[i * self.dim + j];
                *x = if span > 0.0 {
                    2.0 * (*x - lo) / span - 1.0
                } else {
                    0.0
                };
            }
        }
    }
}

/// `1/(1+e^{−z})`, evaluated on the branch that never exponentiates a positive number.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^{z})` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Outcome of the Hessian-bound computation for a logistic target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessEstimate {
    pub smoothness: f64,
    pub strong_convexity: f64,
    /// Top eigenvalue of the averaged Gram matrix `(1/n) Σ xᵢxᵢᵀ`.
    pub gram_eigenvalue: f64,
    pub converged: bool,
    pub iterations: usize,
}

const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITER: usize = 10_000;

/// `m = λ`, `L = λ + ¼ λ_max((1/n) Σ xᵢxᵢᵀ)` from `∇²f ⪯ λI + ¼(1/n)Σ xᵢxᵢᵀ`.
///
/// The top eigenvalue comes from power iteration, stopped once the residual
/// `‖Gv − ρv‖` falls below `1e-6·ρ`.
pub fn estimate_smoothness(data: &Dataset, lambda: f64) -> SmoothnessEstimate {
    let d = data.dim();
    let n = data.len() as f64;
    let gram_apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for row in data.rows() {
            let s: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, a) in out.iter_mut().zip(row) {
                *o += s * a / n;
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..d)
        .map(|_| 1.0 + 0.1 * crate::rng::standard_normal(&mut rng))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![0.0; d];
    let mut rho = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=POWER_MAX_ITER {
        iterations = it;
        gram_apply(&v, &mut w);
        rho = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - rho * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let nw = norm(&w);
        if nw == 0.0 {
            // Gram matrix annihilates v: all features are zero.
            rho = 0.0;
            converged = true;
            break;
        }
        if residual <= POWER_TOL * rho.abs() {
            converged = true;
            break;
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
    }
    SmoothnessEstimate {
        smoothness: lambda + 0.25 * rho,
        strong_convexity: lambda,
        gram_eigenvalue: rho,
        converged,
        iterations,
    }
}

/// Ridge-regularized Bayesian logistic regression posterior:
/// `f(θ) = (λ/2)‖θ‖² + (1/n) Σ log(1 + exp(−yᵢ xᵢᵀθ))`.
#[derive(Debug, Clone)]
pub struct LogisticTarget {
    data: Dataset,
    lambda: f64,
    estimate: SmoothnessEstimate,
    minimizer: Vec<f64>,
}

/// Builds the posterior target, its smoothness bound and its mode.
///
/// The mode is located by gradient descent to `‖∇f‖ ≤ 1e-8`.
pub fn logistic_target(data: Dataset, lambda: f64) -> Result<LogisticTarget> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidTarget(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidTarget("dataset has no samples".into()));
    }
    let estimate = estimate_smoothness(&data, lambda);
    let mut target = LogisticTarget {
        minimizer: vec![0.0; data.dim()],
        data,
        lambda,
        estimate,
    };
    let iters = (200.0 * target.condition_number()).ceil() as usize + 10_000;
    target.minimizer = find_minimizer(&target, &vec![0.0; target.dim()], 1e-8, iters)?;
    Ok(target)
}

impl LogisticTarget {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn smoothness_estimate(&self) -> &SmoothnessEstimate {
        &self.estimate
    }
}

impl GradientTarget for LogisticTarget {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        let n = self.data.len() as f64;
        for (o, t) in out.iter_mut().zip(theta) {
            *o = self.lambda * t;
        }
        for (row, y) in self.data.rows().zip(self.data.labels()) {
            let margin: f64 = row.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() * y;
            let w = -y * sigmoid(-margin) / n;
            for (o, a) in out.iter_mut().zip(row) {
                *o += w * a;
            }
        }
    }

    fn smoothness(&self) -> f64 {
        self.estimate.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.estimate.strong_convexity
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.minimizer)
    }

    fn value(&self, theta: &[f64]) -> Option<f64> {
        let n = self.data.len() as f64;
        let ridge = 0.5 * self.lambda * theta.iter().map(|t| t * t).sum::<f64>();
        let loss: f64 = self
            .data
            .rows()
            .zip(self.data.labels())
            .map(|(row, y)| softplus(-y * row.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>()))
            .sum();
        Some(ridge + loss / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_for_large_arguments() {
        for z in [-1000.0, -700.0, 0.0, 700.0, 1000.0] {
            let s = sigmoid(z);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s), "σ({z}) = {s}");
        }
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-1000.0) == 0.0 && sigmoid(1000.0) == 1.0);
        assert!(softplus(1000.0) == 1000.0 && softplus(-1000.0) == 0.0);
    }

    #[test]
    fn gradient_at_origin_is_half_mean_signed_feature() {
        let data = Dataset::new(vec![1.0, 0.0, 0.5, 2.0], vec![1.0, -1.0], 2).unwrap();
        let t = logistic_target(data, 0.01).unwrap();
        let mut g = [0.0; 2];
        t.gradient(&[0.0, 0.0], &mut g);
        // −(1/n) Σ yᵢxᵢ / 2 = −((1,0) − (0.5,2)) / 4
        assert!((g[0] + 0.125).abs() < 1e-15);
        assert!((g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_sample_gradient() {
        let data = Dataset::new(vec![1.0, 0.0], vec![1.0], 2).unwrap();
        let t = logistic_target(data, 0.01).unwrap();
        let mut g = [0.0; 2];
        t.gradient(&[0.0, 0.0], &mut g);
        assert_eq!(g, [-0.5, 0.0]);
    }

    #[test]
    fn smoothness_of_rank_one_gram() {
        let data = Dataset::new(vec![1.0, 0.0, 0.0], vec![1.0], 3).unwrap();
        let est = estimate_smoothness(&data, 0.01);
        assert!(est.converged);
        assert!((est.smoothness - 0.26).abs() < 1e-9);
        assert_eq!(est.strong_convexity, 0.01);
    }

    #[test]
    fn smoothness_of_half_identity_gram() {
        let data = Dataset::new(vec![1.0, 0.0, 0.0, 1.0], vec![1.0, -1.0], 2).unwrap();
        let est = estimate_smoothness(&data, 0.0);
        assert!(est.converged);
        assert!((est.smoothness - 0.125).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_lambda_and_labels() {
        let data = Dataset::new(vec![1.0], vec![1.0], 1).unwrap();
        assert!(matches!(logistic_target(data.clone(), 0.0), Err(Error::InvalidTarget(_))));
        assert!(logistic_target(data, -1.0).is_err());
        assert!(Dataset::new(vec![1.0], vec![0.0], 1).is_err());
        assert!(Dataset::new(vec![], vec![], 1).is_err());
    }

    #[test]
    fn minimizer_has_small_gradient() {
        let t = logistic_target(Dataset::synthetic(50, 3, 7).unwrap(), 0.01).unwrap();
        let mut g = [0.0; 3];
        t.gradient(t.minimizer().unwrap(), &mut g);
        assert!(norm(&g) <= 1e-8);
    }

    #[test]
    fn column_scaling_maps_onto_unit_box() {
        let mut data =
            Dataset::new(vec![0.0, 5.0, 2.0, 5.0, 4.0, 5.0], vec![1.0, -1.0, 1.0], 2).unwrap();
        data.scale_columns();
        let col0: Vec<f64> = data.rows().map(|r| r[0]).collect();
        assert_eq!(col0, vec![-1.0, 0.0, 1.0]);
        assert!(data.rows().all(|r| r[1] == 0.0));
    }
}
