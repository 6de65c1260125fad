use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::quadrature::composite_gauss_legendre;
use crate::error::{Error, Result};
use crate::targets::{GradientTarget, QuadraticTarget};

/// Exact (up to quadrature) law of a chain, iteration by iteration.
///
/// Vectors are stacked as `(x, v)`; `means[k]` and `covariances[k]` describe
/// the state after `k` steps, so index 0 is the starting point.
#[derive(Debug, Clone)]
pub struct MomentTrace {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    /// Largest entrywise change in the final mean and covariance when the
    /// number of α-nodes is doubled.
    pub quadrature_error: f64,
}

impl MomentTrace {
    pub fn n_steps(&self) -> usize {
        self.means.len() - 1
    }
}

fn require_quadratic<T: GradientTarget + ?Sized>(target: &T) -> Result<&QuadraticTarget> {
    target.as_quadratic().ok_or_else(|| {
        Error::UnsupportedTarget("moment propagation needs a diagonal quadratic target".into())
    })
}

/// `t − (1 − e^{−2t}) + (1 − e^{−4t})/4`, the variance of `∫_0^t (1 − e^{−2(t−s)}) dB_s`.
fn kernel_variance(t: f64) -> f64 {
    if t < 0.1 {
        // Σ_{k≥3} ((−2)^k − (−4)^k/4) t^k / k!
        let mut sum = 0.0;
        let mut fact = 1.0;
        let mut pow = 1.0;
        for k in 1..=30 {
            fact *= k as f64;
            pow *= t;
            if k >= 3 {
                let c = (-2.0f64).powi(k) - (-4.0f64).powi(k) / 4.0;
                sum += c * pow / fact;
            }
        }
        sum
    } else {
        t + (-2.0 * t).exp_m1() - (-4.0 * t).exp_m1() / 4.0
    }
}

/// Covariance of `(W1, W2, W3)` for one midpoint step at fraction `alpha`, per coordinate.
pub fn increment_covariance(h: f64, alpha: f64) -> [[f64; 3]; 3] {
    let t1 = alpha * h;
    let e2h = (-2.0 * h).exp();
    let c11 = kernel_variance(t1);
    let c12 = t1 + 0.5 * (-2.0 * t1).exp_m1() - 0.5 * e2h * (2.0 * t1).exp_m1()
        + 0.25 * (-2.0 * (t1 + h)).exp() * (4.0 * t1).exp_m1();
    let c13 = 0.5 * e2h * (2.0 * t1).exp_m1() - 0.25 * (-2.0 * (t1 + h)).exp() * (4.0 * t1).exp_m1();
    let c22 = kernel_variance(h);
    let c23 = -0.5 * (-2.0 * h).exp_m1() + 0.25 * (-4.0 * h).exp_m1();
    let c33 = -0.25 * (-4.0 * h).exp_m1();
    [[c11, c12, c13], [c12, c22, c23], [c13, c23, c33]]
}

/// Conditional-on-α affine map for one coordinate: `(y, v) ↦ A (y, v) + noise`,
/// with `y = x − center`. Returns `(A, noise covariance)`.
fn conditional_map(h: f64, alpha: f64, u: f64, a: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let t1 = alpha * h;
    let p1 = -0.5 * (-2.0 * t1).exp_m1();
    let q1 = 0.5 * u * (t1 - p1) * a;
    let p = -0.5 * (-2.0 * h).exp_m1();
    let kx = -0.5 * u * h * (-2.0 * (h - t1)).exp_m1() * a;
    let kv = u * h * (-2.0 * (h - t1)).exp() * a;
    let decay = (-2.0 * h).exp();
    let m = [
        [1.0 - kx * (1.0 - q1), p - kx * p1],
        [-kv * (1.0 - q1), decay - kv * p1],
    ];
    let c = increment_covariance(h, alpha);
    let qxx = u * (c[1][1] - 2.0 * kx * c[0][1] + kx * kx * c[0][0]);
    let qxv = u * (2.0 * c[1][2] - kv * c[0][1] - 2.0 * kx * c[0][2] + kx * kv * c[0][0]);
    let qvv = u * (4.0 * c[2][2] - 4.0 * kv * c[0][2] + kv * kv * c[0][0]);
    (m, [[qxx, qxv], [qxv, qvv]])
}

type Mat2 = [[f64; 2]; 2];

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn mul2_t(a: &Mat2, b: &Mat2) -> Mat2 {
    // a · bᵀ
    [
        [a[0][0] * b[0][0] + a[0][1] * b[0][1], a[0][0] * b[1][0] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[0][1], a[1][0] * b[1][0] + a[1][1] * b[1][1]],
    ]
}

/// Second moments of centered coordinates kept as `d × d` blocks of 2×2.
struct Propagation {
    maps: Vec<Vec<Mat2>>,
    weights: Vec<f64>,
    mean_map: Vec<Mat2>,
    noise: Vec<Mat2>,
}

impl Propagation {
    fn new(h: f64, u: f64, diag: &[f64], nodes: usize) -> Self {
        let (alphas, weights) = composite_gauss_legendre(nodes / 8, 8);
        let d = diag.len();
        let per_node: Vec<Vec<(Mat2, Mat2)>> = alphas
            .iter()
            .map(|&al| diag.iter().map(|&a| conditional_map(h, al, u, a)).collect())
            .collect();
        let mut mean_map = vec![[[0.0; 2]; 2]; d];
        let mut noise = vec![[[0.0; 2]; 2]; d];
        for (node, w) in per_node.iter().zip(&weights) {
            for i in 0..d {
                for r in 0..2 {
                    for c in 0..2 {
                        mean_map[i][r][c] += w * node[i].0[r][c];
                        noise[i][r][c] += w * node[i].1[r][c];
                    }
                }
            }
        }
        let maps = per_node
            .into_iter()
            .map(|node| node.into_iter().map(|(m, _)| m).collect())
            .collect();
        Self {
            maps,
            weights,
            mean_map,
            noise,
        }
    }

    fn step(&self, mean: &mut [[f64; 2]], second: &mut [Mat2], d: usize) {
        for (m, a) in mean.iter_mut().zip(&self.mean_map) {
            *m = [a[0][0] * m[0] + a[0][1] * m[1], a[1][0] * m[0] + a[1][1] * m[1]];
        }
        let next: Vec<Mat2> = (0..d * d)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / d, ij % d);
                let block = &second[ij];
                let mut acc = [[0.0; 2]; 2];
                for (maps, w) in self.maps.iter().zip(&self.weights) {
                    let b = mul2_t(&mul2(&maps[i], block), &maps[j]);
                    for r in 0..2 {
                        for c in 0..2 {
                            acc[r][c] += w * b[r][c];
                        }
                    }
                }
                if i == j {
                    for r in 0..2 {
                        for c in 0..2 {
                            acc[r][c] += self.noise[i][r][c];
                        }
                    }
                }
                acc
            })
            .collect();
        second.copy_from_slice(&next);
    }
}

fn record(center: &[f64], mean: &[[f64; 2]], second: &[Mat2]) -> (DVector<f64>, DMatrix<f64>) {
    let d = center.len();
    let mu = DVector::from_fn(2 * d, |k, _| {
        if k < d {
            center[k] + mean[k][0]
        } else {
            mean[k - d][1]
        }
    });
    let mut cov = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let b = &second[i * d + j];
            for r in 0..2 {
                for c in 0..2 {
                    cov[(r * d + i, c * d + j)] = b[r][c] - mean[i][r] * mean[j][c];
                }
            }
        }
    }
    let sym = (&cov + cov.transpose()) * 0.5;
    (mu, sym)
}

fn propagate(
    q: &QuadraticTarget,
    h: f64,
    n_steps: usize,
    nodes: usize,
    x0: &[f64],
    v0: &[f64],
) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    let d = q.dim();
    let u = 1.0 / q.smoothness();
    let prop = Propagation::new(h, u, q.diag(), nodes);
    let mut mean: Vec<[f64; 2]> = (0..d).map(|i| [x0[i] - q.center()[i], v0[i]]).collect();
    let mut second: Vec<Mat2> = (0..d * d)
        .map(|ij| {
            let (i, j) = (ij / d, ij % d);
            mul2_t(&[[mean[i][0], 0.0], [mean[i][1], 0.0]], &[[mean[j][0], 0.0], [mean[j][1], 0.0]])
        })
        .collect();
    let mut means = Vec::with_capacity(n_steps + 1);
    let mut covs = Vec::with_capacity(n_steps + 1);
    let (m, c) = record(q.center(), &mean, &second);
    means.push(m);
    covs.push(c);
    for _ in 0..n_steps {
        prop.step(&mut mean, &mut second, d);
        let (m, c) = record(q.center(), &mean, &second);
        means.push(m);
        covs.push(c);
    }
    (means, covs)
}

/// Propagates the exact mean and covariance of the randomized midpoint chain on
/// a diagonal quadratic target, averaging the conditional-on-α affine moment
/// map over `α ∈ [0, 1]` with `nodes` composite Gauss–Legendre points.
///
/// `nodes` must be a multiple of 8 and at least 64. The rule is re-run with
/// `2·nodes` to estimate the quadrature error.
pub fn rmm_moment_oracle<T: GradientTarget + ?Sized>(
    target: &T,
    h: f64,
    n_steps: usize,
    nodes: usize,
    x0: &[f64],
    v0: &[f64],
) -> Result<MomentTrace> {
    let q = require_quadratic(target)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    if nodes < 64 || nodes % 8 != 0 {
        return Err(Error::InvalidArgument(format!(
            "need a multiple of 8 and at least 64 quadrature nodes, got {nodes}"
        )));
    }
    if x0.len() != q.dim() || v0.len() != q.dim() {
        return Err(Error::InvalidArgument("start point has the wrong dimension".into()));
    }
    let (means, covariances) = propagate(q, h, n_steps, nodes, x0, v0);
    let (fine_means, fine_covs) = propagate(q, h, n_steps, 2 * nodes, x0, v0);
    let mean_err = (&means[n_steps] - &fine_means[n_steps]).amax();
    let cov_err = (&covariances[n_steps] - &fine_covs[n_steps]).amax();
    Ok(MomentTrace {
        means,
        covariances,
        quadrature_error: mean_err.max(cov_err),
    })
}

/// `e^{tF}` for `F = [[0, 1], [−ua, −2]]`, stable for long horizons and near
/// critical damping (`ua → 1`).
pub fn ou_propagator(u: f64, a: f64, t: f64) -> [[f64; 2]; 2] {
    let ua = u * a;
    let s2 = 1.0 - ua;
    let (c, s) = if s2 > 0.0 {
        let s = s2.sqrt();
        if s * t < 1e-3 {
            let z = s * t;
            let e = (-t).exp();
            (e * z.cosh(), e * t * (1.0 + z * z / 6.0 + z.powi(4) / 120.0))
        } else {
            // e^{−t}cosh(st) and e^{−t}sinh(st)/s without overflow; s − 1 = −ua/(1+s)
            let slow = (-ua / (1.0 + s) * t).exp();
            let fast = (-(1.0 + s) * t).exp();
            (0.5 * (slow + fast), (slow - fast) / (2.0 * s))
        }
    } else {
        let w = (-s2).sqrt();
        let e = (-t).exp();
        let z = w * t;
        let sinc = if z.abs() < 1e-3 {
            1.0 - z * z / 6.0 + z.powi(4) / 120.0
        } else {
            z.sin() / z
        };
        (e * z.cos(), e * t * sinc)
    };
    [[c + s, s], [-ua * s, c - s]]
}

/// Exact Gaussian law of the kinetic diffusion at time `t` from `(x0, v0)` on a
/// diagonal quadratic target, stacked as `(x, v)`.
pub fn exact_uld_moments<T: GradientTarget + ?Sized>(
    target: &T,
    t: f64,
    x0: &[f64],
    v0: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let q = require_quadratic(target)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let d = q.dim();
    if x0.len() != d || v0.len() != d {
        return Err(Error::InvalidArgument("start point has the wrong dimension".into()));
    }
    let u = 1.0 / q.smoothness();
    let mut mean = DVector::zeros(2 * d);
    let mut cov = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        let a = q.diag()[i];
        let e = ou_propagator(u, a, t);
        let y = x0[i] - q.center()[i];
        mean[i] = q.center()[i] + e[0][0] * y + e[0][1] * v0[i];
        mean[d + i] = e[1][0] * y + e[1][1] * v0[i];
        // Σ(t) = Σ∞ − E Σ∞ Eᵀ with Σ∞ = diag(1/a, u)
        let inf = [1.0 / a, u];
        let mut block = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let carried = e[r][0] * e[c][0] * inf[0] + e[r][1] * e[c][1] * inf[1];
                block[r][c] = if r == c { inf[r] - carried } else { -carried };
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                cov[(r * d + i, c * d + i)] = block[r][c];
            }
        }
    }
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::quadratic_target;

    #[test]
    fn kernel_variance_branches_agree() {
        for t in [0.099_999f64, 0.1] {
            let series = {
                let mut sum = 0.0;
                let mut fact = 1.0;
                for k in 1..=40 {
                    fact *= k as f64;
                    if k >= 3 {
                        sum += ((-2.0f64).powi(k) - (-4.0f64).powi(k) / 4.0) * t.powi(k) / fact;
                    }
                }
                sum
            };
            let direct = t + (-2.0 * t).exp_m1() - (-4.0 * t).exp_m1() / 4.0;
            assert!((series - direct).abs() < 1e-14);
            assert!((kernel_variance(t) - direct).abs() < 1e-14);
        }
        assert!((kernel_variance(1e-4) / (4.0 / 3.0 * 1e-12) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let e = ou_propagator(0.5, 1.0, 0.0);
        assert_eq!(e, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn propagator_is_continuous_across_critical_damping() {
        let t = 0.7;
        let below = ou_propagator(1.0, 1.0 - 1e-9, t);
        let at = ou_propagator(1.0, 1.0, t);
        let above = ou_propagator(1.0, 1.0 + 1e-9, t);
        for r in 0..2 {
            for c in 0..2 {
                assert!((below[r][c] - at[r][c]).abs() < 1e-8);
                assert!((above[r][c] - at[r][c]).abs() < 1e-8);
            }
        }
        // critical case: e^{−t}(1 + t), t e^{−t}
        assert!((at[0][0] - (-t).exp() * (1.0 + t)).abs() < 1e-12);
        assert!((at[0][1] - t * (-t).exp()).abs() < 1e-12);
    }

    #[test]
    fn long_horizon_does_not_overflow() {
        let e = ou_propagator(1.0 / 100.0, 1.0, 1e4);
        assert!(e.iter().flatten().all(|v| v.is_finite() && v.abs() < 1e-10));
    }

    #[test]
    fn exact_moments_at_time_zero() {
        let q = quadratic_target(&[1.0, 3.0], &[0.5, 0.0]).unwrap();
        let (m, c) = exact_uld_moments(&q, 0.0, &[1.0, 2.0], &[0.3, -0.1]).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0, 0.3, -0.1]);
        assert!(c.amax() < 1e-15);
    }

    #[test]
    fn oracle_rejects_bad_node_counts() {
        let q = quadratic_target(&[1.0], &[0.0]).unwrap();
        assert!(rmm_moment_oracle(&q, 0.05, 1, 32, &[0.0], &[0.0]).is_err());
        assert!(rmm_moment_oracle(&q, 0.05, 1, 100, &[0.0], &[0.0]).is_err());
        assert!(rmm_moment_oracle(&q, 0.05, 1, 64, &[0.0], &[0.0]).is_ok());
    }
}
