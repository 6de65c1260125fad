//! Gradient-oracle targets `p(x) ∝ exp(-f(x))` with `m I ⪯ ∇²f ⪯ L I`.

mod libsvm;
mod logistic;
mod quadratic;

use std::sync::atomic::{AtomicU64, Ordering};

pub use libsvm::{load_libsvm, parse_libsvm, write_libsvm};
pub use logistic::{estimate_smoothness, logistic_target, Dataset, LogisticTarget, SmoothnessEstimate};
pub use quadratic::{quadratic_target, QuadraticTarget};

use crate::error::{Error, Result};

/// A smooth, strongly convex potential accessed through its gradient.
///
/// Implementations must be pure: evaluating the gradient never mutates
/// shared state, so one target can be shared across worker threads.
pub trait GradientTarget: Sync {
    fn dim(&self) -> usize;

    /// Writes `∇f(x)` into `out`. Both slices have length [`dim`](Self::dim).
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Gradient Lipschitz constant `L`.
    fn smoothness(&self) -> f64;

    /// Strong convexity constant `m`.
    fn strong_convexity(&self) -> f64;

    fn minimizer(&self) -> Option<&[f64]> {
        None
    }

    /// `f(x)` up to an additive constant, when the target can provide it.
    fn value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `κ = L / m`.
    fn condition_number(&self) -> f64 {
        self.smoothness() / self.strong_convexity()
    }

    /// Returns the diagonal quadratic view when the gradient is linear.
    /// The exact-moment oracles in [`crate::analysis`] only accept these.
    fn as_quadratic(&self) -> Option<&QuadraticTarget> {
        None
    }
}

impl<T: GradientTarget + ?Sized> GradientTarget for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient(x, out)
    }
    fn smoothness(&self) -> f64 {
        (**self).smoothness()
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
    fn minimizer(&self) -> Option<&[f64]> {
        (**self).minimizer()
    }
    fn value(&self, x: &[f64]) -> Option<f64> {
        (**self).value(x)
    }
    fn as_quadratic(&self) -> Option<&QuadraticTarget> {
        (**self).as_quadratic()
    }
}

/// Wraps a target and counts gradient evaluations.
///
/// Used to audit the per-step evaluation budget of each stepper
/// independently of the counts the runners report themselves.
#[derive(Debug)]
pub struct CountingTarget<T> {
    inner: T,
    calls: AtomicU64,
}

impl<T: GradientTarget> CountingTarget<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: GradientTarget> GradientTarget for CountingTarget<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x, out)
    }
    fn smoothness(&self) -> f64 {
        self.inner.smoothness()
    }
    fn strong_convexity(&self) -> f64 {
        self.inner.strong_convexity()
    }
    fn minimizer(&self) -> Option<&[f64]> {
        self.inner.minimizer()
    }
    fn value(&self, x: &[f64]) -> Option<f64> {
        self.inner.value(x)
    }
    fn as_quadratic(&self) -> Option<&QuadraticTarget> {
        self.inner.as_quadratic()
    }
}

/// Gradient descent with step `1/L` until `‖∇f‖ ≤ tol`.
pub fn find_minimizer<T: GradientTarget + ?Sized>(
    target: &T,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let d = target.dim();
    if start.len() != d {
        return Err(Error::InvalidArgument(format!(
            "start point has length {}, target dimension is {d}",
            start.len()
        )));
    }
    let step = 1.0 / target.smoothness();
    let mut x = start.to_vec();
    let mut g = vec![0.0; d];
    for _ in 0..max_iter {
        target.gradient(&x, &mut g);
        if norm(&g) <= tol {
            return Ok(x);
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
    }
    target.gradient(&x, &mut g);
    if norm(&g) <= tol {
        Ok(x)
    } else {
        Err(Error::InvalidTarget(format!(
            "gradient descent did not reach ‖∇f‖ ≤ {tol:e} within {max_iter} iterations (‖∇f‖ = {:e})",
            norm(&g)
        )))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
