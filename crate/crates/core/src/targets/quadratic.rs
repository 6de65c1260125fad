use super::GradientTarget;
use crate::error::{Error, Result};

/// `f(x) = ½ Σ aᵢ (xᵢ − cᵢ)²`, i.e. a Gaussian with covariance `diag(1/aᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTarget {
    diag: Vec<f64>,
    center: Vec<f64>,
    smoothness: f64,
    strong_convexity: f64,
}

/// Builds a diagonal quadratic target. Every curvature must be positive and finite.
pub fn quadratic_target(diag: &[f64], center: &[f64]) -> Result<QuadraticTarget> {
    if diag.is_empty() {
        return Err(Error::InvalidTarget("dimension must be positive".into()));
    }
    if diag.len() != center.len() {
        return Err(Error::InvalidTarget(format!(
            "diagonal has length {} but center has length {}",
            diag.len(),
            center.len()
        )));
    }
    if let Some((i, a)) = diag.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidTarget(format!(
            "diagonal entry {i} is {a}; curvatures must be positive"
        )));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidTarget("center must be finite".into()));
    }
    let smoothness = diag.iter().copied().fold(f64::MIN, f64::max);
    let strong_convexity = diag.iter().copied().fold(f64::MAX, f64::min);
    Ok(QuadraticTarget {
        diag: diag.to_vec(),
        center: center.to_vec(),
        smoothness,
        strong_convexity,
    })
}

impl QuadraticTarget {
    /// Curvatures spread geometrically from `m` to `m·κ`, centered at the origin.
    pub fn with_condition_number(dim: usize, m: f64, kappa: f64) -> Result<Self> {
        if dim == 0 || !(kappa >= 1.0) {
            return Err(Error::InvalidTarget(format!(
                "need dim ≥ 1 and κ ≥ 1, got dim={dim}, κ={kappa}"
            )));
        }
        let diag: Vec<f64> = (0..dim)
            .map(|i| {
                if dim == 1 {
                    m
                } else {
                    m * kappa.powf(i as f64 / (dim - 1) as f64)
                }
            })
            .collect();
        quadratic_target(&diag, &vec![0.0; dim])
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Covariance diagonal of the target Gaussian.
    pub fn variances(&self) -> Vec<f64> {
        self.diag.iter().map(|a| 1.0 / a).collect()
    }
}

impl GradientTarget for QuadraticTarget {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), (a, c)) in out.iter_mut().zip(x).zip(self.diag.iter().zip(&self.center)) {
            *o = a * (xi - c);
        }
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.center)
    }

    fn value(&self, x: &[f64]) -> Option<f64> {
        Some(
            0.5 * x
                .iter()
                .zip(self.diag.iter().zip(&self.center))
                .map(|(xi, (a, c))| a * (xi - c) * (xi - c))
                .sum::<f64>(),
        )
    }

    fn as_quadratic(&self) -> Option<&QuadraticTarget> {
        Some(self)
    }
}
