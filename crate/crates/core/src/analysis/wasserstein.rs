use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::targets::GradientTarget;

/// A measured 2-Wasserstein distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W2Result {
    pub distance: f64,
    /// `distance / √(d/m)`.
    pub normalized: f64,
    /// Bootstrap percentile interval for `normalized`, when one was computed.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Set when the estimate rests on fewer than 100 chains.
    pub low_power: bool,
}

/// `√(d/m)`, the scale against which sampling error is measured.
pub fn effective_diameter<T: GradientTarget + ?Sized>(target: &T) -> f64 {
    (target.dim() as f64 / target.strong_convexity()).sqrt()
}

fn check_cov(name: &str, cov: &DMatrix<f64>, d: usize) -> Result<()> {
    if cov.nrows() != d || cov.ncols() != d {
        return Err(Error::InvalidArgument(format!(
            "{name} is {}x{}, expected {d}x{d}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let scale = cov.amax().max(1.0);
    let asym = (cov - cov.transpose()).amax();
    if asym > 1e-10 * scale || !cov.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = sym_eigen(m);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Closed-form `W2` between `N(mean1, cov1)` and `N(mean2, cov2)`:
/// `‖μ1−μ2‖² + Tr(Σ1 + Σ2 − 2(Σ2^{½} Σ1 Σ2^{½})^{½})`.
///
/// Matrix roots use a symmetric eigendecomposition with eigenvalues floored at 0.
pub fn gaussian_w2(
    mean1: &DVector<f64>,
    cov1: &DMatrix<f64>,
    mean2: &DVector<f64>,
    cov2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mean1.len();
    if mean2.len() != d {
        return Err(Error::InvalidArgument("means have different lengths".into()));
    }
    check_cov("first covariance", cov1, d)?;
    check_cov("second covariance", cov2, d)?;
    if mean1 == mean2 && cov1 == cov2 {
        return Ok(0.0);
    }
    let shift = (mean1 - mean2).norm_squared();
    let root2 = psd_sqrt(cov2);
    let cross = sym_eigen(&(&root2 * cov1 * &root2))
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum::<f64>();
    let sq = shift + cov1.trace() + cov2.trace() - 2.0 * cross;
    Ok(sq.max(0.0).sqrt())
}
