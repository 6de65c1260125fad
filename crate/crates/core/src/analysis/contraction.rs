use serde::Serialize;

use super::moments::ou_propagator;
use crate::error::{Error, Result};
use crate::targets::{GradientTarget, QuadraticTarget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionResult {
    /// `(‖Δx_t‖² + ‖Δx_t+Δv_t‖²) / (‖Δx_0‖² + ‖Δx_0+Δv_0‖²)`.
    pub ratio: f64,
    /// `e^{−t/κ}`.
    pub bound: f64,
    /// The initial difference was zero; `ratio` is reported as 0.
    pub degenerate: bool,
}

impl ContractionResult {
    pub fn holds(&self, tol: f64) -> bool {
        self.ratio <= self.bound + tol
    }
}

fn quadratic<T: GradientTarget + ?Sized>(target: &T, t: f64) -> Result<&QuadraticTarget> {
    let q = target.as_quadratic().ok_or_else(|| {
        Error::UnsupportedTarget("contraction check needs a diagonal quadratic target".into())
    })?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    Ok(q)
}

/// Evolves the difference of two synchronously coupled diffusions for time `t`.
/// Shared noise cancels, leaving `Δx' = Δv`, `Δv' = −2Δv − uAΔx`.
pub fn contraction_check<T: GradientTarget + ?Sized>(
    target: &T,
    t: f64,
    delta_x0: &[f64],
    delta_v0: &[f64],
) -> Result<ContractionResult> {
    let q = quadratic(target, t)?;
    let d = q.dim();
    if delta_x0.len() != d || delta_v0.len() != d {
        return Err(Error::InvalidArgument("difference has the wrong dimension".into()));
    }
    let u = 1.0 / q.smoothness();
    let bound = (-t / q.condition_number()).exp();
    let mut before = 0.0;
    let mut after = 0.0;
    for i in 0..d {
        let (dx, dv) = (delta_x0[i], delta_v0[i]);
        before += dx * dx + (dx + dv) * (dx + dv);
        let e = ou_propagator(u, q.diag()[i], t);
        let x = e[0][0] * dx + e[0][1] * dv;
        let v = e[1][0] * dx + e[1][1] * dv;
        after += x * x + (x + v) * (x + v);
    }
    if before == 0.0 {
        return Ok(ContractionResult {
            ratio: 0.0,
            bound,
            degenerate: true,
        });
    }
    Ok(ContractionResult {
        ratio: after / before,
        bound,
        degenerate: false,
    })
}

/// Largest ratio over all initial differences: the squared spectral norm of
/// `B e^{tF} B⁻¹` with `B = [[1, 0], [1, 1]]`, maximized over coordinates.
pub fn contraction_worst_case<T: GradientTarget + ?Sized>(target: &T, t: f64) -> Result<ContractionResult> {
    let q = quadratic(target, t)?;
    let u = 1.0 / q.smoothness();
    let bound = (-t / q.condition_number()).exp();
    let mut worst: f64 = 0.0;
    for &a in q.diag() {
        let e = ou_propagator(u, a, t);
        // B E B⁻¹ with B⁻¹ = [[1, 0], [−1, 1]]
        let be = [
            [e[0][0], e[0][1]],
            [e[0][0] + e[1][0], e[0][1] + e[1][1]],
        ];
        let m = [
            [be[0][0] - be[0][1], be[0][1]],
            [be[1][0] - be[1][1], be[1][1]],
        ];
        let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
        let r = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        let s = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        let top = 0.5 * (p + r) + (0.25 * (p - r) * (p - r) + s * s).sqrt();
        worst = worst.max(top);
    }
    Ok(ContractionResult {
        ratio: worst,
        bound,
        degenerate: false,
    })
}
