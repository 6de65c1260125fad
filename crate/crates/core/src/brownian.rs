//! Exact sampling of the Gaussian functionals of Brownian motion that drive
//! the midpoint integrators.
//!
//! For an interval `[a, a + t]` we store `H = ∫ dB_s` and the locally
//! weighted `G = ∫ e^{2(s−a)} dB_s`. Per coordinate `(G, H)` is a centered
//! bivariate Gaussian with
//!
//! ```text
//! Var H = t,   Var G = (e^{4t} − 1)/4,   Cov(G, H) = (e^{2t} − 1)/2,
//! ```
//!
//! independent across coordinates and across disjoint intervals. Weighting
//! from the interval's own left end keeps `G` finite no matter how far the
//! interval sits from time zero; adjacent intervals combine through
//! [`compose`].
//!
//! Draw order is fixed: an interval consumes `d` normals for `H` followed by
//! `d` normals for the `G` residual; multi-cell constructions consume cells
//! left to right. Zero-length cells consume nothing.

use rand::Rng;

use crate::error::{invalid_arg, Result};
use crate::rng::fill_standard_normal;

/// Longest interval whose `G` variance stays finite in `f64`.
pub const MAX_INTERVAL_LENGTH: f64 = 170.0;

/// Brownian functionals `(H, G)` over one interval, `G` weighted from the left end.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats {
    length: f64,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl IntervalStats {
    /// The empty interval: identity element of [`compose`].
    pub fn zero(dim: usize) -> Self {
        Self {
            length: 0.0,
            h: vec![0.0; dim],
            g: vec![0.0; dim],
        }
    }

    pub fn from_parts(length: f64, h: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if !(length >= 0.0 && length.is_finite()) {
            return Err(invalid_arg(format!("interval length {length} must be finite and ≥ 0")));
        }
        if h.len() != g.len() {
            return Err(invalid_arg("H and G must have equal dimension"));
        }
        Ok(Self { length, h, g })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// `∫ dB_s`.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `∫ e^{2(s−a)} dB_s`.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().chain(&self.g).all(|x| x.is_finite())
    }
}

/// Per-coordinate covariance of `(H, G)` over an interval of length `t`,
/// plus the regression form `G = slope·H + R` with `R ⟂ H`, `Var R = residual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalCovariance {
    pub var_h: f64,
    pub var_g: f64,
    pub cov_gh: f64,
    pub slope: f64,
    pub residual: f64,
}

impl IntervalCovariance {
    pub fn new(t: f64) -> Self {
        if t == 0.0 {
            return Self {
                var_h: 0.0,
                var_g: 0.0,
                cov_gh: 0.0,
                slope: 1.0,
                residual: 0.0,
            };
        }
        let e2 = (2.0 * t).exp_m1();
        let var_g = e2 * (e2 + 2.0) / 4.0;
        let cov_gh = e2 / 2.0;
        let slope = e2 / (2.0 * t);
        // Var G − Cov²/t = (E/4)(E + 2 − E/t), E = e^{2t} − 1. The bracket is
        // O(t²) and cancels badly for small t, so it uses its Taylor series there.
        let bracket = if t < 0.25 {
            let x = 2.0 * t;
            let mut p = x * x / 6.0; // x^k / (k+1)! at k = 2
            let mut sum = 0.0;
            for k in 2..80 {
                let term = (k - 1) as f64 * p;
                sum += term;
                if term <= 1e-18 * sum {
                    break;
                }
                p *= x / (k + 2) as f64;
            }
            sum
        } else {
            e2 + 2.0 - e2 / t
        };
        Self {
            var_h: t,
            var_g,
            cov_gh,
            slope,
            residual: (e2 / 4.0 * bracket).max(0.0),
        }
    }
}

fn check_length(length: f64) -> Result<()> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(invalid_arg(format!(
            "interval length must be positive and finite, got {length}"
        )));
    }
    if length > MAX_INTERVAL_LENGTH {
        return Err(invalid_arg(format!(
            "interval length {length} exceeds {MAX_INTERVAL_LENGTH}; split it into shorter intervals"
        )));
    }
    Ok(())
}

/// Draws `(H, G)` over an interval of the given length.
pub fn sample_interval<R: Rng + ?Sized>(length: f64, dim: usize, rng: &mut R) -> Result<IntervalStats> {
    check_length(length)?;
    Ok(sample_cell(length, dim, rng))
}

/// Like [`sample_interval`] but a zero length yields the empty interval without drawing.
fn sample_cell<R: Rng + ?Sized>(length: f64, dim: usize, rng: &mut R) -> IntervalStats {
    if length <= 0.0 {
        return IntervalStats::zero(dim);
    }
    let cov = IntervalCovariance::new(length);
    let mut h = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    fill_standard_normal(rng, &mut h);
    fill_standard_normal(rng, &mut g);
    let sd_h = length.sqrt();
    let sd_r = cov.residual.sqrt();
    for (hi, gi) in h.iter_mut().zip(g.iter_mut()) {
        *hi *= sd_h;
        *gi = cov.slope * *hi + sd_r * *gi;
    }
    IntervalStats { length, h, g }
}

/// Joins adjacent intervals: `H = H_l + H_r`, `G = G_l + e^{2·len_l} G_r`.
pub fn compose(left: &IntervalStats, right: &IntervalStats) -> IntervalStats {
    debug_assert_eq!(left.dim(), right.dim());
    let w = (2.0 * left.length).exp();
    IntervalStats {
        length: left.length + right.length,
        h: left.h.iter().zip(&right.h).map(|(a, b)| a + b).collect(),
        g: left.g.iter().zip(&right.g).map(|(a, b)| a + w * b).collect(),
    }
}

/// Refines `parent` at offset `at`: samples the two halves from their joint
/// law conditioned on composing back to `parent`.
///
/// Sampling is done by drawing both halves unconditionally and correcting
/// with the conditional-mean map, in the decorrelated `(H, R)` coordinates
/// where the two constraints are nearly orthogonal. The right half is then
/// fixed by the constraint so the round trip reproduces `parent` to rounding.
pub fn split<R: Rng + ?Sized>(
    parent: &IntervalStats,
    at: f64,
    rng: &mut R,
) -> Result<(IntervalStats, IntervalStats)> {
    if !(at > 0.0 && at < parent.length) {
        return Err(invalid_arg(format!(
            "split point {at} must lie strictly inside (0, {})",
            parent.length
        )));
    }
    let dim = parent.dim();
    let a = at;
    let b = parent.length - at;
    let cl = IntervalCovariance::new(a);
    let cr = IntervalCovariance::new(b);
    let cp = IntervalCovariance::new(parent.length);
    let e2a = (2.0 * a).exp();

    // Unknowns Y = (H_l, H_r, R_l, R_r) with independent variances D.
    // Constraints: H_l + H_r = H,  k1 H_l + k2 H_r + R_l + e^{2a} R_r = R_parent.
    let var = [a, b, cl.residual, cr.residual];
    let r1 = [1.0, 1.0, 0.0, 0.0];
    let r2 = [cl.slope - cp.slope, e2a * cr.slope - cp.slope, 1.0, e2a];
    let dot_d = |u: &[f64; 4], v: &[f64; 4]| (0..4).map(|k| u[k] * var[k] * v[k]).sum::<f64>();
    let c11 = dot_d(&r1, &r1);
    let c12 = dot_d(&r1, &r2);
    let c22 = dot_d(&r2, &r2);
    let det = c11 * c22 - c12 * c12;

    let left0 = sample_cell(a, dim, rng);
    let right0 = sample_cell(b, dim, rng);

    let mut hl = vec![0.0; dim];
    let mut gl = vec![0.0; dim];
    let mut hr = vec![0.0; dim];
    let mut gr = vec![0.0; dim];
    for i in 0..dim {
        let y = [
            left0.h[i],
            right0.h[i],
            left0.g[i] - cl.slope * left0.h[i],
            right0.g[i] - cr.slope * right0.h[i],
        ];
        let target_h = parent.h[i];
        let target_r = parent.g[i] - cp.slope * parent.h[i];
        let res1 = target_h - (y[0] + y[1]);
        let res2 = target_r - (0..4).map(|k| r2[k] * y[k]).sum::<f64>();
        let (lam1, lam2) = if det > 0.0 {
            ((c22 * res1 - c12 * res2) / det, (c11 * res2 - c12 * res1) / det)
        } else {
            (res1 / c11, 0.0)
        };
        let h_left = y[0] + var[0] * (r1[0] * lam1 + r2[0] * lam2);
        let r_left = y[2] + var[2] * (r1[2] * lam1 + r2[2] * lam2);
        hl[i] = h_left;
        gl[i] = cl.slope * h_left + r_left;
        hr[i] = parent.h[i] - hl[i];
        gr[i] = (parent.g[i] - gl[i]) / e2a;
    }
    Ok((
        IntervalStats {
            length: a,
            h: hl,
            g: gl,
        },
        IntervalStats {
            length: b,
            h: hr,
            g: gr,
        },
    ))
}

/// Increments consumed by one midpoint step:
///
/// ```text
/// W1 = ∫_0^{αh} (1 − e^{−2(αh−s)}) dB_s
/// W2 = ∫_0^h (1 − e^{−2(h−s)}) dB_s
/// W3 = ∫_0^h e^{−2(h−s)} dB_s
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StepIncrements {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
}

impl StepIncrements {
    pub fn zero(dim: usize) -> Self {
        Self {
            w1: vec![0.0; dim],
            w2: vec![0.0; dim],
            w3: vec![0.0; dim],
        }
    }

    /// Builds the increments from the two cells `[0, αh]` and `[αh, h]`.
    pub fn from_cells(h: f64, alpha: f64, first: &IntervalStats, second: &IntervalStats) -> Self {
        let t1 = alpha * h;
        let decay_mid = (-2.0 * t1).exp();
        let decay_end = (-2.0 * h).exp();
        let w = (2.0 * t1).exp();
        let dim = first.dim();
        let mut inc = Self::zero(dim);
        for i in 0..dim {
            let g_total = first.g[i] + w * second.g[i];
            let h_total = first.h[i] + second.h[i];
            inc.w1[i] = first.h[i] - decay_mid * first.g[i];
            inc.w2[i] = h_total - decay_end * g_total;
            inc.w3[i] = decay_end * g_total;
        }
        inc
    }

    /// Increments of a single whole step `[0, h]` (no interior point).
    /// `w1` is zero; only `w2`, `w3` are meaningful.
    pub fn from_whole_step(h: f64, whole: &IntervalStats) -> Self {
        let decay_end = (-2.0 * h).exp();
        let dim = whole.dim();
        let mut inc = Self::zero(dim);
        for i in 0..dim {
            inc.w2[i] = whole.h[i] - decay_end * whole.g[i];
            inc.w3[i] = decay_end * whole.g[i];
        }
        inc
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid_arg(format!("step size must be positive and finite, got {h}")));
    }
    check_length(h)
}

/// Samples the increments of one randomized midpoint step.
///
/// Cells `[0, αh]` and `[αh, h]` are drawn independently in that order; an
/// empty cell (α ∈ {0, 1}) contributes zero and consumes no randomness.
pub fn step_increments<R: Rng + ?Sized>(
    h: f64,
    alpha: f64,
    dim: usize,
    rng: &mut R,
) -> Result<StepIncrements> {
    check_step(h)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid_arg(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let t1 = alpha * h;
    let first = sample_cell(t1, dim, rng);
    let second = sample_cell(h - t1, dim, rng);
    Ok(StepIncrements::from_cells(h, alpha, &first, &second))
}

/// Increments of one parallel midpoint step with `R = alphas.len()` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelIncrements {
    /// `W1_i = ∫_0^{α_i h} (1 − e^{−2(α_i h−s)}) dB_s`, one per node.
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
}

/// Checks `α_i ∈ [(i−1)/R, i/R]` for every node.
pub fn validate_parallel_alphas(alphas: &[f64]) -> Result<()> {
    let r = alphas.len();
    if r == 0 {
        return Err(invalid_arg("need at least one midpoint"));
    }
    for (i, &a) in alphas.iter().enumerate() {
        let lo = i as f64 / r as f64;
        let hi = (i + 1) as f64 / r as f64;
        if !(a >= lo && a <= hi) {
            return Err(invalid_arg(format!(
                "alpha[{i}] = {a} lies outside its cell [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// Partition of `[0, h]` at `0, α_1h, δ, α_2h, 2δ, …, α_Rh, h` (δ = h/R).
/// Returns the `2R` cell lengths.
pub fn parallel_cell_lengths(h: f64, alphas: &[f64]) -> Vec<f64> {
    let r = alphas.len();
    let mut points = Vec::with_capacity(2 * r + 1);
    points.push(0.0);
    for (i, a) in alphas.iter().enumerate() {
        points.push(a * h);
        points.push((i + 1) as f64 / r as f64 * h);
    }
    points.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

/// Assembles parallel increments from the `2R` cells of [`parallel_cell_lengths`].
pub fn parallel_increments_from_cells(
    h: f64,
    alphas: &[f64],
    cells: &[IntervalStats],
) -> ParallelIncrements {
    assert_eq!(cells.len(), 2 * alphas.len(), "need two cells per midpoint");
    let dim = cells[0].dim();
    let mut prefix = IntervalStats::zero(dim);
    let mut w1 = Vec::with_capacity(alphas.len());
    for (i, alpha) in alphas.iter().enumerate() {
        prefix = compose(&prefix, &cells[2 * i]);
        let decay = (-2.0 * alpha * h).exp();
        w1.push(
            prefix
                .h
                .iter()
                .zip(&prefix.g)
                .map(|(hh, gg)| hh - decay * gg)
                .collect(),
        );
        prefix = compose(&prefix, &cells[2 * i + 1]);
    }
    let decay_end = (-2.0 * h).exp();
    ParallelIncrements {
        w1,
        w2: prefix
            .h
            .iter()
            .zip(&prefix.g)
            .map(|(hh, gg)| hh - decay_end * gg)
            .collect(),
        w3: prefix.g.iter().map(|gg| decay_end * gg).collect(),
    }
}

/// Samples the `R + 2` jointly Gaussian increments of a parallel step from one
/// Brownian path over `[0, h]`.
pub fn parallel_step_increments<R: Rng + ?Sized>(
    h: f64,
    alphas: &[f64],
    dim: usize,
    rng: &mut R,
) -> Result<ParallelIncrements> {
    check_step(h)?;
    validate_parallel_alphas(alphas)?;
    let cells: Vec<IntervalStats> = parallel_cell_lengths(h, alphas)
        .into_iter()
        .map(|len| sample_cell(len, dim, rng))
        .collect();
    Ok(parallel_increments_from_cells(h, alphas, &cells))
}

#[derive(Debug, Clone)]
struct Piece {
    offset: f64,
    stats: IntervalStats,
}

/// One Brownian path on `[0, n·base_step]`, stored as interval statistics on a
/// uniform base grid that can be refined on demand.
///
/// Refinement splits a cell by conditional sampling, so every query (at any
/// resolution, in any order) sees functionals of the same underlying path.
/// Used to couple discretizations with different step sizes.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    base_step: f64,
    dim: usize,
    cells: Vec<Vec<Piece>>,
}

/// Offsets closer than this fraction of a base cell to a grid point snap to it.
const SNAP: f64 = 1e-9;

impl BrownianPath {
    pub fn sample<R: Rng + ?Sized>(
        base_step: f64,
        n_cells: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_length(base_step)?;
        let cells = (0..n_cells)
            .map(|_| {
                vec![Piece {
                    offset: 0.0,
                    stats: sample_cell(base_step, dim, rng),
                }]
            })
            .collect();
        Ok(Self {
            base_step,
            dim,
            cells,
        })
    }

    pub fn base_step(&self) -> f64 {
        self.base_step
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.base_step * self.cells.len() as f64
    }

    /// Number of stored pieces, including refinements.
    pub fn n_pieces(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Statistics of base cell `i`, whatever refinements it has received.
    pub fn cell(&self, i: usize) -> IntervalStats {
        let pieces = &self.cells[i];
        if pieces.len() == 1 {
            return pieces[0].stats.clone();
        }
        pieces
            .iter()
            .skip(1)
            .fold(pieces[0].stats.clone(), |acc, p| compose(&acc, &p.stats))
    }

    /// Maps an offset from the left end of `start_cell` onto `(cell, offset in cell)`.
    fn locate(&self, start_cell: usize, offset: f64) -> (usize, f64) {
        let q = offset / self.base_step;
        let mut whole = q.floor();
        let mut rem = (q - whole) * self.base_step;
        if rem >= self.base_step * (1.0 - SNAP) {
            whole += 1.0;
            rem = 0.0;
        } else if rem <= self.base_step * SNAP {
            rem = 0.0;
        }
        (start_cell + whole as usize, rem)
    }

    /// Makes `(cell, rem)` a breakpoint and returns its canonical position,
    /// snapping onto an existing breakpoint when within rounding distance.
    fn ensure_breakpoint<R: Rng + ?Sized>(
        &mut self,
        cell: usize,
        rem: f64,
        rng: &mut R,
    ) -> Result<(usize, f64)> {
        if cell == self.cells.len() {
            return Ok((cell, 0.0));
        }
        let tol = self.base_step * SNAP;
        let pieces = &mut self.cells[cell];
        let idx = pieces.partition_point(|p| p.offset <= rem) - 1;
        let piece = &pieces[idx];
        let inside = rem - piece.offset;
        if inside <= tol {
            return Ok((cell, piece.offset));
        }
        if inside >= piece.stats.length - tol {
            return Ok(match pieces.get(idx + 1) {
                Some(next) => (cell, next.offset),
                None => (cell + 1, 0.0),
            });
        }
        let (left, right) = split(&piece.stats, inside, rng)?;
        let offset = piece.offset;
        pieces[idx] = Piece { offset, stats: left };
        pieces.insert(
            idx + 1,
            Piece {
                offset: rem,
                stats: right,
            },
        );
        Ok((cell, rem))
    }

    /// Statistics of consecutive intervals `[o_{k−1}, o_k]` (with `o_0 = 0`),
    /// offsets measured from the left end of base cell `start_cell`.
    ///
    /// Offsets must be non-decreasing and stay within the path.
    pub fn increments<R: Rng + ?Sized>(
        &mut self,
        start_cell: usize,
        offsets: &[f64],
        rng: &mut R,
    ) -> Result<Vec<IntervalStats>> {
        let mut bounds = Vec::with_capacity(offsets.len() + 1);
        bounds.push((start_cell, 0.0));
        let mut prev = 0.0;
        for &o in offsets {
            if !(o >= prev) {
                return Err(invalid_arg(format!("offsets must be non-decreasing, got {o} after {prev}")));
            }
            prev = o;
            let (cell, rem) = self.locate(start_cell, o);
            if cell > self.cells.len() || (cell == self.cells.len() && rem > 0.0) {
                return Err(invalid_arg(format!(
                    "offset {o} from cell {start_cell} runs past the path horizon {}",
                    self.horizon()
                )));
            }
            bounds.push((cell, rem));
        }
        if start_cell > self.cells.len() {
            return Err(invalid_arg("start cell beyond path"));
        }
        for b in bounds.iter_mut() {
            *b = self.ensure_breakpoint(b.0, b.1, rng)?;
        }
        let mut out = Vec::with_capacity(offsets.len());
        for w in bounds.windows(2) {
            out.push(self.between(w[0], w[1]));
        }
        Ok(out)
    }

    /// Composes all pieces between two existing breakpoints.
    fn between(&self, from: (usize, f64), to: (usize, f64)) -> IntervalStats {
        let mut acc = IntervalStats::zero(self.dim);
        let (mut cell, mut rem) = from;
        while (cell, rem) < to {
            let pieces = &self.cells[cell];
            let idx = pieces.partition_point(|p| p.offset <= rem) - 1;
            let piece = &pieces[idx];
            acc = compose(&acc, &piece.stats);
            if idx + 1 < pieces.len() {
                rem = pieces[idx + 1].offset;
            } else {
                cell += 1;
                rem = 0.0;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn covariance_matches_closed_form() {
        for t in [1e-3, 0.05, 0.2, 1.0, 3.0] {
            let c = IntervalCovariance::new(t);
            assert!((c.var_h - t).abs() < 1e-15);
            let var_g = ((4.0 * t).exp() - 1.0) / 4.0;
            let cov = ((2.0 * t).exp() - 1.0) / 2.0;
            assert!((c.var_g - var_g).abs() <= 1e-12 * var_g);
            assert!((c.cov_gh - cov).abs() <= 1e-12 * cov);
            let schur = var_g - cov * cov / t;
            assert!((c.residual - schur).abs() <= 1e-7 * schur, "t={t}: {} vs {schur}", c.residual);
        }
    }

    #[test]
    fn residual_is_stable_for_tiny_lengths() {
        // Var G − Cov²/t = t³/3 + O(t⁴)
        for t in [1e-12, 1e-10, 1e-8, 1e-6] {
            let c = IntervalCovariance::new(t);
            let lead = t * t * t / 3.0;
            assert!((c.residual / lead - 1.0).abs() < 10.0 * t, "t={t}");
            assert!(c.residual > 0.0);
        }
    }

    #[test]
    fn short_intervals_make_g_track_h() {
        let c = IntervalCovariance::new(1e-9);
        assert!((c.var_g / c.var_h - 1.0).abs() < 1e-8);
        let corr = c.cov_gh / (c.var_g * c.var_h).sqrt();
        assert!((corr - 1.0).abs() < 1e-8);
    }

    #[test]
    fn invalid_lengths_rejected() {
        let mut rng = stream(1, 0);
        for t in [0.0, -1.0, f64::NAN, f64::INFINITY, 1e4] {
            assert!(sample_interval(t, 2, &mut rng).is_err(), "{t}");
        }
    }

    #[test]
    fn compose_with_empty_interval_is_identity() {
        let mut rng = stream(2, 0);
        let a = sample_interval(0.3, 3, &mut rng).unwrap();
        assert_eq!(compose(&a, &IntervalStats::zero(3)), a);
        assert_eq!(compose(&IntervalStats::zero(3), &a), a);
    }

    #[test]
    fn split_rejects_points_outside_interval() {
        let mut rng = stream(3, 0);
        let p = sample_interval(1.0, 2, &mut rng).unwrap();
        for at in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(split(&p, at, &mut rng).is_err(), "{at}");
        }
    }

    #[test]
    fn split_then_compose_round_trips() {
        let mut rng = stream(4, 0);
        for &(len, at) in &[(1.0, 0.3), (0.05, 0.01), (1e-4, 3e-7), (2.0, 1.999)] {
            let p = sample_interval(len, 4, &mut rng).unwrap();
            let (l, r) = split(&p, at, &mut rng).unwrap();
            assert_eq!(l.length(), at);
            let back = compose(&l, &r);
            for i in 0..4 {
                let scale = p.h()[i].abs() + l.h()[i].abs() + r.h()[i].abs();
                assert!((back.h()[i] - p.h()[i]).abs() <= 1e-12 * scale);
                let scale = p.g()[i].abs() + l.g()[i].abs() + r.g()[i].abs();
                assert!((back.g()[i] - p.g()[i]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn alpha_zero_gives_zero_w1() {
        let mut rng = stream(5, 0);
        let inc = step_increments(0.05, 0.0, 3, &mut rng).unwrap();
        assert_eq!(inc.w1, vec![0.0; 3]);
        assert!(inc.w2.iter().all(|x| *x != 0.0));
    }

    #[test]
    fn step_increment_arguments_validated() {
        let mut rng = stream(6, 0);
        assert!(step_increments(0.0, 0.5, 1, &mut rng).is_err());
        assert!(step_increments(0.1, 1.5, 1, &mut rng).is_err());
        assert!(step_increments(0.1, -0.1, 1, &mut rng).is_err());
        assert!(parallel_step_increments(0.1, &[0.1, 0.3], 1, &mut rng).is_err());
        assert!(parallel_step_increments(0.1, &[], 1, &mut rng).is_err());
    }

    #[test]
    fn single_node_parallel_increments_reproduce_serial_ones() {
        for seed in 0..20 {
            let alpha = seed as f64 / 19.0;
            let serial = step_increments(0.04, alpha, 3, &mut stream(seed, 9)).unwrap();
            let par = parallel_step_increments(0.04, &[alpha], 3, &mut stream(seed, 9)).unwrap();
            assert_eq!(par.w1[0], serial.w1);
            assert_eq!(par.w2, serial.w2);
            assert_eq!(par.w3, serial.w3);
        }
    }

    #[test]
    fn parallel_cells_cover_the_step() {
        let lens = parallel_cell_lengths(0.2, &[0.1, 0.3, 0.7, 0.8]);
        assert_eq!(lens.len(), 8);
        assert!((lens.iter().sum::<f64>() - 0.2).abs() < 1e-15);
        assert!(lens.iter().all(|l| *l >= 0.0));
    }

    #[test]
    fn path_queries_are_consistent_with_base_cells() {
        let mut rng = stream(7, 0);
        let mut path = BrownianPath::sample(0.01, 40, 2, &mut rng).unwrap();
        let whole_before: Vec<IntervalStats> = (0..40).map(|i| path.cell(i)).collect();
        // refine at arbitrary points, then check the coarse view is unchanged
        let parts = path.increments(3, &[0.0137, 0.05, 0.0731, 0.1], &mut rng).unwrap();
        assert_eq!(parts.len(), 4);
        assert!(path.n_pieces() > 40);
        let total = parts[1..].iter().fold(parts[0].clone(), |a, b| compose(&a, b));
        let direct = (3..13).fold(IntervalStats::zero(2), |a, i| compose(&a, &whole_before[i]));
        assert!((total.length() - 0.1).abs() < 1e-12);
        for i in 0..2 {
            assert!((total.h()[i] - direct.h()[i]).abs() < 1e-12);
            assert!((total.g()[i] - direct.g()[i]).abs() < 1e-12);
        }
        for i in 0..40 {
            let c = path.cell(i);
            for k in 0..2 {
                assert!((c.h()[k] - whole_before[i].h()[k]).abs() < 1e-14);
                assert!((c.g()[k] - whole_before[i].g()[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn path_rejects_queries_past_horizon() {
        let mut rng = stream(8, 0);
        let mut path = BrownianPath::sample(0.1, 5, 1, &mut rng).unwrap();
        assert!(path.increments(0, &[0.5], &mut rng).is_ok());
        assert!(path.increments(3, &[0.25], &mut rng).is_err());
        assert!(path.increments(0, &[0.2, 0.1], &mut rng).is_err());
    }

    #[test]
    fn long_paths_stay_finite() {
        let mut rng = stream(9, 0);
        let mut path = BrownianPath::sample(1.0, 10_000, 2, &mut rng).unwrap();
        let parts = path.increments(9_990, &[0.5, 3.7, 10.0], &mut rng).unwrap();
        assert!(parts.iter().all(IntervalStats::is_finite));
        assert!((0..path.n_cells()).all(|i| path.cell(i).is_finite()));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = step_increments(0.05, 0.4, 5, &mut stream(11, 2)).unwrap();
        let b = step_increments(0.05, 0.4, 5, &mut stream(11, 2)).unwrap();
        assert_eq!(a, b);
    }
}
