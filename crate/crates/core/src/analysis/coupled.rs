use rayon::prelude::*;
use serde::Serialize;

use crate::brownian::{parallel_increments_from_cells, BrownianPath, StepIncrements};
use crate::error::{Error, Result};
use crate::rng::{stream, uniform, SamplerRng};
use crate::samplers::{
    euler_uld_step_with_noise, exponential_euler_uld_step, initial_state, parallel_rmm_step, rmm_step,
    Method, SamplerState,
};
use crate::targets::GradientTarget;

/// Settings for a strong-error sweep over step sizes on shared Brownian paths.
#[derive(Debug, Clone, Serialize)]
pub struct CoupledConfig {
    pub h_values: Vec<f64>,
    pub horizon: f64,
    pub chains: usize,
    pub seed: u64,
    /// Reference step is `min(h_values) / reference_refinement`; at least 32.
    pub reference_refinement: usize,
    pub methods: Vec<Method>,
    /// Node count and sweep count used when `methods` includes the parallel scheme.
    pub midpoints: usize,
    pub fixed_point_iters: usize,
    /// Starting position (at rest); defaults to the target minimizer.
    pub start: Option<Vec<f64>>,
}

impl CoupledConfig {
    pub fn new(h_values: Vec<f64>, horizon: f64) -> Self {
        Self {
            h_values,
            horizon,
            chains: 10,
            seed: 0,
            reference_refinement: 64,
            methods: vec![Method::Rmm, Method::ExpEulerUld],
            midpoints: 4,
            fixed_point_iters: 3,
            start: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoupledRow {
    pub h: f64,
    pub method: Method,
    /// Mean over chains of `‖x_method(T) − x_ref(T)‖`.
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoupledReport {
    pub rows: Vec<CoupledRow>,
    /// Least-squares slope of `log error` against `log h`, per method.
    pub slopes: Vec<(Method, f64)>,
    pub reference_step: f64,
    /// Mean distance between the reference and the same scheme at twice its
    /// step: an estimate of the reference's own error.
    pub reference_error: Option<f64>,
}

impl CoupledReport {
    pub fn error(&self, method: Method, h: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.h == h)
            .map(|r| r.mean_error)
    }

    pub fn slope(&self, method: Method) -> Option<f64> {
        self.slopes.iter().find(|(m, _)| *m == method).map(|(_, s)| *s)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn whole_multiple(value: f64, unit: f64, what: &str) -> Result<usize> {
    let q = value / unit;
    let k = q.round();
    if k < 1.0 || (q - k).abs() > 1e-9 * k {
        return Err(Error::Configuration(format!(
            "{what}: {value} is not a whole multiple of {unit}"
        )));
    }
    Ok(k as usize)
}

/// Runs `method` with step `h` on the Brownian path, from `start` to the path
/// horizon. `h` must be a whole number of base cells; interior points
/// (midpoints) are inserted by conditional splitting, drawing from `rng`.
pub fn run_on_path<T: GradientTarget + ?Sized>(
    method: Method,
    target: &T,
    path: &mut BrownianPath,
    h: f64,
    (midpoints, fixed_point_iters): (usize, usize),
    start: SamplerState,
    rng: &mut SamplerRng,
) -> Result<SamplerState> {
    let per_step = whole_multiple(h, path.base_step(), "step size")?;
    if path.n_cells() % per_step != 0 {
        return Err(Error::Configuration(format!(
            "step {h} does not divide the path horizon {}",
            path.horizon()
        )));
    }
    let n_steps = path.n_cells() / per_step;
    let mut state = start;
    for k in 0..n_steps {
        let cell = k * per_step;
        state = match method {
            Method::Rmm => {
                let alpha = uniform(rng);
                let c = path.increments(cell, &[alpha * h, h], rng)?;
                let inc = StepIncrements::from_cells(h, alpha, &c[0], &c[1]);
                rmm_step(&state, target, h, alpha, &inc)?
            }
            Method::RmmParallel => {
                let r = midpoints;
                let alphas: Vec<f64> = (0..r).map(|i| (i as f64 + uniform(rng)) / r as f64).collect();
                let mut offsets = Vec::with_capacity(2 * r);
                for (i, a) in alphas.iter().enumerate() {
                    offsets.push(a * h);
                    offsets.push(if i + 1 == r { h } else { (i + 1) as f64 / r as f64 * h });
                }
                let c = path.increments(cell, &offsets, rng)?;
                let inc = parallel_increments_from_cells(h, &alphas, &c);
                parallel_rmm_step(&state, target, h, fixed_point_iters, &alphas, &inc)?
            }
            Method::ExpEulerUld => {
                let c = path.increments(cell, &[h], rng)?;
                let inc = StepIncrements::from_whole_step(h, &c[0]);
                exponential_euler_uld_step(&state, target, h, &inc.w2, &inc.w3)?
            }
            Method::EulerUld => {
                let c = path.increments(cell, &[h], rng)?;
                let zeta: Vec<f64> = c[0].h().iter().map(|b| b / h.sqrt()).collect();
                euler_uld_step_with_noise(&state, target, h, &zeta)?
            }
            Method::Lmc => {
                return Err(Error::Configuration(
                    "the overdamped scheme follows a different diffusion and cannot be coupled".into(),
                ))
            }
        };
    }
    Ok(state)
}

/// The reference trajectory: exponential Euler on every base cell of the path.
pub fn reference_on_path<T: GradientTarget + ?Sized>(
    target: &T,
    path: &mut BrownianPath,
    start: SamplerState,
    rng: &mut SamplerRng,
) -> Result<SamplerState> {
    let h = path.base_step();
    run_on_path(Method::ExpEulerUld, target, path, h, (1, 2), start, rng)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct ChainErrors {
    errors: Vec<f64>,
    reference: Option<f64>,
}

/// Strong error at time `T` of each method and step size against a fine
/// reference driven by the same Brownian path, averaged over chains.
pub fn coupled_error_experiment<T: GradientTarget + ?Sized>(
    target: &T,
    config: &CoupledConfig,
) -> Result<CoupledReport> {
    if config.h_values.is_empty() || config.methods.is_empty() {
        return Err(Error::Configuration("need at least one step size and one method".into()));
    }
    if config.reference_refinement < 32 {
        return Err(Error::Configuration(format!(
            "reference refinement must be at least 32, got {}",
            config.reference_refinement
        )));
    }
    if config.chains == 0 {
        return Err(Error::Configuration("need at least one chain".into()));
    }
    if config.h_values.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::Configuration("step sizes must be positive".into()));
    }
    if config.methods.contains(&Method::RmmParallel) && (config.midpoints == 0 || config.fixed_point_iters < 2) {
        return Err(Error::Configuration("parallel scheme needs R ≥ 1 and K ≥ 2".into()));
    }
    let h_min = config.h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_ref = h_min / config.reference_refinement as f64;
    let n_ref = whole_multiple(config.horizon, h_ref, "horizon")?;
    for &h in &config.h_values {
        whole_multiple(h, h_ref, "step size")?;
        whole_multiple(config.horizon, h, "horizon")?;
    }
    let init = initial_state(target, config.start.as_deref())?;
    let d = target.dim();
    let parallel = (config.midpoints, config.fixed_point_iters);

    let per_chain: Vec<ChainErrors> = (0..config.chains)
        .into_par_iter()
        .map(|c| -> Result<ChainErrors> {
            let mut rng = stream(config.seed, c as u64);
            let mut path = BrownianPath::sample(h_ref, n_ref, d, &mut rng)?;
            let reference = reference_on_path(target, &mut path, init.clone(), &mut rng)?;
            let mut errors = Vec::with_capacity(config.methods.len() * config.h_values.len());
            for &m in &config.methods {
                for &h in &config.h_values {
                    let out = run_on_path(m, target, &mut path, h, parallel, init.clone(), &mut rng)?;
                    errors.push(distance(&out.x, &reference.x));
                }
            }
            let coarse_ref = if n_ref % 2 == 0 {
                let out = run_on_path(Method::ExpEulerUld, target, &mut path, 2.0 * h_ref, parallel, init.clone(), &mut rng)?;
                Some(distance(&out.x, &reference.x))
            } else {
                None
            };
            Ok(ChainErrors {
                errors,
                reference: coarse_ref,
            })
        })
        .collect::<Result<_>>()?;

    let n = config.chains as f64;
    let mut rows = Vec::new();
    let mut k = 0;
    for &m in &config.methods {
        for &h in &config.h_values {
            let vals: Vec<f64> = per_chain.iter().map(|c| c.errors[k]).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = if config.chains > 1 {
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            rows.push(CoupledRow {
                h,
                method: m,
                mean_error: mean,
                std_error: (var / n).sqrt(),
            });
            k += 1;
        }
    }
    let slopes = if config.h_values.len() >= 2 {
        config
            .methods
            .iter()
            .map(|&m| {
                let (hs, es): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.method == m)
                    .map(|r| (r.h, r.mean_error))
                    .unzip();
                (m, fit_loglog_slope(&hs, &es))
            })
            .collect()
    } else {
        Vec::new()
    };
    let reference_error = per_chain
        .iter()
        .map(|c| c.reference)
        .sum::<Option<f64>>()
        .map(|s| s / n);
    Ok(CoupledReport {
        rows,
        slopes,
        reference_step: h_ref,
        reference_error,
    })
}
