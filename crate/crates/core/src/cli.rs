//! The `rmm` command-line front end.
//!
//! Every subcommand reads an optional TOML config file (`--config`) whose keys
//! are the long flag names with `-` replaced by `_`; flags given on the command
//! line override the file. Output is deterministic given config and seed.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{coupled_error_experiment, stationary_error_study, CoupledConfig};
use crate::error::{Error, Result};
use crate::samplers::{run_chains, schedule, schedule_parallel, Method, Schedule};
use crate::targets::{load_libsvm, logistic_target, quadratic_target, Dataset, GradientTarget, QuadraticTarget};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rmm", version, about = "Randomized midpoint Langevin sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run independent chains and write the final positions as CSV.
    Sample(CommandArgs),
    /// Measure stationary W2 error over a grid of target accuracies (quadratic targets).
    Convergence(CommandArgs),
    /// Coupled strong error against a fine reference for several step sizes.
    Fig1(CommandArgs),
    /// Print the step size and step count for an accuracy target as JSON.
    Schedule(CommandArgs),
}

#[derive(Debug, Args)]
struct CommandArgs {
    /// TOML file with default values for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

/// All settings a subcommand may use. Unset fields fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `quadratic` or `logistic`.
    #[arg(long)]
    pub target: Option<String>,
    /// Quadratic curvatures, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub diag: Option<Vec<f64>>,
    /// Quadratic center, comma separated (defaults to the origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    /// Dimension of a generated quadratic target (with `--kappa`).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Condition number: of a generated quadratic target, or for `schedule`.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Smoothness constant `L` for `schedule`.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// LIBSVM file, or `synthetic:NxD` for a generated dataset.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Ridge parameter of the logistic target.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Rescale each feature column affinely onto [-1, 1].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub scale_features: Option<bool>,
    /// rmm | rmm_parallel | euler_uld | exp_euler_uld | lmc
    #[arg(long)]
    pub method: Option<Method>,
    /// Methods compared by `fig1`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Explicit step size (with `--n-steps`) instead of an accuracy target.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<u64>,
    #[arg(long)]
    pub r_midpoints: Option<usize>,
    #[arg(long)]
    pub k_iters: Option<usize>,
    /// Use the parallel schedule in `schedule`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub parallel: Option<bool>,
    /// Step-size constant of the schedules.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub c_r: Option<f64>,
    #[arg(long)]
    pub c_k: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub h_values: Option<Vec<f64>>,
    #[arg(long)]
    pub t_total: Option<f64>,
    #[arg(long)]
    pub refinement: Option<usize>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        RunConfig { $($field: $top.$field.or($base.$field)),+ }
    };
}

impl RunConfig {
    /// Reads a TOML config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Configuration(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Error::Configuration(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> Self {
        overlay!(
            base, self, target, diag, center, dim, kappa, lipschitz, dataset, lambda,
            scale_features, method, methods, epsilon, epsilons, h, n_steps, r_midpoints,
            k_iters, parallel, c, c_r, c_k, seed, chains, h_values, t_total, refinement, out
        )
    }

    /// Fills every default this subcommand relies on, so the result can be
    /// recorded as the full resolved configuration.
    fn resolved(mut self) -> Self {
        self.method.get_or_insert(Method::Rmm);
        self.seed.get_or_insert(0);
        self.chains.get_or_insert(1);
        self.c.get_or_insert(0.5);
        self.c_r.get_or_insert(1.0);
        self.c_k.get_or_insert(3.0);
        self.scale_features.get_or_insert(false);
        if self.target.as_deref() == Some("logistic") {
            self.lambda.get_or_insert(1e-2);
        }
        self
    }
}

enum Target {
    Quadratic(QuadraticTarget),
    Logistic(Box<crate::targets::LogisticTarget>),
}

impl Target {
    fn as_dyn(&self) -> &dyn GradientTarget {
        match self {
            Target::Quadratic(q) => q,
            Target::Logistic(l) => l.as_ref(),
        }
    }
}

fn load_dataset(spec: &str, scale: bool) -> Result<Dataset> {
    if let Some(shape) = spec.strip_prefix("synthetic:") {
        let parsed = shape
            .split_once('x')
            .and_then(|(n, d)| Some((n.parse().ok()?, d.parse().ok()?)));
        let (n, d): (usize, usize) = parsed.ok_or_else(|| {
            Error::Configuration(format!("synthetic dataset must look like synthetic:100x5, got {spec}"))
        })?;
        let mut data = Dataset::synthetic(n, d, 0)?;
        if scale {
            data.scale_columns();
        }
        return Ok(data);
    }
    load_libsvm(spec, scale)
}

fn build_target(cfg: &RunConfig) -> Result<Target> {
    match cfg.target.as_deref() {
        Some("quadratic") => {
            if let Some(diag) = &cfg.diag {
                let center = cfg.center.clone().unwrap_or_else(|| vec![0.0; diag.len()]);
                Ok(Target::Quadratic(quadratic_target(diag, &center)?))
            } else if let Some(kappa) = cfg.kappa {
                let dim = cfg.dim.unwrap_or(2);
                Ok(Target::Quadratic(QuadraticTarget::with_condition_number(dim, 1.0, kappa)?))
            } else {
                Err(Error::Configuration("quadratic target needs --diag or --kappa".into()))
            }
        }
        Some("logistic") => {
            let spec = cfg
                .dataset
                .as_deref()
                .ok_or_else(|| Error::Configuration("logistic target needs --dataset".into()))?;
            let data = load_dataset(spec, cfg.scale_features.unwrap_or(false))?;
            let t = logistic_target(data, cfg.lambda.unwrap_or(1e-2))?;
            Ok(Target::Logistic(Box::new(t)))
        }
        Some(other) => Err(Error::Configuration(format!(
            "unknown target {other:?}; expected quadratic or logistic"
        ))),
        None => Err(Error::Configuration("--target is required".into())),
    }
}

fn build_schedule(cfg: &RunConfig, target: &dyn GradientTarget, method: Method) -> Result<Schedule> {
    let l = target.smoothness();
    match (cfg.h, cfg.n_steps, cfg.epsilon) {
        (Some(h), Some(n), _) => {
            Schedule::explicit(h, n, l, cfg.r_midpoints.unwrap_or(1), cfg.k_iters.unwrap_or(2))
        }
        (None, None, Some(eps)) => accuracy_schedule(cfg, eps, target.condition_number(), l, method),
        _ => Err(Error::Configuration(
            "give either --epsilon or both --h and --n-steps".into(),
        )),
    }
}

fn accuracy_schedule(cfg: &RunConfig, eps: f64, kappa: f64, l: f64, method: Method) -> Result<Schedule> {
    let c = cfg.c.unwrap_or(0.5);
    if method == Method::RmmParallel {
        schedule_parallel(eps, kappa, c, l, cfg.c_r.unwrap_or(1.0), cfg.c_k.unwrap_or(3.0))
    } else {
        schedule(eps, kappa, c, l)
    }
}

fn metadata_line(kind: &str, cfg: &RunConfig, extra: serde_json::Value) -> Result<String> {
    let meta = serde_json::json!({
        "command": kind,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "run": extra,
    });
    serde_json::to_string(&meta).map_err(|e| Error::Format(e.to_string()))
}

/// `sample`: one CSV row per chain with its final position.
pub fn cmd_sample(cfg: &RunConfig) -> Result<String> {
    let cfg = cfg.clone().resolved();
    let target = build_target(&cfg)?;
    let t = target.as_dyn();
    let method = cfg.method.unwrap_or(Method::Rmm);
    let sched = build_schedule(&cfg, t, method)?;
    let chains = cfg.chains.unwrap_or(1);
    let seed = cfg.seed.unwrap_or(0);
    let runs = run_chains(method, t, &sched, chains, seed, None)?;
    let grad_evals: u64 = runs.iter().map(|r| r.grad_evals).sum();
    let mut out = String::new();
    let meta = serde_json::json!({
        "method": method,
        "h": sched.h,
        "n_steps": sched.n_steps,
        "seed": seed,
        "chains": chains,
        "schedule": sched,
        "grad_evals": grad_evals,
        "grad_evals_per_chain": runs.first().map_or(0, |r| r.grad_evals),
    });
    writeln!(out, "# {}", metadata_line("sample", &cfg, meta)?).unwrap();
    let header: Vec<String> = (1..=t.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "chain,{}", header.join(",")).unwrap();
    for (c, r) in runs.iter().enumerate() {
        let xs: Vec<String> = r.state.x.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{c},{}", xs.join(",")).unwrap();
    }
    Ok(out)
}

/// `convergence`: stationary W2 error at each requested accuracy.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<String> {
    let mut cfg = cfg.clone().resolved();
    cfg.chains = Some(cfg.chains.filter(|&c| c > 1).unwrap_or(1000));
    let target = build_target(&cfg)?;
    let t = target.as_dyn();
    if t.as_quadratic().is_none() {
        return Err(Error::UnsupportedTarget(
            "convergence needs a quadratic target, whose law is Gaussian".into(),
        ));
    }
    let method = cfg.method.unwrap_or(Method::Rmm);
    let epsilons = cfg
        .epsilons
        .clone()
        .or_else(|| cfg.epsilon.map(|e| vec![e]))
        .unwrap_or_else(|| vec![0.5, 0.25]);
    let mut out = String::new();
    writeln!(out, "# {}", metadata_line("convergence", &cfg, serde_json::json!({}))?).unwrap();
    writeln!(out, "epsilon,h,N,w2,w2_normalized,ci_low,ci_high").unwrap();
    for eps in epsilons {
        let sched = accuracy_schedule(&cfg, eps, t.condition_number(), t.smoothness(), method)?;
        let r = stationary_error_study(t, method, &sched, cfg.chains.unwrap(), cfg.seed.unwrap())
            ?;
        writeln!(
            out,
            "{eps},{},{},{},{},{},{}",
            sched.h,
            sched.n_steps,
            r.distance,
            r.normalized,
            r.ci_low.unwrap_or(f64::NAN),
            r.ci_high.unwrap_or(f64::NAN)
        )
        .unwrap();
    }
    Ok(out)
}

/// `fig1`: coupled error table with a slope fit per method in the footer.
pub fn cmd_fig1(cfg: &RunConfig) -> Result<String> {
    let mut cfg = cfg.clone().resolved();
    cfg.chains = Some(cfg.chains.filter(|&c| c > 1).unwrap_or(10));
    cfg.h_values.get_or_insert_with(|| vec![0.025, 0.05, 0.1, 0.2]);
    cfg.t_total.get_or_insert(10.0);
    cfg.refinement.get_or_insert(64);
    cfg.methods.get_or_insert_with(|| vec![Method::Rmm, Method::ExpEulerUld]);
    let target = build_target(&cfg)?;
    let t = target.as_dyn();
    let exp = CoupledConfig {
        h_values: cfg.h_values.clone().unwrap(),
        horizon: cfg.t_total.unwrap(),
        chains: cfg.chains.unwrap(),
        seed: cfg.seed.unwrap(),
        reference_refinement: cfg.refinement.unwrap(),
        methods: cfg.methods.clone().unwrap(),
        midpoints: cfg.r_midpoints.unwrap_or(4),
        fixed_point_iters: cfg.k_iters.unwrap_or(3),
        start: None,
    };
    let report = coupled_error_experiment(t, &exp)?;
    let mut out = String::new();
    let meta = serde_json::json!({ "reference_step": report.reference_step });
    writeln!(out, "# {}", metadata_line("fig1", &cfg, meta)?).unwrap();
    writeln!(out, "h,method,mean_error,std_error").unwrap();
    for r in &report.rows {
        writeln!(out, "{},{},{},{}", r.h, r.method, r.mean_error, r.std_error).unwrap();
    }
    for (m, s) in &report.slopes {
        writeln!(out, "# slope,{m},{s}").unwrap();
    }
    if let Some(e) = report.reference_error {
        writeln!(out, "# reference_error,{e}").unwrap();
    }
    Ok(out)
}

/// `schedule`: the accuracy-driven step size and counts as one JSON object.
pub fn cmd_schedule(cfg: &RunConfig) -> Result<String> {
    let cfg = cfg.clone().resolved();
    let eps = cfg
        .epsilon
        .ok_or_else(|| Error::Configuration("--epsilon is required".into()))?;
    let kappa = cfg
        .kappa
        .ok_or_else(|| Error::Configuration("--kappa is required".into()))?;
    let l = cfg.lipschitz.unwrap_or(1.0);
    let method = if cfg.parallel.unwrap_or(false) {
        Method::RmmParallel
    } else {
        Method::Rmm
    };
    let s = accuracy_schedule(&cfg, eps, kappa, l, method)?;
    let json = if method == Method::RmmParallel {
        serde_json::json!({ "h": s.h, "R": s.midpoints, "K": s.fixed_point_iters, "N": s.n_steps })
    } else {
        serde_json::json!({ "h": s.h, "N": s.n_steps })
    };
    Ok(format!("{json}\n"))
}

/// Maps an error onto the documented exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } | Error::Format(_) => EXIT_RUNTIME,
        _ => EXIT_CONFIG,
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (args, cmd): (CommandArgs, fn(&RunConfig) -> Result<String>) = match cli.command {
        Command::Sample(a) => (a, cmd_sample),
        Command::Convergence(a) => (a, cmd_convergence),
        Command::Fig1(a) => (a, cmd_fig1),
        Command::Schedule(a) => (a, cmd_schedule),
    };
    let result = (|| {
        let base = match &args.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let cfg = args.run.over(base);
        let text = cmd(&cfg)?;
        write_output(cfg.out.as_deref(), &text)
    })();
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rmm: {e}");
            exit_code(&e)
        }
    }
}
