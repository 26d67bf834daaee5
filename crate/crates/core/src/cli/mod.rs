//! Command-line driver: configs in, CSV tables and a manifest out.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::circuit::{DisorderMode, DisorderSpec};
use crate::error::Error;
use crate::experiments::{
    collapse_scan, curves_from_results, fidelity_scaling, find_crossing, grid, instability_ensemble, scaling_collapse,
    sweep, CollapseSpec, CrossingResult, Curve, EnsembleResult, PointKey,
};
use crate::meanfield::{self, MeanFieldParams};
use config::{CollapseConfig, ConfigError, GridConfig, InstabilityConfig, MeanFieldConfig, SweepConfig, XebConfig};
use output::{Manifest, Table};

const SWEEP_COLUMNS: &str = "\
Writes sweep.csv with columns:
  n, ratio (sigma/q_bar), depth, mean, std, stderr, count, non_finite
and manifest.toml.";

const MEANFIELD_COLUMNS: &str = "\
Writes fixed_points.csv (delta1, g_plus, g_minus, eig1_re, eig1_im, eig2_re, eig2_im, stable),
threshold.csv (j, p, threshold), trajectories.csv (delta1, t, g_plus, g_minus, norm, diverged)
and manifest.toml.";

const INSTABILITY_COLUMNS: &str = "\
Writes instability.csv (n, draw, seed, region_start, region_len, d_min, d_max, slope, intercept, r2, slope_stderr),
traces.csv (n, draw, depth, log_trace_plus), summary.csv (n, draws, mean_slope, slope_stderr, mean_r2, pooled_slope, pooled_r2)
and manifest.toml.";

const XEB_COLUMNS: &str = "\
Writes fidelity.csv (n, ratio, depth, mean_log_xeb_m, std_log_xeb_m, stderr_log_xeb_m, count, non_finite,
neg_log_f_m_per_n, std_log_f_m, neg_log_f_per_n, std_log_f, non_finite_f_m), beta.csv (n, ratio, beta,
prefactor, r2) and manifest.toml. Exact columns are NaN unless `exact = true`.";

const COLLAPSE_COLUMNS: &str = "\
Writes crossing.csv (n_a, n_b, crossing), collapsed.csv (n, x_scaled, y), collapse.csv (sigma_c, mu, quality),
surface.csv (sigma_c, mu, quality) when scanning, and manifest.toml.";

#[derive(Debug, Parser)]
#[command(name = "pecthresh", version, about = "Error-mitigation threshold experiments for noisy random circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Clone)]
pub struct CollapseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub sigma_c: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probe sweep over sigma/q_bar and system size.
    #[command(after_help = SWEEP_COLUMNS)]
    Sweep(CommonArgs),
    /// Mean-field fixed points, stability, threshold and trajectories.
    #[command(after_help = MEANFIELD_COLUMNS)]
    Meanfield(CommonArgs),
    /// Growth of the positive trace sector on quenched 1D chains.
    #[command(after_help = INSTABILITY_COLUMNS)]
    Instability(CommonArgs),
    /// Mitigated and unmitigated fidelity scaling.
    #[command(after_help = XEB_COLUMNS)]
    Xeb(CommonArgs),
    /// Crossing and scaling collapse of sweep data.
    #[command(after_help = COLLAPSE_COLUMNS)]
    Collapse(CollapseArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn invalid_config(e: Error) -> CliError {
    CliError::Config(ConfigError(format!("invalid config: {e}")))
}

type Outcome = Result<Vec<PathBuf>, CliError>;

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let common = match &cli.command {
        Command::Sweep(c) | Command::Meanfield(c) | Command::Instability(c) | Command::Xeb(c) => c.clone(),
        Command::Collapse(c) => c.common.clone(),
    };
    let threads = match common.workers {
        Some(0) => return Err(CliError::Config(ConfigError("--workers must be at least 1".into()))),
        Some(k) => k,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Run(Error::Io(format!("cannot start worker pool: {e}"))))?;
    pool.install(|| match cli.command {
        Command::Sweep(c) => run_sweep(&c, threads),
        Command::Meanfield(c) => run_meanfield(&c, threads),
        Command::Instability(c) => run_instability(&c, threads),
        Command::Xeb(c) => run_xeb(&c, threads),
        Command::Collapse(c) => run_collapse(&c, threads),
    })
}

struct Run<'a> {
    name: &'static str,
    common: &'a CommonArgs,
    workers: usize,
    started: Instant,
    started_unix: u64,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(name: &'static str, common: &'a CommonArgs, workers: usize) -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { name, common, workers, started: Instant::now(), started_unix, outputs: Vec::new() }
    }

    fn write(&mut self, file: &str, table: &Table) -> Result<(), CliError> {
        let path = self.common.out.join(file);
        output::write_atomic(&path, &table.to_bytes()?)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish<C: Serialize>(mut self, seed: u64, config: C) -> Outcome {
        let manifest = Manifest {
            subcommand: self.name.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            workers: self.workers,
            started_unix: self.started_unix,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self
                .outputs
                .iter()
                .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
                .collect(),
            config,
        };
        let path = manifest.write(&self.common.out)?;
        self.outputs.push(path);
        Ok(self.outputs)
    }
}

pub fn sweep_table(rows: &[EnsembleResult]) -> Table {
    let mut t = Table::new(&["n", "ratio", "depth", "mean", "std", "stderr", "count", "non_finite"]);
    for r in rows {
        t.push(vec![
            r.key.n.into(),
            r.key.ratio.into(),
            r.key.depth.into(),
            r.mean.into(),
            r.std.into(),
            r.stderr.into(),
            r.count.into(),
            r.non_finite.into(),
        ]);
    }
    t
}

fn run_sweep(common: &CommonArgs, workers: usize) -> Outcome {
    let mut spec: SweepConfig = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(invalid_config)?;
    let rows = sweep(&spec)?;
    let mut run = Run::new("sweep", common, workers);
    run.write("sweep.csv", &sweep_table(&rows))?;
    run.finish(spec.seed, spec)
}

fn run_meanfield(common: &CommonArgs, workers: usize) -> Outcome {
    let mut cfg: MeanFieldConfig = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if cfg.delta1.is_empty() {
        return Err(invalid_config(Error::InvalidArgument("delta1 must list at least one value".into())));
    }
    let params: Vec<MeanFieldParams> = cfg
        .delta1
        .iter()
        .map(|&d| MeanFieldParams::from_delta1(cfg.j, d, cfg.p, cfg.gamma_a, 2))
        .collect::<Result<_, _>>()
        .map_err(invalid_config)?;
    let dt = cfg.dt.unwrap_or_else(|| meanfield::default_dt(&params[0]));

    let mut fixed = Table::new(&["delta1", "g_plus", "g_minus", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "stable"]);
    let mut traj = Table::new(&["delta1", "t", "g_plus", "g_minus", "norm", "diverged"]);
    for (m, &d) in params.iter().zip(&cfg.delta1) {
        for fp in meanfield::fixed_points(m)? {
            fixed.push(vec![
                d.into(),
                fp.g_plus.into(),
                fp.g_minus.into(),
                fp.eigenvalues[0].re.into(),
                fp.eigenvalues[0].im.into(),
                fp.eigenvalues[1].re.into(),
                fp.eigenvalues[1].im.into(),
                fp.stable.into(),
            ]);
        }
        let tr = meanfield::probe_origin(m, cfg.t_end, dt, cfg.seed)?;
        for (t, s) in tr.times.iter().zip(&tr.states) {
            traj.push(vec![d.into(), (*t).into(), s[0].into(), s[1].into(), s[0].hypot(s[1]).into(), tr.diverged.into()]);
        }
    }
    let mut threshold = Table::new(&["j", "p", "threshold"]);
    threshold.push(vec![cfg.j.into(), cfg.p.into(), meanfield::stability_threshold(&params[0])?.into()]);

    let mut run = Run::new("meanfield", common, workers);
    run.write("fixed_points.csv", &fixed)?;
    run.write("threshold.csv", &threshold)?;
    run.write("trajectories.csv", &traj)?;
    run.finish(cfg.seed, cfg)
}

fn run_instability(common: &CommonArgs, workers: usize) -> Outcome {
    let mut cfg: InstabilityConfig = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let disorder = DisorderSpec::new(cfg.p, cfg.q1, cfg.q2, DisorderMode::Quenched, cfg.seed).map_err(invalid_config)?;
    if cfg.sizes.is_empty() || cfg.draws == 0 {
        return Err(invalid_config(Error::InvalidArgument("sizes and draws must be nonempty".into())));
    }
    let mut fits = Table::new(&[
        "n", "draw", "seed", "region_start", "region_len", "d_min", "d_max", "slope", "intercept", "r2", "slope_stderr",
    ]);
    let mut traces = Table::new(&["n", "draw", "depth", "log_trace_plus"]);
    let mut summary = Table::new(&["n", "draws", "mean_slope", "slope_stderr", "mean_r2", "pooled_slope", "pooled_r2"]);
    for &n in &cfg.sizes {
        let s = instability_ensemble(n, &disorder, cfg.d_max, cfg.form.into(), cfg.draws)?;
        for (k, f) in s.fits.iter().enumerate() {
            fits.push(vec![
                n.into(),
                k.into(),
                crate::rng::derive_seed(cfg.seed, k as u64).into(),
                f.region_start.into(),
                f.region_len.into(),
                f.window.0.into(),
                f.window.1.into(),
                f.slope.into(),
                f.intercept.into(),
                f.r2.into(),
                f.slope_stderr.into(),
            ]);
            for (d, v) in f.log_trace_plus.iter().enumerate() {
                traces.push(vec![n.into(), k.into(), (d + 1).into(), (*v).into()]);
            }
        }
        summary.push(vec![
            n.into(),
            cfg.draws.into(),
            s.mean_slope.into(),
            s.slope_stderr.into(),
            s.mean_r2.into(),
            s.pooled.slope.into(),
            s.pooled.r2.into(),
        ]);
    }
    let mut run = Run::new("instability", common, workers);
    run.write("instability.csv", &fits)?;
    run.write("traces.csv", &traces)?;
    run.write("summary.csv", &summary)?;
    run.finish(cfg.seed, cfg)
}

fn run_xeb(common: &CommonArgs, workers: usize) -> Outcome {
    let mut spec: XebConfig = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(invalid_config)?;
    let table = fidelity_scaling(&spec)?;
    let mut rows = Table::new(&[
        "n",
        "ratio",
        "depth",
        "mean_log_xeb_m",
        "std_log_xeb_m",
        "stderr_log_xeb_m",
        "count",
        "non_finite",
        "neg_log_f_m_per_n",
        "std_log_f_m",
        "neg_log_f_per_n",
        "std_log_f",
        "non_finite_f_m",
    ]);
    for r in &table.rows {
        let x = &r.log_xeb_mitigated;
        let n = x.key.n as f64;
        let (fm, fm_std, fm_bad) = r.log_f_mitigated.map_or((f64::NAN, f64::NAN, 0), |e| (-e.mean / n, e.std, e.non_finite));
        let (fu, fu_std) = r.log_f_unmitigated.map_or((f64::NAN, f64::NAN), |e| (-e.mean / n, e.std));
        rows.push(vec![
            x.key.n.into(),
            x.key.ratio.into(),
            x.key.depth.into(),
            x.mean.into(),
            x.std.into(),
            x.stderr.into(),
            x.count.into(),
            x.non_finite.into(),
            fm.into(),
            fm_std.into(),
            fu.into(),
            fu_std.into(),
            fm_bad.into(),
        ]);
    }
    let mut beta = Table::new(&["n", "ratio", "beta", "prefactor", "r2"]);
    for b in &table.beta {
        beta.push(vec![b.n.into(), b.ratio.into(), b.beta.into(), b.prefactor.into(), b.r2.into()]);
    }
    let mut run = Run::new("xeb", common, workers);
    run.write("fidelity.csv", &rows)?;
    run.write("beta.csv", &beta)?;
    run.finish(spec.seed, spec)
}

/// Read a table written by `sweep`.
pub fn read_sweep_table(path: &Path) -> Result<Vec<EnsembleResult>, CliError> {
    let bad = |e: String| CliError::Config(ConfigError(format!("cannot read sweep data {}: {e}", path.display())));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| r.get(k).ok_or_else(|| bad(format!("row has only {} columns", r.len())));
        let float = |k: usize| -> Result<f64, CliError> { field(k)?.parse().map_err(|e| bad(format!("{e}"))) };
        let int = |k: usize| -> Result<usize, CliError> { field(k)?.parse().map_err(|e| bad(format!("{e}"))) };
        rows.push(EnsembleResult {
            key: PointKey { n: int(0)?, ratio: float(1)?, depth: int(2)? },
            mean: float(3)?,
            std: float(4)?,
            stderr: float(5)?,
            count: int(6)?,
            non_finite: int(7)?,
        });
    }
    Ok(rows)
}

fn grid_of(g: &GridConfig) -> Result<Vec<f64>, CliError> {
    if !(g.step > 0.0 && g.stop >= g.start) {
        return Err(CliError::Config(ConfigError(format!("invalid grid {g:?}"))));
    }
    Ok(grid(g.start, g.stop, g.step))
}

fn collapsed_table(curves: &[Curve]) -> Table {
    let mut t = Table::new(&["n", "x_scaled", "y"]);
    for c in curves {
        for (x, y) in c.x.iter().zip(&c.y) {
            t.push(vec![c.n.into(), (*x).into(), (*y).into()]);
        }
    }
    t
}

fn run_collapse(args: &CollapseArgs, workers: usize) -> Outcome {
    let common = &args.common;
    let mut cfg: CollapseConfig = config::load(&common.config)?;
    if let Some(s) = args.sigma_c {
        cfg.sigma_c = Some(s);
    }
    if let Some(m) = args.mu {
        cfg.mu = Some(m);
    }
    let mut seed = 0;
    let mut run = Run::new("collapse", common, workers);
    let rows = match (&cfg.data, cfg.sweep.as_mut()) {
        (Some(path), None) => read_sweep_table(path)?,
        (None, Some(spec)) => {
            if let Some(s) = common.seed {
                spec.seed = s;
            }
            seed = spec.seed;
            spec.validate().map_err(invalid_config)?;
            let rows = sweep(spec)?;
            run.write("sweep.csv", &sweep_table(&rows))?;
            rows
        }
        _ => return Err(CliError::Config(ConfigError("invalid config: set exactly one of `data` or `sweep`".into()))),
    };
    let curves = curves_from_results(&rows)?;

    let mut crossing = Table::new(&["n_a", "n_b", "crossing"]);
    let pairs = match find_crossing(&curves)? {
        CrossingResult::Found { pairs, .. } | CrossingResult::NoCrossing { pairs } => pairs,
    };
    for p in &pairs {
        crossing.push(vec![p.n_a.into(), p.n_b.into(), p.x.unwrap_or(f64::NAN).into()]);
    }
    run.write("crossing.csv", &crossing)?;

    let mut single = Table::new(&["sigma_c", "mu", "quality"]);
    let chosen = match (cfg.sigma_c, cfg.mu, &cfg.sigma_grid, &cfg.mu_grid) {
        (_, _, Some(sg), Some(mg)) => {
            let surface = collapse_scan(&curves, &grid_of(sg)?, &grid_of(mg)?, cfg.y_exponent)?;
            let mut t = Table::new(&["sigma_c", "mu", "quality"]);
            for c in &surface.cells {
                t.push(vec![c.sigma_c.into(), c.mu.into(), c.quality.into()]);
            }
            run.write("surface.csv", &t)?;
            CollapseSpec::new(surface.best.sigma_c, surface.best.mu, cfg.y_exponent)?
        }
        (Some(s), Some(m), None, None) => CollapseSpec::new(s, m, cfg.y_exponent).map_err(invalid_config)?,
        _ => {
            return Err(CliError::Config(ConfigError(
                "invalid config: give `sigma_c` and `mu`, or both `sigma_grid` and `mu_grid`".into(),
            )))
        }
    };
    let result = scaling_collapse(&curves, &chosen)?;
    single.push(vec![chosen.sigma_c.into(), chosen.mu.into(), result.quality.into()]);
    run.write("collapse.csv", &single)?;
    run.write("collapsed.csv", &collapsed_table(&result.collapsed))?;
    run.finish(seed, cfg)
}
