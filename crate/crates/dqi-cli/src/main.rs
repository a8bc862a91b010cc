//! `dqi` — certify DQI advantage lower bounds under imperfect decoding.
//!
//! One subcommand per experiment driver plus a single-instance `report`.
//! Every run is a pure function of its arguments: reruns produce
//! byte-identical output for any worker count.

mod grid;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dqi_core::experiments::{self, ProfileFamily};
use dqi_core::profile::{
    parametric_profile, parse_shot_log, profile_from_shots, profile_from_shots_wilson,
    BpModelParams, FailureProfile,
};
use dqi_core::spectral::DqiParams;
use dqi_core::DqiError;
use grid::GridSpec;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "dqi",
    version,
    about = "DQI advantage-bound certification and scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputOpts {
    /// Output file; table goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Worker threads for grid fan-out (env DQI_WORKERS; all cores when unset)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SourceOpts {
    /// Shot-log file, lines `k: r_k (n_k)`
    #[arg(long)]
    shots: Option<PathBuf>,
    /// Largest layer covered by the shot data (default: largest recorded k)
    #[arg(long)]
    k_cap: Option<usize>,
    /// Replace each shot-derived rate by its Wilson upper confidence bound
    #[arg(long)]
    wilson: bool,
    /// Use the three-stage parametric decoder model
    #[arg(long)]
    parametric: bool,
    /// Uniform failure rate at every layer
    #[arg(long)]
    uniform: Option<f64>,
    /// Perfect decoding at every layer
    #[arg(long)]
    zero: bool,
    /// Parametric model thresholds (defaults scale with m)
    #[arg(long)]
    k_perf: Option<usize>,
    #[arg(long)]
    k_thresh: Option<usize>,
    #[arg(long)]
    k_fail: Option<usize>,
    #[arg(long)]
    eps_low: Option<f64>,
    #[arg(long)]
    eps_high: Option<f64>,
}

impl SourceOpts {
    fn model_for(&self, m: usize) -> anyhow::Result<BpModelParams> {
        let base = BpModelParams::scaled_to(m);
        Ok(BpModelParams::new(
            self.k_perf.unwrap_or(base.k_perf),
            self.k_thresh.unwrap_or(base.k_thresh),
            self.k_fail.unwrap_or(base.k_fail),
            self.eps_low.unwrap_or(base.eps_low),
            self.eps_high.unwrap_or(base.eps_high),
        )?)
    }

    fn selected(&self) -> usize {
        usize::from(self.shots.is_some())
            + usize::from(self.parametric)
            + usize::from(self.uniform.is_some())
            + usize::from(self.zero)
    }

    /// Materialized profile covering layers 0..=k_hint (shot data uses its
    /// own cap and extends by zero).
    fn profile(&self, m: usize, k_hint: usize) -> anyhow::Result<FailureProfile> {
        if self.selected() != 1 {
            bail!(config(
                "select exactly one profile source: --shots, --parametric, --uniform or --zero"
            ));
        }
        if let Some(path) = &self.shots {
            let text = read_data_file(path)?;
            let log = parse_shot_log(&text)?;
            for w in &log.warnings {
                eprintln!("warning: {w}");
            }
            let k_cap = self
                .k_cap
                .or_else(|| log.records.iter().map(|r| r.k).max())
                .ok_or_else(|| config("shot log holds no records; supply --k-cap"))?;
            let (profile, warnings) = if self.wilson {
                profile_from_shots_wilson(&log.records, k_cap)
            } else {
                profile_from_shots(&log.records, k_cap)
            };
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            Ok(profile)
        } else if self.parametric {
            Ok(parametric_profile(&self.model_for(m)?, k_hint))
        } else if let Some(e) = self.uniform {
            Ok(FailureProfile::from_eps(vec![e; k_hint + 1])?)
        } else {
            Ok(FailureProfile::from_eps(vec![0.0; k_hint + 1])?)
        }
    }

    /// Profile family for μ sweeps (shot data is a fixed profile, not a
    /// family).
    fn family(&self, m: usize) -> anyhow::Result<ProfileFamily> {
        if self.selected() != 1 {
            bail!(config(
                "select exactly one profile source: --parametric, --uniform or --zero"
            ));
        }
        if self.shots.is_some() {
            bail!(config(
                "--shots is not a profile family; sweeps need --parametric, --uniform or --zero"
            ));
        }
        if self.parametric {
            Ok(ProfileFamily::Parametric(self.model_for(m)?))
        } else if let Some(e) = self.uniform {
            if !(0.0..=1.0).contains(&e) {
                bail!(config("--uniform rate must lie in [0, 1]"));
            }
            Ok(ProfileFamily::Uniform(e))
        } else {
            Ok(ProfileFamily::Zero)
        }
    }
}

fn config(msg: &str) -> anyhow::Error {
    anyhow::Error::from(DqiError::ParamDomain(msg.to_string()))
}

fn read_data_file(path: &PathBuf) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Subcommand)]
enum Command {
    /// Bound report for a single instance
    Report {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: f64,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Scan degrees ℓ and locate the blind-spot interval
    Blindspot {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: f64,
        /// Degree grid start:stop[:step], step defaults to 1
        #[arg(long)]
        ell: GridSpec,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Uniform-rate phase diagram in the (μ, ε) plane
    Phase {
        #[arg(long, default_value = "5000")]
        m: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        /// μ grid, step defaults to 0.01
        #[arg(long, default_value = "0.01:0.5")]
        mu: GridSpec,
        /// ε grid, step defaults to 0.01
        #[arg(long, default_value = "0:0.7")]
        eps: GridSpec,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Optimal operating point μ* of the weighted-rate bound
    OptimalMu {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: f64,
        /// μ grid, step defaults to 0.001
        #[arg(long, default_value = "0.001:0.5:0.001")]
        mu: GridSpec,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Compare both bounds across field orders q
    Qcompare {
        #[arg(long)]
        m: usize,
        /// Comma-separated field orders
        #[arg(long, value_delimiter = ',', default_value = "2,3,5,7")]
        qs: Vec<u32>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: f64,
        #[arg(long, default_value = "0.01:0.35")]
        mu: GridSpec,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Sweep the diagonal offset d and measure the advantage region
    Dsweep {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        /// Offset grid start:stop[:step], step defaults to 1
        #[arg(long, default_value = "-2:2:1", allow_hyphen_values = true)]
        ds: GridSpec,
        #[arg(long, default_value = "0.002:0.5")]
        mu: GridSpec,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Finite-m versus asymptotic bound agreement over ℓ
    FiniteAsym {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: f64,
        #[arg(long)]
        ell: GridSpec,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Eigenpair verification sweep over the built-in parameter grid
    VerifyEig {
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Scan ε, ε̄ and their ratio over μ
    RateScan {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "2")]
        q: u32,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        d: f64,
        /// μ grid; the default covers [0.01, 0.30] at 150 points
        #[arg(long)]
        mu: Option<GridSpec>,
        #[command(flatten)]
        source: SourceOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
}

/// A finished run: table, JSON document, one-line summary.
struct Rendered {
    csv: String,
    json: serde_json::Value,
    headline: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Exit codes: 1 parse/config, 2 missing data file, 3 spectral failure.
fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            if io.kind() == std::io::ErrorKind::NotFound {
                return 2;
            }
        }
        if let Some(DqiError::SpectralFailure(_)) = cause.downcast_ref::<DqiError>() {
            return 3;
        }
    }
    1
}

fn run(command: Command) -> anyhow::Result<()> {
    let workers = workers_of(&command);
    let rendered = with_workers(workers, || execute(&command))?;
    emit(rendered, output_opts(&command))
}

fn workers_of(command: &Command) -> Option<usize> {
    output_opts(command).workers.or_else(|| {
        std::env::var("DQI_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn output_opts(command: &Command) -> &OutputOpts {
    match command {
        Command::Report { output, .. }
        | Command::Blindspot { output, .. }
        | Command::Phase { output, .. }
        | Command::OptimalMu { output, .. }
        | Command::Qcompare { output, .. }
        | Command::Dsweep { output, .. }
        | Command::FiniteAsym { output, .. }
        | Command::VerifyEig { output, .. }
        | Command::RateScan { output, .. } => output,
    }
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(n: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match n {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("worker pool")
            .install(f),
        _ => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T>(_n: Option<usize>, f: impl FnOnce() -> T) -> T {
    f()
}

fn execute(command: &Command) -> anyhow::Result<Rendered> {
    let rendered = match command {
        Command::Report {
            m,
            ell,
            q,
            d,
            source,
            ..
        } => {
            let params = DqiParams::new(*m, *ell, *q, *d)?;
            let profile = source.profile(*m, *ell)?;
            let report = dqi_core::bounds::full_report(&params, &profile)?;
            let headline = format!(
                "ell={} mu={} master={} jordan={} regime={}",
                ell,
                fmt6(report.mu),
                fmt6(report.sm_master),
                fmt6(report.sm_jordan_relaxed),
                report.regime
            );
            Rendered {
                csv: format!(
                    "{}\n{}\n",
                    dqi_core::BoundReport::CSV_HEADER,
                    report.csv_row()
                ),
                json: report.to_json(),
                headline,
            }
        }
        Command::Blindspot {
            m,
            q,
            d,
            ell,
            source,
            ..
        } => {
            let ells = ell.ints()?;
            let max_ell = *ells.last().expect("non-empty grid");
            let profile = source.profile(*m, max_ell)?;
            let scan = experiments::blindspot_scan(*m, *q, *d, &ells, &profile)?;
            Rendered {
                csv: scan.to_csv(),
                json: json!({"summary": scan.summary(), "rows": scan.rows}),
                headline: scan.headline(),
            }
        }
        Command::Phase { m, q, mu, eps, .. } => {
            let mu_grid = mu.floats(0.01)?;
            let eps_grid = eps.floats(0.01)?;
            let pd = experiments::phase_diagram(&mu_grid, &eps_grid, *m, *q)?;
            let headline = format!(
                "phase: {} cells, {} blind-spot, {} negative-delta",
                pd.cells.len(),
                pd.cells
                    .iter()
                    .filter(|c| c.regime == dqi_core::Regime::BlindSpot)
                    .count(),
                pd.negative_delta
            );
            Rendered {
                csv: pd.to_csv(),
                json: json!({"summary": pd.summary(), "rows": pd.cells}),
                headline,
            }
        }
        Command::OptimalMu {
            m,
            q,
            d,
            mu,
            source,
            ..
        } => {
            let family = source.family(*m)?;
            let grid = mu.floats(0.001)?;
            let opt = experiments::optimal_mu(*m, *q, *d, &family, &grid)?;
            let headline = format!(
                "mu* = {} ratio* = {}",
                fmt6(opt.mu_star),
                fmt6(opt.ratio_star)
            );
            Rendered {
                csv: opt.to_csv(),
                json: json!({"summary": opt.summary(), "rows": opt.rows}),
                headline,
            }
        }
        Command::Qcompare {
            m,
            qs,
            d,
            mu,
            source,
            ..
        } => {
            let family = source.family(*m)?;
            let grid = mu.floats(2e-3)?;
            let qc = experiments::q_comparison(*m, qs, *d, &family, &grid)?;
            let onsets: Vec<String> = qc
                .onsets
                .iter()
                .map(|(q, j, _)| {
                    format!(
                        "q={q}:{}",
                        j.map(fmt6).unwrap_or_else(|| "none".to_string())
                    )
                })
                .collect();
            Rendered {
                csv: qc.to_csv(),
                json: json!({"summary": qc.summary(), "rows": qc.rows}),
                headline: format!("jordan vacuity onsets {}", onsets.join(" ")),
            }
        }
        Command::Dsweep {
            m,
            q,
            ds,
            mu,
            source,
            ..
        } => {
            let family = source.family(*m)?;
            let d_grid = ds.floats(1.0)?;
            let mu_grid = mu.floats(2e-3)?;
            let sweep = experiments::d_sweep(*m, *q, &d_grid, &family, &mu_grid)?;
            let widths: Vec<String> = sweep
                .lines
                .iter()
                .map(|l| format!("d={}:{}", fmt6(l.d), fmt6(l.advantage_width)))
                .collect();
            Rendered {
                csv: sweep.to_csv(),
                json: json!({"summary": sweep.summary(), "rows": sweep.rows}),
                headline: format!("advantage widths {}", widths.join(" ")),
            }
        }
        Command::FiniteAsym {
            m,
            q,
            d,
            ell,
            source,
            ..
        } => {
            let ells = ell.ints()?;
            let max_ell = *ells.last().expect("non-empty grid");
            let profile = source.profile(*m, max_ell)?;
            let fa = experiments::finite_vs_asymptotic(*m, *q, *d, &ells, &profile)?;
            let headline = format!(
                "max gap master={} jordan={}; intervals identical: {}",
                fmt6(fa.max_gap_master),
                fmt6(fa.max_gap_jordan),
                fa.interval_finite == fa.interval_asym
            );
            Rendered {
                csv: fa.to_csv(),
                json: json!({"summary": fa.summary(), "rows": fa.rows}),
                headline,
            }
        }
        Command::VerifyEig { .. } => {
            let grid = experiments::experiment1_grid();
            let ver = experiments::eigenvector_verification(&grid);
            let headline = format!(
                "verify-eig: {} points, {} failures",
                ver.rows.len(),
                ver.failures
            );
            Rendered {
                csv: ver.to_csv(),
                json: json!({"summary": ver.summary(), "rows": ver.rows}),
                headline,
            }
        }
        Command::RateScan {
            m,
            q,
            d,
            mu,
            source,
            ..
        } => {
            let family = source.family(*m)?;
            // 150 points over [0.01, 0.30] unless a grid is given
            let grid = match mu {
                Some(spec) => spec.floats(2e-3)?,
                None => experiments::float_grid(0.01, 0.30, 0.29 / 149.0)?,
            };
            let scan = experiments::weighted_rate_scan(*m, *q, *d, &family, &grid)?;
            let headline = format!(
                "rate-scan: {} rows, mu_perf={} mu_thresh={}",
                scan.rows.len(),
                scan.mu_perf.map(fmt6).unwrap_or_else(|| "-".into()),
                scan.mu_thresh.map(fmt6).unwrap_or_else(|| "-".into()),
            );
            Rendered {
                csv: scan.to_csv(),
                json: json!({"summary": scan.summary(), "rows": scan.rows}),
                headline,
            }
        }
    };
    Ok(rendered)
}

fn fmt6(x: f64) -> String {
    dqi_core::sig6(x)
}

fn emit(rendered: Rendered, opts: &OutputOpts) -> anyhow::Result<()> {
    let content = match opts.format {
        OutputFormat::Csv => rendered.csv,
        OutputFormat::Json => format!("{:#}\n", rendered.json),
    };
    match &opts.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            file.write_all(content.as_bytes())?;
            println!("{}", rendered.headline);
        }
        None => {
            print!("{content}");
            eprintln!("{}", rendered.headline);
        }
    }
    Ok(())
}
