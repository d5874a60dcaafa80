//! Command-line front end: detection on CSV series, simulation, trend/cycle
//! decomposition, and Monte Carlo tables driven by JSON configs.
//!
//! Machine-readable results go to stdout (or `--output`); human-oriented
//! summaries go to stderr so redirection stays clean. Exit codes: 0 success,
//! 1 verification mismatch, 2 bad input or configuration, 3 numerical
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tirever::{
    derive_rng, hp_decompose, hp_lambda, mar_simulate, run_table, ColumnSelector, Error,
    Frequency, IcKind, MarFit, MarSpec, McCell, McConfig, PipelineOptions, PipelineOutcome,
    PipelineReport, SkewTParams, StrategyKind, StrategyOptions, TimeSeries, VarianceMethod,
    Verdict, DEFAULT_BURN_IN,
};

#[derive(Parser)]
#[command(
    name = "tirever",
    version,
    about = "Decide whether a time series is time-reversible",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a reversibility strategy on a CSV series
    Detect(DetectArgs),
    /// Simulate a mixed causal-noncausal autoregression to CSV
    Simulate(SimulateArgs),
    /// Split a CSV series into trend and cycle
    Hpfilter(HpfilterArgs),
    /// Run a Monte Carlo study from a JSON config
    Montecarlo(MontecarloArgs),
    /// Re-run a study and compare against a stored result
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file holding the series
    #[arg(long)]
    input: PathBuf,
    /// Column to read: zero-based index or header name
    #[arg(long, default_value = "0")]
    column: String,
    /// Sampling frequency (drives the smoothing-penalty rule)
    #[arg(long, value_enum, default_value_t = FrequencyArg::Unspecified)]
    frequency: FrequencyArg,
}

impl InputArgs {
    fn load(&self) -> Result<TimeSeries, Error> {
        let selector = match self.column.parse::<usize>() {
            Ok(index) => ColumnSelector::Index(index),
            Err(_) => ColumnSelector::Name(self.column.clone()),
        };
        tirever::load_csv(&self.input, &selector, self.frequency.into())
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::S2)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    criterion: CriterionArg,
    /// Size of the decisive test
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Size of the residual-normality screen
    #[arg(long, default_value_t = 0.05)]
    gate_alpha: f64,
    /// Known total autoregressive order; skips order selection
    #[arg(long)]
    known_p: Option<usize>,
    /// Cap for order selection
    #[arg(long)]
    p_max: Option<usize>,
    /// Remove a smooth trend before testing
    #[arg(long)]
    detrend: bool,
    /// Smoothing penalty; defaults to the frequency rule when detrending
    #[arg(long)]
    lambda: Option<f64>,
    /// Bicovariance lag (strategy rr)
    #[arg(long, default_value_t = 2)]
    rr_k: usize,
    #[arg(long, value_enum, default_value_t = VarianceArg::BlockBootstrap)]
    rr_variance: VarianceArg,
    /// Seed for bootstrap streams; TIREVER_SEED then 0 when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Pretty-print the JSON report
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Causal coefficients, comma separated; omit for none
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    causal: Vec<f64>,
    /// Noncausal coefficients, comma separated; omit for none
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    noncausal: Vec<f64>,
    /// Innovation degrees of freedom
    #[arg(long, default_value_t = 3.0)]
    nu: f64,
    /// Innovation skewness (1 = symmetric)
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Innovation scale
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Observations to generate
    #[arg(long)]
    t_len: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Seed; TIREVER_SEED then 0 when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HpfilterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Smoothing penalty; defaults to the frequency rule
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponent of the frequency-ratio rule
    #[arg(long, default_value_t = 4)]
    exponent: i32,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MontecarloArgs {
    /// JSON experiment description
    #[arg(long)]
    config: PathBuf,
    /// Override the config's replication count
    #[arg(long)]
    reps: Option<usize>,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results are identical for any value)
    #[arg(long)]
    jobs: Option<usize>,
    /// Write a JSON report here
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the markdown table here instead of stdout
    #[arg(long)]
    table: Option<PathBuf>,
    /// Write the cells as CSV here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Pretty-print the JSON report
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON experiment description
    #[arg(long)]
    config: PathBuf,
    /// Stored result to compare against: a montecarlo JSON report, or a
    /// bare cell array
    #[arg(long)]
    expected: PathBuf,
    /// Override the config's replication count (must match the stored run)
    #[arg(long)]
    reps: Option<usize>,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum FrequencyArg {
    Annual,
    Quarterly,
    Monthly,
    Unspecified,
}

impl From<FrequencyArg> for Frequency {
    fn from(value: FrequencyArg) -> Frequency {
        match value {
            FrequencyArg::Annual => Frequency::Annual,
            FrequencyArg::Quarterly => Frequency::Quarterly,
            FrequencyArg::Monthly => Frequency::Monthly,
            FrequencyArg::Unspecified => Frequency::Unspecified,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum StrategyArg {
    S1,
    S2,
    Rr,
}

impl From<StrategyArg> for StrategyKind {
    fn from(value: StrategyArg) -> StrategyKind {
        match value {
            StrategyArg::S1 => StrategyKind::S1,
            StrategyArg::S2 => StrategyKind::S2,
            StrategyArg::Rr => StrategyKind::Rr,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum CriterionArg {
    Aic,
    Bic,
}

impl From<CriterionArg> for IcKind {
    fn from(value: CriterionArg) -> IcKind {
        match value {
            CriterionArg::Aic => IcKind::Aic,
            CriterionArg::Bic => IcKind::Bic,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum VarianceArg {
    IidPlugin,
    BlockBootstrap,
}

impl From<VarianceArg> for VarianceMethod {
    fn from(value: VarianceArg) -> VarianceMethod {
        match value {
            VarianceArg::IidPlugin => VarianceMethod::IidPlugin,
            VarianceArg::BlockBootstrap => VarianceMethod::BlockBootstrap,
        }
    }
}

/// Envelope for every machine-readable result.
#[derive(Serialize)]
struct RunReport<T: Serialize> {
    version: &'static str,
    command: &'static str,
    input_path: Option<String>,
    seed: Option<u64>,
    duration_ms: u64,
    options: serde_json::Value,
    payload: T,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Detect(args) => cmd_detect(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Hpfilter(args) => cmd_hpfilter(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Command-line seed, then the TIREVER_SEED environment variable, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, Error> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("TIREVER_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("TIREVER_SEED is not a valid seed: {text:?}"))),
        Err(_) => Ok(0),
    }
}

/// Pins the worker-thread count. Results never depend on it; only wall time
/// does.
fn configure_jobs(jobs: Option<usize>) -> Result<(), Error> {
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    Ok(())
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_report<T: Serialize>(
    path: Option<&Path>,
    pretty: bool,
    report: &RunReport<T>,
) -> Result<(), Error> {
    let mut text = if pretty {
        serde_json::to_string_pretty(report)
    } else {
        serde_json::to_string(report)
    }
    .map_err(|e| Error::Invalid(format!("report serialization: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

fn cmd_detect(args: DetectArgs) -> Result<ExitCode, Error> {
    let series = args.input.load()?;
    let seed = resolve_seed(args.seed)?;
    let options = PipelineOptions {
        detrend: args.detrend,
        lambda: args.lambda,
        strategy: args.strategy.into(),
        strategy_options: StrategyOptions {
            criterion: args.criterion.into(),
            alpha: args.alpha,
            gate_alpha: args.gate_alpha,
            known_p: args.known_p,
            p_max: args.p_max,
        },
        rr_k: args.rr_k,
        rr_variance: args.rr_variance.into(),
        rr_seed: seed,
    };
    let started = Instant::now();
    let report = tirever::run_pipeline(&series, &options)?;
    let duration_ms = started.elapsed().as_millis() as u64;

    print_detect_summary(&series, &report);
    let envelope = RunReport {
        version: env!("CARGO_PKG_VERSION"),
        command: "detect",
        input_path: Some(args.input.input.display().to_string()),
        seed: Some(seed),
        duration_ms,
        options: serde_json::to_value(&options)
            .map_err(|e| Error::Invalid(format!("options serialization: {e}")))?,
        payload: report,
    };
    write_report(args.output.as_deref(), args.pretty, &envelope)?;
    Ok(ExitCode::SUCCESS)
}

fn verdict_text(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::ReversibleGaussian => "reversible (Gaussian residual screen)",
        Verdict::Reversible => "reversible",
        Verdict::Irreversible => "irreversible",
    }
}

fn coefficient_row(coeffs: &[f64], std_errors: &[f64]) -> String {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| match std_errors.get(i) {
            Some(se) if se.is_finite() => format!("{c:.4} ({se:.4})"),
            _ => format!("{c:.4}"),
        })
        .collect::<Vec<_>>()
        .join("  ")
}

fn print_fit(fit: &MarFit) {
    let form = if fit.restricted { ", restricted" } else { "" };
    eprintln!(
        "  best model: MAR({}, {}){form}, loglik = {:.4}, aic = {:.4}, bic = {:.4}",
        fit.r(),
        fit.s(),
        fit.loglik,
        fit.aic,
        fit.bic
    );
    let (causal_se, noncausal_se) = if fit.restricted {
        (&fit.std_errors[..], &fit.std_errors[..])
    } else {
        fit.std_errors.split_at(fit.r().min(fit.std_errors.len()))
    };
    if fit.r() > 0 {
        eprintln!("    causal:    {}", coefficient_row(&fit.spec.causal, causal_se));
    }
    if fit.s() > 0 {
        eprintln!(
            "    noncausal: {}",
            coefficient_row(&fit.spec.noncausal, noncausal_se)
        );
    }
    eprintln!(
        "    nu = {:.2}, sigma = {:.4}{}",
        fit.spec.innovation.nu,
        fit.spec.innovation.sigma,
        if fit.converged { "" } else { "  [not converged]" }
    );
}

fn print_detect_summary(series: &TimeSeries, report: &PipelineReport) {
    eprintln!(
        "series: {} ({} observations){}",
        series.label(),
        series.len(),
        match report.lambda {
            Some(lambda) => format!(", detrended with lambda = {lambda}"),
            None => String::new(),
        }
    );
    match &report.outcome {
        PipelineOutcome::Mar(v) => {
            eprintln!("strategy {}: {}", v.strategy, verdict_text(v.verdict));
            eprintln!(
                "  selected order p = {}, residual normality p = {:.4}",
                v.p_selected, v.normality.p_value
            );
            match (v.strategy, v.decisive_statistic, v.decisive_p_value) {
                (StrategyKind::S1, Some(gap), _) => {
                    eprintln!("  criterion gap (restricted - best unrestricted) = {gap:.4}");
                }
                (StrategyKind::S2, Some(lr), Some(p)) => {
                    eprintln!("  likelihood ratio = {lr:.4}, p = {p:.4}");
                }
                _ => {}
            }
            if let Some(best) = v.fits.first() {
                print_fit(best);
            }
        }
        PipelineOutcome::Rr(r) => {
            eprintln!(
                "bicovariance test, lag {}: gamma = {:.6}, z = {:.4}, p = {:.4}",
                r.k, r.gamma_hat, r.z_statistic, r.p_value
            );
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let innovation = SkewTParams::new(args.nu, args.gamma, args.sigma)?;
    let spec = MarSpec::new(args.causal, args.noncausal, innovation)?;
    let seed = resolve_seed(args.seed)?;
    let mut rng = derive_rng(seed, &[args.t_len as u64]);
    let series = mar_simulate(&spec, args.t_len, args.burn_in, &mut rng)?;
    write_text(args.output.as_deref(), &series.to_csv_string())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_hpfilter(args: HpfilterArgs) -> Result<ExitCode, Error> {
    let series = args.input.load()?;
    let lambda = match args.lambda {
        Some(lambda) => lambda,
        None => hp_lambda(series.frequency(), args.exponent)?,
    };
    let decomposition = hp_decompose(&series, lambda)?;
    let mut out = String::with_capacity(series.len() * 60);
    out.push_str("value,trend,cycle\n");
    for ((y, t), c) in series
        .values()
        .iter()
        .zip(&decomposition.trend)
        .zip(&decomposition.cycle)
    {
        out.push_str(&format!("{y},{t},{c}\n"));
    }
    eprintln!(
        "lambda = {lambda}, {} observations, trend and cycle written",
        series.len()
    );
    write_text(args.output.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Path, reps: Option<usize>, seed: Option<u64>) -> Result<McConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut config: McConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(reps) = reps {
        config.n_reps = reps;
    }
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn frequency_cell(cell: &McCell) -> String {
    if cell.frequency.is_nan() {
        "n/a".to_string()
    } else {
        format!("{:.4}", cell.frequency)
    }
}

fn render_markdown(cells: &[McCell]) -> String {
    let mut out = String::new();
    out.push_str("| T | strategy | frequency | rejections | completed | failures |\n");
    out.push_str("|---:|:---|---:|---:|---:|---:|\n");
    for cell in cells {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            cell.t_len,
            cell.strategy,
            frequency_cell(cell),
            cell.rejections,
            cell.completed,
            cell.failures
        ));
    }
    out
}

fn render_csv(cells: &[McCell]) -> String {
    let mut out = String::new();
    out.push_str("t_len,strategy,n_reps,completed,failures,rejections,frequency\n");
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.t_len,
            cell.strategy,
            cell.n_reps,
            cell.completed,
            cell.failures,
            cell.rejections,
            cell.frequency
        ));
    }
    out
}

#[derive(Serialize)]
struct McPayload {
    config: McConfig,
    cells: Vec<McCell>,
}

fn cmd_montecarlo(args: MontecarloArgs) -> Result<ExitCode, Error> {
    configure_jobs(args.jobs)?;
    let config = load_config(&args.config, args.reps, args.seed)?;
    let started = Instant::now();
    let cells = run_table(&config)?;
    let duration_ms = started.elapsed().as_millis() as u64;
    eprintln!(
        "{} cells, {} replications each, {duration_ms} ms",
        cells.len(),
        config.n_reps
    );

    write_text(args.table.as_deref(), &render_markdown(&cells))?;
    if let Some(csv) = &args.csv {
        write_text(Some(csv), &render_csv(&cells))?;
    }
    if args.output.is_some() {
        let envelope = RunReport {
            version: env!("CARGO_PKG_VERSION"),
            command: "montecarlo",
            input_path: Some(args.config.display().to_string()),
            seed: Some(config.master_seed),
            duration_ms,
            options: serde_json::Value::Null,
            payload: McPayload { config, cells },
        };
        write_report(args.output.as_deref(), args.pretty, &envelope)?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Pulls a cell array out of a stored verification target: a montecarlo
/// report envelope, a bare payload, or a bare array.
fn extract_cells(value: serde_json::Value) -> Result<Vec<McCell>, Error> {
    let cells_value = match &value {
        serde_json::Value::Array(_) => value,
        serde_json::Value::Object(map) => {
            let inner = map.get("payload").unwrap_or(&value);
            match inner {
                serde_json::Value::Object(payload) => payload
                    .get("cells")
                    .cloned()
                    .ok_or_else(|| Error::Config("no cells found in expected file".to_string()))?,
                serde_json::Value::Array(_) => inner.clone(),
                _ => return Err(Error::Config("no cells found in expected file".to_string())),
            }
        }
        _ => return Err(Error::Config("no cells found in expected file".to_string())),
    };
    serde_json::from_value(cells_value)
        .map_err(|e| Error::Config(format!("expected cells malformed: {e}")))
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    configure_jobs(args.jobs)?;
    let config = load_config(&args.config, args.reps, args.seed)?;
    let text = std::fs::read_to_string(&args.expected).map_err(|source| Error::Io {
        path: args.expected.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.expected.display())))?;
    let expected = extract_cells(value)?;

    let cells = run_table(&config)?;
    let got = render_csv(&cells);
    let want = render_csv(&expected);
    if got == want {
        eprintln!("verification passed: {} cells identical", cells.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for (line, (g, w)) in got.lines().zip(want.lines()).enumerate() {
            if g != w {
                eprintln!("verification failed at line {}:", line + 1);
                eprintln!("  expected: {w}");
                eprintln!("  got:      {g}");
                break;
            }
        }
        if got.lines().count() != want.lines().count() {
            eprintln!(
                "verification failed: {} cells computed, {} expected",
                cells.len(),
                expected.len()
            );
        }
        Ok(ExitCode::from(1))
    }
}
