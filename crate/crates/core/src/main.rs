use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sentiment_sde::data::{
    evaluate_rmse, load_quotes, load_series, normalize_max100, path_dates, realized_volatility,
    write_series, Baseline, Config, DataError, EvalOptions,
};
use sentiment_sde::diagnostics::{adf_test, ks_lognormal_test};
use sentiment_sde::likelihood::{fit_qml, fit_two_step, profile_tau, FitResult, ProfileData};
use sentiment_sde::model::{daycount, ModelParams};
use sentiment_sde::pricing::{
    price_mc, price_quadrature_with, table_preset, OptionKind, OptionSpec, QuadratureOptions,
    DEFAULT_NODES,
};
use sentiment_sde::simulate::{
    build_return_sample, ingest_preaggregated, simulate_paths, Measure,
};
use sentiment_sde::ModelError;

#[derive(Parser, Debug)]
#[command(name = "sentiment-sde", version, about = "Simulate, estimate and price under the sentiment-driven price model")]
struct Cli {
    /// Flat `key = value` file with model parameters and numeric settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set sigma_P=0.4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Gauss–Legendre nodes for quadrature pricing.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Monte Carlo or simulated path count.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Add the initial-window integral to the pricing variable.
    #[arg(long, global = true, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    include_initial_window: Option<bool>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate joint sentiment and price paths and write them as CSV.
    Simulate(SimulateArgs),
    /// Estimate model parameters from price and sentiment series.
    Fit(FitArgs),
    /// Price a single option.
    Price(PriceArgs),
    /// Emit one of the built-in price tables as CSV.
    Tables(TablesArgs),
    /// Stationarity and lognormality checks for a sentiment proxy.
    ProxyTest(ProxyArgs),
    /// Score model prices against option quotes.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Horizon in days.
    #[arg(long, default_value_t = 728)]
    days: usize,
    /// Grid spacing in days (1 or 7).
    #[arg(long, default_value_t = 1)]
    step_days: usize,
    #[arg(long, value_enum, default_value_t = MeasureArg::Physical)]
    measure: MeasureArg,
    /// Calendar date of time zero.
    #[arg(long, default_value = "2015-01-01")]
    start_date: NaiveDate,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasureArg {
    Physical,
    RiskNeutral,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum MethodArg {
    Qml,
    TwoStep,
    Profile,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Price series (`date,value`).
    #[arg(long)]
    price: PathBuf,
    /// Sentiment series (`date,value`).
    #[arg(long)]
    sentiment: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Qml)]
    method: MethodArg,
    /// Treat the sentiment file as cumulative sentiment on the price dates.
    #[arg(long)]
    preaggregated: bool,
    /// Observation step in days for fine data.
    #[arg(long, default_value_t = 7)]
    delta_days: usize,
    /// Delay in grid units (days for fine data, observations when preaggregated).
    #[arg(long, default_value_t = 0)]
    tau: usize,
    /// Delay grid for the profile method, e.g. `0,1,2` or `0..10`.
    #[arg(long, default_value = "0..10")]
    grid: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Rescale the sentiment series so its maximum is 100.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PriceArgs {
    #[arg(long, default_value = "call")]
    kind: String,
    #[arg(long)]
    strike: f64,
    /// Years to maturity.
    #[arg(long)]
    maturity: Option<f64>,
    #[arg(long)]
    spot: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    cash: Option<f64>,
    #[arg(long, value_enum, default_value_t = PriceMethodArg::Quadrature)]
    method: PriceMethodArg,
    /// Monte Carlo time step in years.
    #[arg(long, default_value_t = 1.0 / 730.0)]
    step: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PriceMethodArg {
    Quadrature,
    Mc,
}

#[derive(Args, Debug)]
struct TablesArgs {
    /// One of table3, table4, table5, table6.
    #[arg(long)]
    preset: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProxyArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value_t = 1)]
    lag: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BaselineArg {
    Model,
    BlackScholes,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    quotes: PathBuf,
    /// FitResult JSON produced by `fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Sentiment level at the quote date.
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long, value_enum, default_value_t = BaselineArg::Model)]
    baseline: BaselineArg,
    /// Constant volatility for the Black–Scholes baseline.
    #[arg(long)]
    volatility: Option<f64>,
    /// Price series from which to estimate the Black–Scholes volatility.
    #[arg(long)]
    price_series: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        DataError::from(e).into()
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

struct Settings {
    config: Config,
    seed: u64,
    nodes: usize,
    paths: usize,
    include_initial_window: Option<bool>,
}

fn default_params() -> ModelParams {
    let tau = 5.0 / daycount::CALENDAR_DAYS;
    ModelParams::new(0.03, 0.35, 0.0, 0.04, tau, 100.0, tau).expect("defaults are valid")
}

impl Settings {
    fn from_cli(cli: &Cli) -> Result<Self, Failure> {
        let mut config = match &cli.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for o in &cli.overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| invalid(format!("--set expects KEY=VALUE, got `{o}`")))?;
            let checked = Config::parse(&format!("{k}={v}"))?;
            config.set(k.trim(), checked.get(k.trim()).unwrap_or_default());
        }
        let seed = match cli.seed {
            Some(s) => s,
            None => config.u64_or("seed", 42)?,
        };
        let nodes = match cli.nodes {
            Some(n) => n,
            None => config.u64_or("nodes", DEFAULT_NODES as u64)? as usize,
        };
        let paths = match cli.paths {
            Some(n) => n,
            None => config.u64_or("paths", 100_000)? as usize,
        };
        let include_initial_window = match cli.include_initial_window {
            Some(b) => Some(b),
            None => config.bool("include_initial_window")?,
        };
        Ok(Settings { config, seed, nodes, paths, include_initial_window })
    }

    fn params(&self) -> Result<ModelParams, Failure> {
        Ok(self.config.model_params(&default_params())?)
    }

    fn quadrature(&self, default_shift: bool) -> QuadratureOptions {
        QuadratureOptions { nodes: self.nodes, include_initial_window: self.include_initial_window.unwrap_or(default_shift) }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_simulate(s: &Settings, a: &SimulateArgs) -> Result<(), Failure> {
    let params = s.params()?;
    let step = match a.step_days {
        1 => daycount::DAY,
        7 => daycount::WEEK,
        _ => return Err(invalid("--step-days must be 1 or 7")),
    };
    let s0 = s.config.f64_or("s0", 100.0)?;
    let measure = match a.measure {
        MeasureArg::Physical => Measure::Physical,
        MeasureArg::RiskNeutral => Measure::RiskNeutral { rate: s.config.f64_or("rate", 0.0)? },
    };
    let horizon = a.days as f64 * daycount::DAY;
    let set = simulate_paths(&params, s0, horizon, step, s.paths, s.seed, measure)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| invalid(format!("{}: {e}", a.out_dir.display())))?;
    for (k, (sent, price)) in set.sentiment.iter().zip(&set.price).enumerate() {
        let sd = path_dates(sent, a.start_date)?;
        let pd = path_dates(price, a.start_date)?;
        write_series(a.out_dir.join(format!("sentiment_{k}.csv")), &sd, &sent.values)?;
        write_series(a.out_dir.join(format!("price_{k}.csv")), &pd, &price.values)?;
    }
    eprintln!("wrote {} path pairs to {}", set.price.len(), a.out_dir.display());
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<usize>, Failure> {
    let bad = || invalid(format!("bad grid `{spec}`"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn run_fit(a: &FitArgs) -> Result<(), Failure> {
    let price = load_series(&a.price)?;
    let mut sentiment = load_series(&a.sentiment)?;
    if a.normalize {
        sentiment.path = normalize_max100(&sentiment.path)?;
    }
    let fit: FitResult = if a.preaggregated {
        if price.dates != sentiment.dates {
            return Err(invalid("preaggregated sentiment must share the price dates"));
        }
        match a.method {
            MethodArg::Qml => fit_qml(&ingest_preaggregated(&price.path, &sentiment.path.values, a.tau)?, None)?,
            MethodArg::Profile => {
                let grid = parse_grid(&a.grid)?;
                let data = ProfileData::Preaggregated { price: &price.path, cumulants: &sentiment.path.values };
                profile_with_warnings(data, &grid, a.alpha)?
            }
            MethodArg::TwoStep => return Err(invalid("two-step needs fine sentiment, not preaggregated data")),
        }
    } else {
        if price.step_days != sentiment.step_days {
            return Err(invalid("price and sentiment must share their spacing"));
        }
        let origin = price.dates[0];
        let p = price.relative_to(origin);
        let sent = sentiment.relative_to(origin);
        let delta_big = a.delta_days as f64 * p.step / price.step_days as f64;
        match a.method {
            MethodArg::Qml => fit_qml(&build_return_sample(&p, &sent, delta_big, a.tau as f64 * p.step)?, None)?,
            MethodArg::TwoStep => {
                fit_two_step(&sent, &build_return_sample(&p, &sent, delta_big, a.tau as f64 * p.step)?)?
            }
            MethodArg::Profile => {
                let grid = parse_grid(&a.grid)?;
                let data = ProfileData::Fine { price: &p, sentiment: &sent, delta_big };
                profile_with_warnings(data, &grid, a.alpha)?
            }
        }
    };
    let text = serde_json::to_string_pretty(&fit).map_err(|e| Failure::Numerical(e.to_string()))?;
    emit(a.out.as_deref(), &(text + "\n"))
}

fn profile_with_warnings(data: ProfileData<'_>, grid: &[usize], alpha: f64) -> Result<FitResult, Failure> {
    let r = profile_tau(data, grid, alpha)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    Ok(r.fit)
}

fn run_price(s: &Settings, a: &PriceArgs) -> Result<(), Failure> {
    let params = s.params()?;
    let kind: OptionKind = a.kind.parse()?;
    let spec = OptionSpec {
        kind,
        strike: a.strike,
        maturity: match a.maturity {
            Some(t) => t,
            None => s.config.f64_or("maturity", 0.25)?,
        },
        cash: match a.cash {
            Some(c) => c,
            None => s.config.f64_or("cash", 100.0)?,
        },
        rate: match a.rate {
            Some(r) => r,
            None => s.config.f64_or("rate", 0.01)?,
        },
    };
    let spot = match a.spot {
        Some(v) => v,
        None => s.config.f64_or("s0", 450.0)?,
    };
    let res = match a.method {
        PriceMethodArg::Quadrature => price_quadrature_with(&params, spot, &spec, s.quadrature(true))?,
        PriceMethodArg::Mc => price_mc(&params, spot, &spec, s.paths, a.step, s.seed)?,
    };
    let text = serde_json::to_string_pretty(&json!({ "spec": spec, "result": res }))
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    emit(None, &(text + "\n"))
}

fn run_tables(s: &Settings, a: &TablesArgs) -> Result<(), Failure> {
    let mut preset = table_preset(&a.preset)?;
    preset.inputs.quadrature = s.quadrature(preset.inputs.quadrature.include_initial_window);
    let report = preset.run()?;
    emit(a.out.as_deref(), &report.to_csv())
}

fn run_proxy(a: &ProxyArgs) -> Result<(), Failure> {
    let series = load_series(&a.series)?;
    let log_levels: Vec<f64> = series.path.values.iter().map(|v| v.ln()).collect();
    let log_returns: Vec<f64> = log_levels.windows(2).map(|w| w[1] - w[0]).collect();
    let adf = adf_test(&log_returns, a.lag)?;
    let ks = ks_lognormal_test(&series.path.values)?;
    let text = serde_json::to_string_pretty(&json!({ "adf_log_returns": adf, "ks_log_returns": ks }))
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    emit(None, &(text + "\n"))
}

fn run_evaluate(s: &Settings, a: &EvaluateArgs) -> Result<(), Failure> {
    let quotes = load_quotes(&a.quotes)?;
    if quotes.dropped > 0 {
        eprintln!("dropped {} quotes without transactions", quotes.dropped);
    }
    let text = std::fs::read_to_string(&a.fit).map_err(|e| invalid(format!("{}: {e}", a.fit.display())))?;
    let fit: FitResult = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", a.fit.display())))?;
    let mut base = s.params()?;
    if let Some(phi0) = a.phi0 {
        base = base.with_phi0(phi0);
    }
    let baseline = match a.baseline {
        BaselineArg::Model => Baseline::Model,
        BaselineArg::BlackScholes => {
            let volatility = match (a.volatility, &a.price_series) {
                (Some(v), _) => v,
                (None, Some(p)) => realized_volatility(&load_series(p)?.path)?,
                (None, None) => return Err(invalid("black-scholes baseline needs --volatility or --price-series")),
            };
            Baseline::BlackScholes { volatility }
        }
    };
    let report = evaluate_rmse(&quotes.rows, &fit, &base, baseline, EvalOptions { quadrature: s.quadrature(true) })?;
    for (row, why) in &report.excluded {
        eprintln!("warning: quote row {row} excluded: {why}");
    }
    if let Some(p) = &a.out_csv {
        emit(Some(p), &report.to_csv())?;
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Numerical(e.to_string()))?;
    emit(a.out_json.as_deref(), &(text + "\n"))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let settings = Settings::from_cli(cli)?;
    match &cli.command {
        Command::Simulate(a) => run_simulate(&settings, a),
        Command::Fit(a) => run_fit(a),
        Command::Price(a) => run_price(&settings, a),
        Command::Tables(a) => run_tables(&settings, a),
        Command::ProxyTest(a) => run_proxy(a),
        Command::Evaluate(a) => run_evaluate(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}

