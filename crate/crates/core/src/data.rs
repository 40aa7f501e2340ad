//! File formats, configuration and market RMSE evaluation.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::likelihood::FitResult;
use crate::model::{daycount, ModelParams};
use crate::pricing::{price_quadrature_with, OptionSpec, QuadratureOptions};
use crate::simulate::SampledPath;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gap in series: no observation one step before {date}")]
    Gap { date: NaiveDate },
    #[error("row {row}: {msg}")]
    Invariant { row: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl DataError {
    /// True for errors caused by malformed inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        match self {
            DataError::Model(e) => e.is_validation(),
            _ => true,
        }
    }
}

pub type DataResult<T> = std::result::Result<T, DataError>;

/// A dated series together with its uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedSeries {
    pub dates: Vec<NaiveDate>,
    pub path: SampledPath,
    /// Calendar days between consecutive observations.
    pub step_days: i64,
}

impl DatedSeries {
    /// Re-express the grid relative to `origin`, which becomes time zero.
    pub fn relative_to(&self, origin: NaiveDate) -> SampledPath {
        let offset = (self.dates[0] - origin).num_days() / self.step_days;
        SampledPath { start_time: offset as f64 * self.path.step, ..self.path.clone() }
    }
}

fn open_csv(path: &Path) -> DataResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io { path: path.display().to_string(), source },
            other => DataError::Parse { line: 1, msg: format!("{other:?}") },
        })
}

fn check_header(rdr: &mut csv::Reader<std::fs::File>, expected: &[&str]) -> DataResult<()> {
    let header = rdr.headers().map_err(|e| DataError::Parse { line: 1, msg: e.to_string() })?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(DataError::Parse {
            line: 1,
            msg: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_date(s: &str, line: usize) -> DataResult<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| DataError::Parse { line, msg: format!("bad date `{s}`: {e}") })
}

fn parse_f64(s: &str, line: usize, what: &str) -> DataResult<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| DataError::Parse { line, msg: format!("bad {what} `{s}`") })?;
    if !v.is_finite() {
        return Err(DataError::Parse { line, msg: format!("{what} `{s}` is not finite") });
    }
    Ok(v)
}

/// Read a `date,value` CSV with daily or weekly spacing and positive values.
pub fn load_series(path: impl AsRef<Path>) -> DataResult<DatedSeries> {
    let path = path.as_ref();
    let mut rdr = open_csv(path)?;
    check_header(&mut rdr, &["date", "value"])?;
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| DataError::Parse { line, msg: e.to_string() })?;
        if rec.len() != 2 {
            return Err(DataError::Parse { line, msg: format!("expected 2 fields, found {}", rec.len()) });
        }
        let date = parse_date(&rec[0], line)?;
        let value = parse_f64(&rec[1], line, "value")?;
        if !(value > 0.0) {
            return Err(DataError::Parse { line, msg: format!("value {value} is not positive") });
        }
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(DataError::Parse { line, msg: format!("date {date} is not after {prev}") });
            }
        }
        dates.push(date);
        values.push(value);
    }
    if dates.is_empty() {
        return Err(DataError::Parse { line: 2, msg: "no observations".into() });
    }
    let step_days = if dates.len() > 1 { (dates[1] - dates[0]).num_days() } else { 1 };
    let step = match step_days {
        1 => daycount::DAY,
        7 => daycount::WEEK,
        d => {
            return Err(DataError::Parse { line: 3, msg: format!("unsupported spacing of {d} days") });
        }
    };
    for w in dates.windows(2) {
        if (w[1] - w[0]).num_days() != step_days {
            return Err(DataError::Gap { date: w[1] });
        }
    }
    let path = SampledPath::new(step, 0.0, values)?;
    Ok(DatedSeries { dates, path, step_days })
}

/// Write a `date,value` CSV. Values use the shortest round-trip representation.
pub fn write_series(path: impl AsRef<Path>, dates: &[NaiveDate], values: &[f64]) -> DataResult<()> {
    let path = path.as_ref();
    let io = |source| DataError::Io { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(std::io::Error::other(e)))?;
    w.write_record(["date", "value"]).map_err(|e| io(std::io::Error::other(e)))?;
    for (d, v) in dates.iter().zip(values) {
        w.write_record([d.format("%Y-%m-%d").to_string(), format!("{v}")])
            .map_err(|e| io(std::io::Error::other(e)))?;
    }
    w.flush().map_err(io)
}

/// Dates for a path on a daily or weekly grid, with time zero at `origin`.
pub fn path_dates(path: &SampledPath, origin: NaiveDate) -> DataResult<Vec<NaiveDate>> {
    let step_days = (path.step * daycount::CALENDAR_DAYS).round() as i64;
    if step_days != 1 && step_days != 7 {
        return Err(ModelError::param("step", "only daily or weekly paths can be dated").into());
    }
    let offset = (path.start_time / path.step).round() as i64;
    Ok((0..path.len() as i64)
        .map(|i| origin + chrono::Duration::days((offset + i) * step_days))
        .collect())
}

/// Rescale so that the largest value is exactly 100.
pub fn normalize_max100(series: &SampledPath) -> DataResult<SampledPath> {
    if !series.is_positive() {
        return Err(ModelError::Domain("series must be positive".into()).into());
    }
    let max = series.values.iter().cloned().fold(f64::MIN, f64::max);
    if max == 100.0 {
        return Ok(series.clone());
    }
    let values = series.values.iter().map(|v| v / max * 100.0).collect();
    Ok(SampledPath { values, ..series.clone() })
}

/// Annualised volatility of log-returns.
pub fn realized_volatility(series: &SampledPath) -> DataResult<f64> {
    if series.len() < 3 || !series.is_positive() {
        return Err(ModelError::InsufficientData("need at least three positive values".into()).into());
    }
    let x: Vec<f64> = series.values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((var / series.step).sqrt())
}

/// One option quote; prices are fractions of the underlying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteRow {
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub strike: f64,
    pub bid: f64,
    pub ask: f64,
    pub underlying: f64,
}

impl QuoteRow {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    /// Year fraction to expiry, Act/365.
    pub fn time_to_expiry(&self) -> f64 {
        (self.expiry - self.quote_date).num_days() as f64 / daycount::CALENDAR_DAYS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuoteSet {
    pub rows: Vec<QuoteRow>,
    /// Rows with neither bid nor ask.
    pub dropped: usize,
}

/// Read a `quote_date,expiry,strike,bid,ask,underlying` CSV.
pub fn load_quotes(path: impl AsRef<Path>) -> DataResult<QuoteSet> {
    let path = path.as_ref();
    let mut rdr = open_csv(path)?;
    check_header(&mut rdr, &["quote_date", "expiry", "strike", "bid", "ask", "underlying"])?;
    let mut rows = Vec::new();
    let mut dropped = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let row = i + 1;
        let rec = rec.map_err(|e| DataError::Parse { line, msg: e.to_string() })?;
        if rec.len() != 6 {
            return Err(DataError::Parse { line, msg: format!("expected 6 fields, found {}", rec.len()) });
        }
        let q = QuoteRow {
            quote_date: parse_date(&rec[0], line)?,
            expiry: parse_date(&rec[1], line)?,
            strike: parse_f64(&rec[2], line, "strike")?,
            bid: parse_f64(&rec[3], line, "bid")?,
            ask: parse_f64(&rec[4], line, "ask")?,
            underlying: parse_f64(&rec[5], line, "underlying")?,
        };
        if q.bid == 0.0 && q.ask == 0.0 {
            dropped += 1;
            continue;
        }
        if q.bid < 0.0 || q.bid > q.ask {
            return Err(DataError::Invariant { row, msg: format!("need 0 <= bid <= ask, got {} and {}", q.bid, q.ask) });
        }
        if q.expiry <= q.quote_date {
            return Err(DataError::Invariant { row, msg: "expiry must follow the quote date".into() });
        }
        if !(q.underlying > 0.0) {
            return Err(DataError::Invariant { row, msg: "underlying must be positive".into() });
        }
        if !(q.strike >= 0.0) {
            return Err(DataError::Invariant { row, msg: "strike must be non-negative".into() });
        }
        rows.push(q);
    }
    Ok(QuoteSet { rows, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Moneyness {
    #[serde(rename = "ITM")]
    InTheMoney,
    #[serde(rename = "ATM")]
    AtTheMoney,
    #[serde(rename = "OTM")]
    OutOfTheMoney,
}

impl Moneyness {
    /// Call moneyness with a ±5% band around the spot.
    pub fn of_call(strike: f64, spot: f64) -> Self {
        let m = strike / spot;
        if (m - 1.0).abs() <= 0.05 {
            Moneyness::AtTheMoney
        } else if m < 0.95 {
            Moneyness::InTheMoney
        } else {
            Moneyness::OutOfTheMoney
        }
    }
}

/// Pricing model used by [`evaluate_rmse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    /// The sentiment model with the fitted parameters.
    Model,
    /// Black–Scholes with a constant annualised volatility.
    BlackScholes { volatility: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricedQuote {
    pub strike: f64,
    pub expiry: NaiveDate,
    pub market: f64,
    pub model: f64,
    pub moneyness: Moneyness,
}

/// Pricing errors aggregated as root sums of squares (`overall`,
/// `by_expiry`, `by_moneyness`) alongside the root mean square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub overall: f64,
    pub root_mean_square: f64,
    pub by_expiry: BTreeMap<NaiveDate, f64>,
    pub by_moneyness: BTreeMap<Moneyness, f64>,
    pub n_options: BTreeMap<Moneyness, usize>,
    pub priced: Vec<PricedQuote>,
    /// Quotes that could not be priced, with the reason.
    pub excluded: Vec<(usize, String)>,
}

impl RmseReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("expiry,strike,moneyness,market,model,error\n");
        for p in &self.priced {
            let m = match p.moneyness {
                Moneyness::InTheMoney => "ITM",
                Moneyness::AtTheMoney => "ATM",
                Moneyness::OutOfTheMoney => "OTM",
            };
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                p.expiry,
                p.strike,
                m,
                p.market,
                p.model,
                p.model - p.market
            ));
        }
        out
    }
}

/// Settings for [`evaluate_rmse`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub quadrature: QuadratureOptions,
}

/// Price each quote as a call with zero rate and compare with the bid/ask mid.
///
/// Model prices are divided by the underlying to match quote units. The delay
/// comes from `fitted` when it carries one, otherwise from `base`.
pub fn evaluate_rmse(
    quotes: &[QuoteRow],
    fitted: &FitResult,
    base: &ModelParams,
    baseline: Baseline,
    opts: EvalOptions,
) -> DataResult<RmseReport> {
    let e = &fitted.estimates;
    let tau = fitted.tau_years().unwrap_or(base.tau);
    let params = ModelParams::new(e.mu_p, e.sigma_p, e.mu_s, e.sigma_s, tau, base.phi0, base.lookback.max(tau))?;

    let mut priced = Vec::new();
    let mut excluded = Vec::new();
    for (i, q) in quotes.iter().enumerate() {
        let t = q.time_to_expiry();
        let spec = OptionSpec::call(q.strike, t, 0.0);
        let value = match baseline {
            Baseline::Model => price_quadrature_with(&params, q.underlying, &spec, opts.quadrature).map(|r| r.price),
            Baseline::BlackScholes { volatility } => {
                crate::pricing::bs_kernel(0.0, q.underlying, t, volatility, &spec)
            }
        };
        match value {
            Ok(v) => priced.push(PricedQuote {
                strike: q.strike,
                expiry: q.expiry,
                market: q.mid(),
                model: v / q.underlying,
                moneyness: Moneyness::of_call(q.strike, q.underlying),
            }),
            Err(err) => excluded.push((i + 1, err.to_string())),
        }
    }

    let root_ss = |it: &mut dyn Iterator<Item = &PricedQuote>| {
        it.map(|p| (p.model - p.market).powi(2)).sum::<f64>().sqrt()
    };
    let overall = root_ss(&mut priced.iter());
    let root_mean_square = if priced.is_empty() { 0.0 } else { overall / (priced.len() as f64).sqrt() };
    let mut by_expiry = BTreeMap::new();
    let mut by_moneyness = BTreeMap::new();
    let mut n_options = BTreeMap::new();
    for p in &priced {
        by_expiry.entry(p.expiry).or_insert_with(|| root_ss(&mut priced.iter().filter(|q| q.expiry == p.expiry)));
        by_moneyness
            .entry(p.moneyness)
            .or_insert_with(|| root_ss(&mut priced.iter().filter(|q| q.moneyness == p.moneyness)));
        *n_options.entry(p.moneyness).or_insert(0) += 1;
    }
    Ok(RmseReport { overall, root_mean_square, by_expiry, by_moneyness, n_options, priced, excluded })
}

/// A flat `key = value` configuration file. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: HashMap<String, String>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "mu_P", "sigma_P", "mu_S", "sigma_S", "tau", "phi0", "L", "s0", "rate", "maturity", "strike",
    "cash", "kind", "step", "horizon", "delta_big", "seed", "nodes", "paths", "alpha",
    "include_initial_window",
];

impl Config {
    pub fn parse(text: &str) -> DataResult<Self> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DataError::Parse { line: i + 1, msg: format!("expected key = value, found `{line}`") })?;
            let k = k.trim();
            if !CONFIG_KEYS.contains(&k) {
                return Err(DataError::Parse { line: i + 1, msg: format!("unknown key `{k}`") });
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> DataResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn f64(&self, key: &str) -> DataResult<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| DataError::Parse { line: 0, msg: format!("`{key}` = `{v}` is not a number") }))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> DataResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> DataResult<u64> {
        self.get(key)
            .map(|v| v.parse::<u64>().map_err(|_| DataError::Parse { line: 0, msg: format!("`{key}` = `{v}` is not an integer") }))
            .transpose()
            .map(|v| v.unwrap_or(default))
    }

    pub fn bool(&self, key: &str) -> DataResult<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(DataError::Parse { line: 0, msg: format!("`{key}` = `{v}` is not a boolean") }),
            })
            .transpose()
    }

    /// Model parameters, with any missing key taken from `defaults`.
    pub fn model_params(&self, defaults: &ModelParams) -> DataResult<ModelParams> {
        let tau = self.f64_or("tau", defaults.tau)?;
        let p = ModelParams::new(
            self.f64_or("mu_P", defaults.mu_p)?,
            self.f64_or("sigma_P", defaults.sigma_p)?,
            self.f64_or("mu_S", defaults.mu_s)?,
            self.f64_or("sigma_S", defaults.sigma_s)?,
            tau,
            self.f64_or("phi0", defaults.phi0)?,
            self.f64_or("L", defaults.lookback.max(tau))?,
        )?;
        Ok(p)
    }
}
