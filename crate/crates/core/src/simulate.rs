//! Path generation and construction of the discretely observed `(R_i, A_i)` sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::ModelParams;

/// Absolute tolerance (years) when checking that times sit on a grid.
pub const GRID_TOL: f64 = 1e-12;

/// A uniformly spaced series. Time zero is the start of the price record;
/// sentiment values at negative times form the known initial window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub step: f64,
    pub start_time: f64,
    pub values: Vec<f64>,
}

impl SampledPath {
    pub fn new(step: f64, start_time: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(ModelError::param("step", "must be positive"));
        }
        if values.is_empty() {
            return Err(ModelError::InsufficientData("path has no values".into()));
        }
        Ok(SampledPath { step, start_time, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.step
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Grid index of time `t`, if `t` lies on the grid (not necessarily inside it).
    fn signed_index(&self, t: f64) -> Option<i64> {
        let x = (t - self.start_time) / self.step;
        let k = x.round();
        ((x - k).abs() * self.step <= GRID_TOL * x.abs().max(1.0)).then_some(k as i64)
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }
}

/// Probability measure under which paths are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Physical,
    /// Minimal martingale measure with a constant short rate.
    RiskNeutral { rate: f64 },
}

/// Simulated sentiment and price paths, index-aligned by path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub sentiment: Vec<SampledPath>,
    pub price: Vec<SampledPath>,
}

/// Number of whole steps in `tau`, failing when `tau` is off the grid.
pub fn delay_steps(tau: f64, step: f64) -> Result<usize> {
    let r = (tau / step).round();
    if (tau - r * step).abs() > GRID_TOL * r.max(1.0) {
        return Err(ModelError::MisalignedDelay { tau, step });
    }
    Ok(r as usize)
}

pub(crate) fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Fill `out` with the sentiment grid: `hist` copies of `phi0` on the
/// initial window, then `phi0` at time zero and `n_fwd` exact GBM steps.
pub(crate) fn fill_sentiment<R: Rng>(
    params: &ModelParams,
    step: f64,
    hist: usize,
    n_fwd: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(hist + 1, params.phi0);
    let drift = (params.mu_p - 0.5 * params.sigma_p * params.sigma_p) * step;
    let vol = params.sigma_p * step.sqrt();
    let mut log_p = params.phi0.ln();
    for _ in 0..n_fwd {
        let z: f64 = rng.sample(StandardNormal);
        log_p += drift + vol * z;
        out.push(log_p.exp());
    }
}

/// One log-price increment over `h` given the delayed sentiment level `p`.
#[inline]
pub(crate) fn log_price_step<R: Rng>(
    params: &ModelParams,
    measure: Measure,
    p: f64,
    h: f64,
    rng: &mut R,
) -> f64 {
    let var = params.sigma_s * params.sigma_s * p * h;
    let drift = match measure {
        Measure::Physical => params.mu_s * p * h,
        Measure::RiskNeutral { rate } => rate * h,
    };
    let xi: f64 = rng.sample(StandardNormal);
    drift - 0.5 * var + var.sqrt() * xi
}

/// Simulate `n_paths` joint paths on `[0, horizon]` at spacing `step`.
///
/// Sentiment is sampled exactly from its lognormal transition; the log-price
/// uses the left-point value of the delayed sentiment on each step. Each path
/// draws from its own stream keyed by `(seed, path index)`.
pub fn simulate_paths(
    params: &ModelParams,
    s0: f64,
    horizon: f64,
    step: f64,
    n_paths: usize,
    seed: u64,
    measure: Measure,
) -> Result<PathSet> {
    params.validate()?;
    if !(s0 > 0.0) {
        return Err(ModelError::param("s0", "must be positive"));
    }
    if !(step > 0.0) || !(horizon >= step) {
        return Err(ModelError::param("horizon", "must be at least one step"));
    }
    let r = delay_steps(params.tau, step)?;
    let n_steps = (horizon / step).round() as usize;
    if (n_steps as f64 * step - horizon).abs() > GRID_TOL * n_steps as f64 {
        return Err(ModelError::MisalignedGrid(format!(
            "horizon {horizon} is not a multiple of the step {step}"
        )));
    }
    let hist = ((params.lookback / step) + 1e-9).floor() as usize;
    let hist = hist.max(r);

    let paths: Vec<(SampledPath, SampledPath)> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            let mut sent = Vec::with_capacity(hist + n_steps + 1);
            fill_sentiment(params, step, hist, n_steps, &mut rng, &mut sent);
            let mut price = Vec::with_capacity(n_steps + 1);
            let mut log_s = s0.ln();
            price.push(s0);
            for j in 0..n_steps {
                let p = sent[hist + j - r];
                log_s += log_price_step(params, measure, p, step, &mut rng);
                price.push(log_s.exp());
            }
            (
                SampledPath { step, start_time: -(hist as f64) * step, values: sent },
                SampledPath { step, start_time: 0.0, values: price },
            )
        })
        .collect();
    let (sentiment, price) = paths.into_iter().unzip();
    Ok(PathSet { sentiment, price })
}

/// How the likelihood treats the first cumulative-sentiment observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstTerm {
    /// `a_1 - x_tau` is the integral over `span` of a GBM started at `level`.
    Levy { level: f64, span: f64 },
    /// The observation preceding the sample is known and the one-step
    /// recursion applies.
    Previous(f64),
    /// No density term for the first observation.
    Omitted,
}

/// Paired log-returns and cumulative sentiment at observation step `delta_big`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub delta_big: f64,
    pub returns: Vec<f64>,
    pub cumulants: Vec<f64>,
    /// Deterministic part of the first cumulant coming from the initial window.
    pub x_tau: f64,
    pub first_term: FirstTerm,
    /// Delay used to align the cumulants (years).
    pub tau: f64,
    /// The same delay counted in grid units.
    pub tau_steps: usize,
    /// Length of one grid unit of `tau_steps` (years).
    pub tau_unit: f64,
}

impl ReturnSample {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

fn check_same_grid(price: &SampledPath, sentiment: &SampledPath) -> Result<()> {
    if ((price.step - sentiment.step) / price.step).abs() > 1e-12 {
        return Err(ModelError::MisalignedGrid(format!(
            "price step {} differs from sentiment step {}",
            price.step, sentiment.step
        )));
    }
    if sentiment.signed_index(price.start_time).is_none() {
        return Err(ModelError::MisalignedGrid(
            "sentiment and price grids are offset by a fraction of a step".into(),
        ));
    }
    Ok(())
}

/// Index of the first observation whose aggregation window lies inside the
/// sentiment record, counting observations from one.
pub fn first_feasible_obs(
    price: &SampledPath,
    sentiment: &SampledPath,
    delta_big: f64,
    tau: f64,
) -> Result<usize> {
    check_same_grid(price, sentiment)?;
    let delta = price.step;
    let k = delay_steps(delta_big, delta)
        .map_err(|_| ModelError::MisalignedGrid(format!("Δ = {delta_big} is not a multiple of δ = {delta}")))?;
    if k == 0 {
        return Err(ModelError::param("delta_big", "must be at least one step"));
    }
    let r = delay_steps(tau, delta)?;
    let base = sentiment.signed_index(price.start_time).expect("checked above");
    // Window i starts at sentiment index base + (i-1)k - r.
    let need = r as i64 - base;
    let i0 = if need <= 0 { 1 } else { 1 + (need as usize).div_ceil(k) };
    Ok(i0)
}

/// Build `(R_i, A_i)` with `A_i = δ Σ_{j<k} P((i-1)Δ - τ + jδ)`.
pub fn build_return_sample(
    price: &SampledPath,
    sentiment: &SampledPath,
    delta_big: f64,
    tau: f64,
) -> Result<ReturnSample> {
    build_return_sample_from(price, sentiment, delta_big, tau, 1)
}

/// As [`build_return_sample`], skipping observations before `first_obs`.
pub fn build_return_sample_from(
    price: &SampledPath,
    sentiment: &SampledPath,
    delta_big: f64,
    tau: f64,
    first_obs: usize,
) -> Result<ReturnSample> {
    let i0 = first_feasible_obs(price, sentiment, delta_big, tau)?.max(first_obs).max(1);
    let delta = price.step;
    let k = delay_steps(delta_big, delta).expect("checked in first_feasible_obs");
    let r = delay_steps(tau, delta)?;
    let base = sentiment.signed_index(price.start_time).expect("checked");

    let n_price = (price.len() - 1) / k;
    let mut returns = Vec::new();
    let mut cumulants = Vec::new();
    for i in i0..=n_price {
        let start = base + ((i - 1) * k) as i64 - r as i64;
        let end = start + k as i64;
        if start < 0 || end > sentiment.len() as i64 {
            break;
        }
        let window = &sentiment.values[start as usize..end as usize];
        if window.iter().any(|v| !(*v > 0.0)) {
            return Err(ModelError::Domain("sentiment must be strictly positive".into()));
        }
        let s_prev = price.values[(i - 1) * k];
        let s_next = price.values[i * k];
        if !(s_prev > 0.0 && s_next > 0.0) {
            return Err(ModelError::Domain("prices must be strictly positive".into()));
        }
        returns.push(s_next.ln() - s_prev.ln());
        cumulants.push(delta * window.iter().sum::<f64>());
    }
    if returns.is_empty() {
        return Err(ModelError::InsufficientData(
            "series too short for one full aggregation window".into(),
        ));
    }

    let start = base + ((i0 - 1) * k) as i64 - r as i64;
    let zero = sentiment.signed_index(0.0);
    let (x_tau, first_term) = match zero {
        Some(z) if start < z => {
            let hist_end = (z.min(start + k as i64)) as usize;
            let x_tau = delta * sentiment.values[start as usize..hist_end].iter().sum::<f64>();
            let span = (start + k as i64 - z) as f64 * delta;
            if span > 0.0 {
                (x_tau, FirstTerm::Levy { level: sentiment.values[z as usize], span })
            } else {
                (x_tau, FirstTerm::Omitted)
            }
        }
        _ => (0.0, FirstTerm::Levy { level: sentiment.values[start as usize], span: delta_big }),
    };

    Ok(ReturnSample {
        delta_big,
        returns,
        cumulants,
        x_tau,
        first_term,
        tau,
        tau_steps: r,
        tau_unit: delta,
    })
}

/// Pair log-returns of a price series observed at step `Δ` with cumulative
/// sentiment observed on the same dates, lagged by `lag` observations.
///
/// `R_i = log S_i - log S_{i-1}` is paired with `A_{i-lag}`.
pub fn ingest_preaggregated(
    price: &SampledPath,
    cumulants: &[f64],
    lag: usize,
) -> Result<ReturnSample> {
    ingest_preaggregated_from(price, cumulants, lag, 1)
}

/// As [`ingest_preaggregated`], skipping returns before index `first_obs`.
pub fn ingest_preaggregated_from(
    price: &SampledPath,
    cumulants: &[f64],
    lag: usize,
    first_obs: usize,
) -> Result<ReturnSample> {
    if price.len() != cumulants.len() {
        return Err(ModelError::LengthMismatch(format!(
            "{} prices but {} sentiment observations",
            price.len(),
            cumulants.len()
        )));
    }
    if cumulants.iter().any(|a| !(*a > 0.0)) {
        return Err(ModelError::Domain("cumulative sentiment must be positive".into()));
    }
    let i0 = first_obs.max(lag).max(1);
    if i0 >= price.len() {
        return Err(ModelError::LengthMismatch(format!(
            "no pairs left after a lag of {lag} on {} observations",
            price.len()
        )));
    }
    let mut returns = Vec::with_capacity(price.len() - i0);
    let mut paired = Vec::with_capacity(price.len() - i0);
    for i in i0..price.len() {
        let (a, b) = (price.values[i - 1], price.values[i]);
        if !(a > 0.0 && b > 0.0) {
            return Err(ModelError::Domain("prices must be strictly positive".into()));
        }
        returns.push(b.ln() - a.ln());
        paired.push(cumulants[i - lag]);
    }
    let first_term = match (i0 - lag).checked_sub(1) {
        Some(j) => FirstTerm::Previous(cumulants[j]),
        None => FirstTerm::Omitted,
    };
    Ok(ReturnSample {
        delta_big: price.step,
        returns,
        cumulants: paired,
        x_tau: 0.0,
        first_term,
        tau: lag as f64 * price.step,
        tau_steps: lag,
        tau_unit: price.step,
    })
}
