//! Approximate likelihood of `(R_i, A_i)`, quasi-maximum-likelihood and
//! two-step estimation, and profile likelihood over the delay.

use nalgebra::{DMatrix, SMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{ip_moments_raw, levy_params, LevyLogNormal};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::simulate::{
    build_return_sample_from, first_feasible_obs, ingest_preaggregated_from, FirstTerm,
    ReturnSample, SampledPath,
};
use crate::special::chi2_ppf;

/// Box constraints on the volatility parameters.
pub const SIGMA_BOUNDS: (f64, f64) = (1e-6, 1e2);
/// Bound on the absolute value of the drift parameters.
pub const MU_BOUND: f64 = 1e2;
/// Number of starting points per optimisation.
pub const N_STARTS: usize = 5;
/// Minimum sample size for a four-parameter fit.
pub const MIN_OBS: usize = 8;

const LN_2PI: f64 = 1.8378770664093453;

/// The four estimated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikParams {
    #[serde(rename = "mu_P")]
    pub mu_p: f64,
    #[serde(rename = "sigma_P")]
    pub sigma_p: f64,
    #[serde(rename = "mu_S")]
    pub mu_s: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
}

impl LikParams {
    pub fn as_array(&self) -> [f64; 4] {
        [self.mu_p, self.sigma_p, self.mu_s, self.sigma_s]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        LikParams { mu_p: v[0], sigma_p: v[1], mu_s: v[2], sigma_s: v[3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Qml,
    TwoStepMoments,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

mod nan_array_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; 4], s: S) -> Result<S::Ok, S::Error> {
        let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
        opt.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 4], D::Error> {
        let v = <[Option<f64>; 4]>::deserialize(d)?;
        Ok(v.map(|x| x.unwrap_or(f64::NAN)))
    }
}

/// Outcome of an estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(flatten)]
    pub estimates: LikParams,
    /// Standard errors in the order `mu_P, sigma_P, mu_S, sigma_S`.
    #[serde(with = "nan_array_as_null")]
    pub std_errors: [f64; 4],
    #[serde(with = "nan_as_null")]
    pub loglik: f64,
    /// Selected delay in grid units.
    pub tau_hat: Option<usize>,
    /// Length of one grid unit in years.
    pub tau_unit: Option<f64>,
    pub tau_confidence_set: Vec<usize>,
    pub method: FitMethod,
    pub converged: bool,
}

impl FitResult {
    /// Selected delay in years, when known.
    pub fn tau_years(&self) -> Option<f64> {
        Some(self.tau_hat? as f64 * self.tau_unit?)
    }
}

/// Gaussian part of the log-likelihood: `r_i ~ N((mu_S - sigma_S²/2) a_i, sigma_S² a_i)`.
pub fn gaussian_block(mu_s: f64, sigma_s: f64, sample: &ReturnSample) -> f64 {
    let m = mu_s - 0.5 * sigma_s * sigma_s;
    let s2 = sigma_s * sigma_s;
    sample
        .returns
        .iter()
        .zip(&sample.cumulants)
        .map(|(r, a)| {
            let e = r - m * a;
            -0.5 * (LN_2PI + (s2 * a).ln()) - e * e / (2.0 * s2 * a)
        })
        .sum()
}

fn first_law(mu_p: f64, sigma_p: f64, sample: &ReturnSample) -> Result<Option<(LevyLogNormal, f64)>> {
    let a1 = sample.cumulants[0];
    match sample.first_term {
        FirstTerm::Omitted => Ok(None),
        FirstTerm::Previous(a0) => Ok(Some((step_law(mu_p, sigma_p, a0, sample.delta_big), a1))),
        FirstTerm::Levy { level, span } => {
            let y = a1 - sample.x_tau;
            if !(y > 0.0) {
                return Err(ModelError::Domain(format!(
                    "first cumulant {a1} does not exceed the initial-window integral {}",
                    sample.x_tau
                )));
            }
            let (m1, m2) = ip_moments_raw(mu_p, sigma_p, level, span)?;
            Ok(Some((levy_params(m1, m2)?, y)))
        }
    }
}

fn step_law(mu_p: f64, sigma_p: f64, prev: f64, delta_big: f64) -> LevyLogNormal {
    LevyLogNormal {
        alpha: prev.ln() + (mu_p - 0.5 * sigma_p * sigma_p) * delta_big,
        nu2: sigma_p * sigma_p * delta_big,
    }
}

/// Lognormal part of the log-likelihood for the cumulative sentiment.
pub fn lognormal_block(mu_p: f64, sigma_p: f64, sample: &ReturnSample) -> Result<f64> {
    let mut total = match first_law(mu_p, sigma_p, sample)? {
        Some((law, y)) => law.ln_pdf(y),
        None => 0.0,
    };
    for w in sample.cumulants.windows(2) {
        total += step_law(mu_p, sigma_p, w[0], sample.delta_big).ln_pdf(w[1]);
    }
    Ok(total)
}

fn check_sample(sample: &ReturnSample) -> Result<()> {
    if sample.returns.len() != sample.cumulants.len() {
        return Err(ModelError::LengthMismatch(format!(
            "{} returns but {} cumulants",
            sample.returns.len(),
            sample.cumulants.len()
        )));
    }
    if sample.is_empty() {
        return Err(ModelError::InsufficientData("empty sample".into()));
    }
    if let Some(a) = sample.cumulants.iter().find(|a| !(**a > 0.0)) {
        return Err(ModelError::Domain(format!("cumulative sentiment {a} is not positive")));
    }
    Ok(())
}

/// Approximate joint log-likelihood of the sample.
pub fn loglik(theta: &LikParams, sample: &ReturnSample) -> Result<f64> {
    if !(theta.sigma_p > 0.0) || !(theta.sigma_s > 0.0) {
        return Err(ModelError::param("sigma", "volatilities must be positive"));
    }
    check_sample(sample)?;
    let (g, h) = loglik_blocks(theta, sample)?;
    let v = g + h;
    if !v.is_finite() {
        return Err(ModelError::NonFinite("loglik"));
    }
    Ok(v)
}

/// The price and sentiment blocks of [`loglik`], in that order.
pub fn loglik_blocks(theta: &LikParams, sample: &ReturnSample) -> Result<(f64, f64)> {
    check_sample(sample)?;
    Ok((
        gaussian_block(theta.mu_s, theta.sigma_s, sample),
        lognormal_block(theta.mu_p, theta.sigma_p, sample)?,
    ))
}

/// Closed-form maximiser of the Gaussian block, as `(mu_S, sigma_S)`.
pub fn gaussian_block_mle(sample: &ReturnSample) -> (f64, f64) {
    let n = sample.len() as f64;
    let m = sample.returns.iter().sum::<f64>() / sample.cumulants.iter().sum::<f64>();
    let s2 = sample
        .returns
        .iter()
        .zip(&sample.cumulants)
        .map(|(r, a)| (r - m * a).powi(2) / a)
        .sum::<f64>()
        / n;
    (m + 0.5 * s2, s2.sqrt())
}

struct BlockFit {
    mu: f64,
    sigma: f64,
    value: f64,
    converged: bool,
}

fn sigma_from_log(x: f64) -> f64 {
    x.exp().clamp(SIGMA_BOUNDS.0, SIGMA_BOUNDS.1)
}

/// Maximise a two-parameter block over `(mu - sigma²/2, log sigma)`.
fn fit_block(
    objective: impl Fn(f64, f64) -> Option<f64>,
    mu0: f64,
    sigma0: f64,
    drift_scale: f64,
) -> BlockFit {
    let sigma0 = sigma0.clamp(SIGMA_BOUNDS.0 * 10.0, SIGMA_BOUNDS.1 / 10.0);
    let c0 = mu0 - 0.5 * sigma0 * sigma0;
    let l0 = sigma0.ln();
    let f = |x: &[f64]| -> f64 {
        let sigma = sigma_from_log(x[1]);
        let mu = x[0] + 0.5 * sigma * sigma;
        if !(mu.abs() < MU_BOUND) {
            return f64::INFINITY;
        }
        match objective(mu, sigma) {
            Some(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };
    let d = drift_scale.max(1e-8);
    let starts = [(0.0, 0.0), (d, 0.3), (-d, -0.3), (d, -0.3), (-d, 0.3)];
    let opts = NelderMeadOptions::default();
    let mut best: Option<crate::optim::Minimum> = None;
    for (dc, dl) in starts.iter().take(N_STARTS) {
        let m = nelder_mead(&f, &[c0 + dc, l0 + dl], &[d, 0.2], opts);
        if best.as_ref().is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
    }
    let m = best.expect("at least one start");
    let sigma = sigma_from_log(m.x[1]);
    BlockFit { mu: m.x[0] + 0.5 * sigma * sigma, sigma, value: -m.f, converged: m.converged && m.f.is_finite() }
}

fn crude_sentiment_start(sample: &ReturnSample) -> (f64, f64) {
    let logs: Vec<f64> = sample.cumulants.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let dt = sample.delta_big;
    if logs.len() < 2 {
        return (0.1, 0.5);
    }
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma = (var / dt).sqrt().max(1e-3);
    let mu = mean / dt + 0.5 * sigma * sigma;
    (if mu.abs() < 1e-6 { 1e-3 } else { mu }, sigma)
}

fn crude_price_start(sample: &ReturnSample) -> (f64, f64) {
    let sum_a: f64 = sample.cumulants.iter().sum();
    let sigma = (sample.returns.iter().map(|r| r * r).sum::<f64>() / sum_a).sqrt().max(1e-4);
    (sample.returns.iter().sum::<f64>() / sum_a + 0.5 * sigma * sigma, sigma)
}

fn fit_gaussian(sample: &ReturnSample, init: Option<(f64, f64)>) -> BlockFit {
    let (mu0, s0) = init.unwrap_or_else(|| crude_price_start(sample));
    let sum_a: f64 = sample.cumulants.iter().sum();
    let scale = 2.0 * s0 / sum_a.sqrt() + 0.1 * mu0.abs();
    fit_block(|mu, sigma| Some(gaussian_block(mu, sigma, sample)), mu0, s0, scale)
}

fn fit_lognormal(sample: &ReturnSample, init: Option<(f64, f64)>) -> BlockFit {
    let (mu0, s0) = init.unwrap_or_else(|| crude_sentiment_start(sample));
    let span = sample.len() as f64 * sample.delta_big;
    let scale = 2.0 * s0 / span.sqrt() + 0.1 * mu0.abs();
    fit_block(|mu, sigma| lognormal_block(mu, sigma, sample).ok(), mu0, s0, scale)
}

/// Central-difference Hessian of `f` at `x`.
fn hessian<const N: usize>(f: impl Fn(&[f64; N]) -> f64, x: &[f64; N]) -> SMatrix<f64, N, N> {
    let h: [f64; N] = std::array::from_fn(|i| 1e-4 * x[i].abs().max(1e-2));
    let f0 = f(x);
    let shifted = |d: &[(usize, f64)]| {
        let mut y = *x;
        for (i, s) in d {
            y[*i] += s;
        }
        f(&y)
    };
    let mut m = SMatrix::<f64, N, N>::zeros();
    for i in 0..N {
        let fp = shifted(&[(i, h[i])]);
        let fm = shifted(&[(i, -h[i])]);
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let v = (shifted(&[(i, h[i]), (j, h[j])]) - shifted(&[(i, h[i]), (j, -h[j])])
                - shifted(&[(i, -h[i]), (j, h[j])])
                + shifted(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn std_errors_from_info(info: DMatrix<f64>) -> Vec<f64> {
    let n = info.nrows();
    match info.try_inverse() {
        Some(cov) => (0..n)
            .map(|i| if cov[(i, i)] > 0.0 { cov[(i, i)].sqrt() } else { f64::NAN })
            .collect(),
        None => vec![f64::NAN; n],
    }
}

/// Standard errors from the observed information of the full likelihood.
pub fn qml_std_errors(theta: &LikParams, sample: &ReturnSample) -> [f64; 4] {
    let neg = |x: &[f64; 4]| match loglik(&LikParams::from_array(*x), sample) {
        Ok(v) => -v,
        Err(_) => f64::NAN,
    };
    let h = hessian(neg, &theta.as_array());
    let se = std_errors_from_info(DMatrix::from_iterator(4, 4, h.iter().copied()));
    [se[0], se[1], se[2], se[3]]
}

fn gaussian_std_errors(mu_s: f64, sigma_s: f64, sample: &ReturnSample) -> [f64; 2] {
    let neg = |x: &[f64; 2]| -gaussian_block(x[0], x[1], sample);
    let h = hessian(neg, &[mu_s, sigma_s]);
    let se = std_errors_from_info(DMatrix::from_iterator(2, 2, h.iter().copied()));
    [se[0], se[1]]
}

/// Quasi-maximum-likelihood fit of all four parameters.
///
/// The likelihood splits into a price block and a sentiment block with no
/// shared parameters, so each block is maximised on its own.
pub fn fit_qml(sample: &ReturnSample, init: Option<LikParams>) -> Result<FitResult> {
    check_sample(sample)?;
    if sample.len() < MIN_OBS {
        return Err(ModelError::InsufficientData(format!(
            "{} observations, need at least {MIN_OBS}",
            sample.len()
        )));
    }
    let g = fit_gaussian(sample, init.map(|p| (p.mu_s, p.sigma_s)));
    let l = fit_lognormal(sample, init.map(|p| (p.mu_p, p.sigma_p)));
    let estimates = LikParams { mu_p: l.mu, sigma_p: l.sigma, mu_s: g.mu, sigma_s: g.sigma };
    Ok(FitResult {
        estimates,
        std_errors: qml_std_errors(&estimates, sample),
        loglik: g.value + l.value,
        tau_hat: Some(sample.tau_steps),
        tau_unit: Some(sample.tau_unit),
        tau_confidence_set: Vec::new(),
        method: FitMethod::Qml,
        converged: g.converged && l.converged,
    })
}

/// Maximise only the price block with the sentiment parameters held fixed.
pub fn fit_price_block(sample: &ReturnSample) -> Result<(f64, f64, bool)> {
    check_sample(sample)?;
    let g = fit_gaussian(sample, None);
    Ok((g.mu, g.sigma, g.converged))
}

/// Moment estimates of the sentiment parameters from the fine series,
/// followed by maximisation of the price block.
pub fn fit_two_step(fine_sentiment: &SampledPath, sample: &ReturnSample) -> Result<FitResult> {
    check_sample(sample)?;
    let start = fine_sentiment
        .values
        .iter()
        .enumerate()
        .position(|(i, _)| fine_sentiment.time(i) >= -1e-12)
        .ok_or_else(|| ModelError::InsufficientData("no sentiment at or after time zero".into()))?;
    let values = &fine_sentiment.values[start..];
    if values.len() < 30 {
        return Err(ModelError::InsufficientData(format!(
            "{} fine sentiment observations, need at least 30",
            values.len()
        )));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(ModelError::Domain("sentiment must be strictly positive".into()));
    }
    let x: Vec<f64> = values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    let m = x.len() as f64;
    let dt = fine_sentiment.step;
    let mean = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let sigma_p = (var / dt).sqrt();
    let mu_p = mean / dt + 0.5 * sigma_p * sigma_p;

    let g = fit_gaussian(sample, None);
    let estimates = LikParams { mu_p, sigma_p, mu_s: g.mu, sigma_s: g.sigma };
    let [se_mu_s, se_sigma_s] = gaussian_std_errors(g.mu, g.sigma, sample);
    let loglik = loglik(&estimates, sample).unwrap_or(f64::NAN);
    Ok(FitResult {
        estimates,
        std_errors: [sigma_p / (m * dt).sqrt(), sigma_p / (2.0 * m).sqrt(), se_mu_s, se_sigma_s],
        loglik,
        tau_hat: Some(sample.tau_steps),
        tau_unit: Some(sample.tau_unit),
        tau_confidence_set: Vec::new(),
        method: FitMethod::TwoStepMoments,
        converged: g.converged,
    })
}

/// Data from which return samples are rebuilt for each candidate delay.
#[derive(Debug, Clone, Copy)]
pub enum ProfileData<'a> {
    /// Price and sentiment on a common fine grid; delays count fine steps.
    Fine { price: &'a SampledPath, sentiment: &'a SampledPath, delta_big: f64 },
    /// Prices at the observation step with cumulative sentiment on the same
    /// dates; delays count observations.
    Preaggregated { price: &'a SampledPath, cumulants: &'a [f64] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub tau_steps: usize,
    pub loglik: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileResult {
    pub fit: FitResult,
    pub points: Vec<ProfilePoint>,
    pub warnings: Vec<String>,
}

/// Half-width of the likelihood-ratio region, `½ χ²₁(1 - 2α)`.
pub fn lr_half_width(alpha: f64) -> f64 {
    0.5 * chi2_ppf(1.0 - 2.0 * alpha, 1.0)
}

/// Arg-max and the set of grid points within `half_width` of the maximum.
/// Ties resolve to the earliest point.
pub fn confidence_set(values: &[(usize, f64)], half_width: f64) -> Option<(usize, Vec<usize>)> {
    let mut best: Option<(usize, f64)> = None;
    for &(t, v) in values {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    let (t_hat, l_max) = best?;
    let set = values.iter().filter(|(_, v)| *v >= l_max - half_width).map(|(t, _)| *t).collect();
    Some((t_hat, set))
}

/// Profile the likelihood over a grid of delays. All grid points are
/// evaluated on the same set of observation periods.
pub fn profile_tau(data: ProfileData<'_>, tau_grid: &[usize], alpha: f64) -> Result<ProfileResult> {
    if tau_grid.is_empty() {
        return Err(ModelError::param("tau_grid", "must not be empty"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(ModelError::param("alpha", "must lie in (0, 0.5)"));
    }
    let build = |first: usize, tau: usize| -> Result<ReturnSample> {
        match data {
            ProfileData::Fine { price, sentiment, delta_big } => build_return_sample_from(
                price,
                sentiment,
                delta_big,
                tau as f64 * price.step,
                first,
            ),
            ProfileData::Preaggregated { price, cumulants } => {
                ingest_preaggregated_from(price, cumulants, tau, first)
            }
        }
    };
    let first = match data {
        ProfileData::Fine { price, sentiment, delta_big } => {
            let mut first = 1;
            for &t in tau_grid {
                first = first.max(first_feasible_obs(price, sentiment, delta_big, t as f64 * price.step)?);
            }
            first
        }
        ProfileData::Preaggregated { .. } => tau_grid.iter().max().copied().unwrap_or(0) + 1,
    };

    let fits: Vec<(usize, Result<FitResult>)> = tau_grid
        .par_iter()
        .map(|&t| (t, build(first, t).and_then(|s| fit_qml(&s, None))))
        .collect();

    let mut points = Vec::with_capacity(fits.len());
    let mut warnings = Vec::new();
    let mut ok: Vec<(usize, f64)> = Vec::new();
    let mut best_fit: Option<FitResult> = None;
    for (t, res) in fits {
        match res {
            Ok(fit) if fit.converged => {
                points.push(ProfilePoint { tau_steps: t, loglik: Some(fit.loglik), converged: true });
                if best_fit.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
                    best_fit = Some(fit.clone());
                }
                ok.push((t, fit.loglik));
            }
            Ok(fit) => {
                warnings.push(format!("tau = {t}: optimiser did not converge"));
                points.push(ProfilePoint { tau_steps: t, loglik: Some(fit.loglik), converged: false });
            }
            Err(e) => {
                warnings.push(format!("tau = {t}: {e}"));
                points.push(ProfilePoint { tau_steps: t, loglik: None, converged: false });
            }
        }
    }
    let (t_hat, set) = confidence_set(&ok, lr_half_width(alpha))
        .ok_or_else(|| ModelError::InsufficientData("no grid point could be fitted".into()))?;
    let mut fit = best_fit.expect("non-empty when a set exists");
    fit.tau_hat = Some(t_hat);
    fit.tau_confidence_set = set;
    Ok(ProfileResult { fit, points, warnings })
}
