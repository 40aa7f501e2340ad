//! European vanilla and cash-or-nothing pricing: Black–Scholes kernel,
//! lognormal-mixture quadrature, and a Monte Carlo check under the minimal
//! martingale measure.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{daycount, ip_moments, levy_params, x_tau_deterministic, ModelParams};
use crate::quadrature::GaussLegendre;
use crate::simulate::{delay_steps, fill_sentiment, log_price_step, path_rng, Measure};
use crate::special::{norm_cdf, norm_ppf};

/// Default number of Gauss–Legendre nodes.
pub const DEFAULT_NODES: usize = 256;
/// Probability mass cut from each tail of the mixing law.
pub const TAIL_CUT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
    BinaryCashCall,
}

impl std::str::FromStr for OptionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "call" => Ok(OptionKind::Call),
            "put" => Ok(OptionKind::Put),
            "binary" | "binary_cash_call" | "binary-cash-call" => Ok(OptionKind::BinaryCashCall),
            other => Err(ModelError::param("kind", format!("unknown option kind `{other}`"))),
        }
    }
}

/// A European contract valued at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub maturity: f64,
    /// Cash paid by a binary option; ignored otherwise.
    pub cash: f64,
    pub rate: f64,
}

impl OptionSpec {
    pub fn call(strike: f64, maturity: f64, rate: f64) -> Self {
        OptionSpec { kind: OptionKind::Call, strike, maturity, cash: 0.0, rate }
    }

    pub fn put(strike: f64, maturity: f64, rate: f64) -> Self {
        OptionSpec { kind: OptionKind::Put, strike, maturity, cash: 0.0, rate }
    }

    pub fn binary(strike: f64, maturity: f64, cash: f64, rate: f64) -> Self {
        OptionSpec { kind: OptionKind::BinaryCashCall, strike, maturity, cash, rate }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0) {
            return Err(ModelError::param("maturity", "must be positive"));
        }
        if !(self.strike >= 0.0) {
            return Err(ModelError::param("strike", "must be non-negative"));
        }
        if self.kind == OptionKind::BinaryCashCall && !(self.cash > 0.0) {
            return Err(ModelError::param("cash", "binary payout must be positive"));
        }
        if !self.rate.is_finite() {
            return Err(ModelError::param("rate", "must be finite"));
        }
        Ok(())
    }

    /// Payoff at maturity for terminal price `s`.
    pub fn payoff(&self, s: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (s - self.strike).max(0.0),
            OptionKind::Put => (self.strike - s).max(0.0),
            OptionKind::BinaryCashCall => {
                if s > self.strike {
                    self.cash
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub price: f64,
    pub method: PriceMethod,
    /// Monte Carlo standard error; zero for quadrature.
    pub stderr: f64,
    /// Quadrature nodes or simulated paths.
    pub size: usize,
}

/// Black–Scholes value given total log-variance `total_var` and
/// `int_rate = ∫_t^T r(u) du`.
fn kernel(spec: &OptionSpec, s: f64, total_var: f64, int_rate: f64) -> f64 {
    let disc = (-int_rate).exp();
    let k = spec.strike;
    if k == 0.0 {
        return match spec.kind {
            OptionKind::Call => s,
            OptionKind::Put => 0.0,
            OptionKind::BinaryCashCall => spec.cash * disc,
        };
    }
    if total_var <= 0.0 {
        let fwd = s / disc;
        return match spec.kind {
            OptionKind::Call => (s - k * disc).max(0.0),
            OptionKind::Put => (k * disc - s).max(0.0),
            OptionKind::BinaryCashCall => {
                if fwd > k {
                    spec.cash * disc
                } else {
                    0.0
                }
            }
        };
    }
    let v = total_var.sqrt();
    let d1 = ((s / k).ln() + int_rate + 0.5 * total_var) / v;
    let d2 = d1 - v;
    match spec.kind {
        OptionKind::Call => s * norm_cdf(d1) - k * disc * norm_cdf(d2),
        OptionKind::Put => s * norm_cdf(d1) - k * disc * norm_cdf(d2) - s + k * disc,
        OptionKind::BinaryCashCall => spec.cash * disc * norm_cdf(d2),
    }
}

/// Black–Scholes price at time `t` with total variance `sigma_s² x` over `[t, T]`.
pub fn bs_kernel(t: f64, s: f64, x: f64, sigma_s: f64, spec: &OptionSpec) -> Result<f64> {
    spec.validate()?;
    if !(x > 0.0) {
        return Err(ModelError::Domain(format!("integrated variance carrier {x} must be positive")));
    }
    if !(s > 0.0) {
        return Err(ModelError::param("s", "must be positive"));
    }
    if !(t < spec.maturity) {
        return Err(ModelError::param("t", "must precede maturity"));
    }
    Ok(kernel(spec, s, sigma_s * sigma_s * x, spec.rate * (spec.maturity - t)))
}

fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("quadrature cache poisoned");
    map.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub nodes: usize,
    /// Add the deterministic initial-window integral to every node.
    pub include_initial_window: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { nodes: DEFAULT_NODES, include_initial_window: true }
    }
}

/// Price by integrating the Black–Scholes kernel against the lognormal
/// approximation of the integrated information over `[0, T]`.
pub fn price_quadrature(
    params: &ModelParams,
    s0: f64,
    spec: &OptionSpec,
    include_initial_window: bool,
) -> Result<PriceResult> {
    price_quadrature_with(params, s0, spec, QuadratureOptions { include_initial_window, ..Default::default() })
}

pub fn price_quadrature_with(
    params: &ModelParams,
    s0: f64,
    spec: &OptionSpec,
    opts: QuadratureOptions,
) -> Result<PriceResult> {
    params.validate()?;
    spec.validate()?;
    if !(s0 > 0.0) {
        return Err(ModelError::param("s0", "must be positive"));
    }
    if opts.nodes == 0 {
        return Err(ModelError::param("nodes", "must be positive"));
    }
    let s2 = params.sigma_s * params.sigma_s;
    let int_rate = spec.rate * spec.maturity;
    let done = |price: f64| PriceResult { price, method: PriceMethod::Quadrature, stderr: 0.0, size: opts.nodes };

    if spec.maturity <= params.tau {
        return Ok(done(kernel(spec, s0, s2 * params.phi0 * spec.maturity, int_rate)));
    }
    let shift = if opts.include_initial_window { x_tau_deterministic(params) } else { 0.0 };
    let (m1, m2) = ip_moments(params, spec.maturity - params.tau)?;
    let law = levy_params(m1, m2)?;
    if law.nu2 == 0.0 {
        return Ok(done(kernel(spec, s0, s2 * (shift + m1), int_rate)));
    }
    let gl = gauss_legendre(opts.nodes);
    let (lo, hi) = (TAIL_CUT, 1.0 - TAIL_CUT);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (z, w) in gl.nodes.iter().zip(&gl.weights) {
        let u = mid + half * z;
        let x = shift + law.at_standard_score(norm_ppf(u));
        acc += w * kernel(spec, s0, s2 * x, int_rate);
        wsum += w;
    }
    let price = acc / wsum;
    if !price.is_finite() {
        return Err(ModelError::NonFinite("price_quadrature"));
    }
    Ok(done(price.max(0.0)))
}

/// Paths simulated per parallel task; fixed so sums are combined in a
/// scheduling-independent order.
const MC_CHUNK: usize = 4096;

/// Monte Carlo price under the minimal martingale measure.
pub fn price_mc(
    params: &ModelParams,
    s0: f64,
    spec: &OptionSpec,
    n_paths: usize,
    step: f64,
    seed: u64,
) -> Result<PriceResult> {
    Ok(price_mc_many(params, s0, std::slice::from_ref(spec), n_paths, step, seed)?[0])
}

/// Price several contracts sharing maturity and rate on one set of paths.
pub fn price_mc_many(
    params: &ModelParams,
    s0: f64,
    specs: &[OptionSpec],
    n_paths: usize,
    step: f64,
    seed: u64,
) -> Result<Vec<PriceResult>> {
    params.validate()?;
    let first = specs.first().ok_or_else(|| ModelError::param("specs", "must not be empty"))?;
    for s in specs {
        s.validate()?;
        if s.maturity != first.maturity || s.rate != first.rate {
            return Err(ModelError::param("specs", "contracts must share maturity and rate"));
        }
    }
    if !(s0 > 0.0) {
        return Err(ModelError::param("s0", "must be positive"));
    }
    if n_paths < 2 {
        return Err(ModelError::param("n_paths", "need at least two paths"));
    }
    if !(step > 0.0) {
        return Err(ModelError::param("step", "must be positive"));
    }
    let maturity = first.maturity;
    let rate = first.rate;
    let r = delay_steps(params.tau, step)?;
    let n_full = (maturity / step + 1e-9).floor() as usize;
    let last = maturity - n_full as f64 * step;
    let last = if last > 1e-12 { last } else { 0.0 };
    let n_left = n_full + usize::from(last > 0.0);
    let n_fwd = n_left.saturating_sub(r + 1);
    let measure = Measure::RiskNeutral { rate };
    let disc = (-rate * maturity).exp();
    let n_specs = specs.len();

    let n_chunks = n_paths.div_ceil(MC_CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = vec![(0.0, 0.0); n_specs];
            let mut sent = Vec::with_capacity(r + n_fwd + 1);
            let lo = c * MC_CHUNK;
            let hi = (lo + MC_CHUNK).min(n_paths);
            for k in lo..hi {
                let mut rng = path_rng(seed, k as u64);
                fill_sentiment(params, step, r, n_fwd, &mut rng, &mut sent);
                let mut log_s = s0.ln();
                for (j, &p) in sent.iter().take(n_left).enumerate() {
                    let h = if j < n_full { step } else { last };
                    log_s += log_price_step(params, measure, p, h, &mut rng);
                }
                let s_t = log_s.exp();
                for (acc, spec) in sums.iter_mut().zip(specs) {
                    let v = disc * spec.payoff(s_t);
                    acc.0 += v;
                    acc.1 += v * v;
                }
            }
            sums
        })
        .collect();

    let n = n_paths as f64;
    Ok((0..n_specs)
        .map(|i| {
            let (s, ss) = partial.iter().fold((0.0, 0.0), |a, p| (a.0 + p[i].0, a.1 + p[i].1));
            let mean = s / n;
            let var = ((ss - n * mean * mean) / (n - 1.0)).max(0.0);
            PriceResult { price: mean, method: PriceMethod::MonteCarlo, stderr: (var / n).sqrt(), size: n_paths }
        })
        .collect())
}

/// One row of a price table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub p0: f64,
    pub maturity: f64,
    pub tau: f64,
    pub prices: Vec<f64>,
}

/// Quadrature prices laid out as rows `(P0, T, tau)` by strike columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub kind: OptionKind,
    pub strikes: Vec<f64>,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p0,maturity,tau");
        for k in &self.strikes {
            out.push_str(&format!(",K={k}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{},{}", row.p0, row.maturity, row.tau));
            for p in &row.prices {
                out.push_str(&format!(",{p:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Contract and market inputs shared by every cell of a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableInputs {
    pub kind: OptionKind,
    pub s0: f64,
    pub rate: f64,
    pub cash: f64,
    pub quadrature: QuadratureOptions,
}

/// Price the grid `p0s × maturities × taus` (rows) by `strikes` (columns).
pub fn table_report(
    base: &ModelParams,
    inputs: &TableInputs,
    strikes: &[f64],
    maturities: &[f64],
    taus: &[f64],
    p0s: &[f64],
) -> Result<TableReport> {
    if strikes.is_empty() || maturities.is_empty() || taus.is_empty() || p0s.is_empty() {
        return Err(ModelError::param("grid", "every axis needs at least one value"));
    }
    let mut rows = Vec::new();
    for &p0 in p0s {
        for &maturity in maturities {
            for &tau in taus {
                let params = base.with_phi0(p0).with_tau(tau);
                let prices = strikes
                    .iter()
                    .map(|&k| {
                        let spec = OptionSpec { kind: inputs.kind, strike: k, maturity, cash: inputs.cash, rate: inputs.rate };
                        price_quadrature_with(&params, inputs.s0, &spec, inputs.quadrature).map(|r| r.price)
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(TableRow { p0, maturity, tau, prices });
            }
        }
    }
    Ok(TableReport { kind: inputs.kind, strikes: strikes.to_vec(), rows })
}

/// Grid and parameters of one of the built-in pricing tables.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePreset {
    pub name: &'static str,
    pub base: ModelParams,
    pub inputs: TableInputs,
    pub strikes: Vec<f64>,
    pub maturities: Vec<f64>,
    pub taus: Vec<f64>,
    pub p0s: Vec<f64>,
}

impl TablePreset {
    pub fn run(&self) -> Result<TableReport> {
        table_report(&self.base, &self.inputs, &self.strikes, &self.maturities, &self.taus, &self.p0s)
    }
}

/// Built-in tables `table3` to `table6`.
///
/// Maturities are quoted in months and delays in working weeks of five
/// trading days; the initial-window shift is off.
pub fn table_preset(name: &str) -> Result<TablePreset> {
    let week = daycount::WORKING_WEEK;
    let three_months = 3.0 * daycount::MONTH;
    let one_month = daycount::MONTH;
    let base = ModelParams::new(0.03, 0.35, 0.0, 0.04, week, 100.0, 2.0 * week)?;
    let strikes = vec![400.0, 425.0, 450.0, 475.0, 500.0];
    let inputs = |kind| TableInputs {
        kind,
        s0: 450.0,
        rate: 0.01,
        cash: 100.0,
        quadrature: QuadratureOptions { nodes: DEFAULT_NODES, include_initial_window: false },
    };
    let (name, kind, maturities, taus, p0s) = match name {
        "table3" => ("table3", OptionKind::Call, vec![three_months], vec![week], vec![10.0, 100.0, 1000.0]),
        "table4" => ("table4", OptionKind::Call, vec![one_month, three_months], vec![week, 2.0 * week], vec![100.0]),
        "table5" => ("table5", OptionKind::BinaryCashCall, vec![three_months], vec![week], vec![10.0, 100.0, 1000.0]),
        "table6" => ("table6", OptionKind::BinaryCashCall, vec![one_month, three_months], vec![week, 2.0 * week], vec![100.0]),
        other => return Err(ModelError::param("preset", format!("unknown table preset `{other}`"))),
    };
    Ok(TablePreset { name, base, inputs: inputs(kind), strikes, maturities, taus, p0s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table3_params(p0: f64) -> ModelParams {
        ModelParams::new(0.03, 0.35, 0.0, 0.04, 5.0 / 365.0, p0, 5.0 / 365.0).unwrap()
    }

    /// Textbook Black–Scholes call with its own normal CDF.
    fn textbook_call(s: f64, k: f64, r: f64, vol: f64, t: f64) -> f64 {
        fn phi(x: f64) -> f64 {
            0.5 * erfc_series(-x / std::f64::consts::SQRT_2)
        }
        let d1 = ((s / k).ln() + (r + 0.5 * vol * vol) * t) / (vol * t.sqrt());
        let d2 = d1 - vol * t.sqrt();
        s * phi(d1) - k * (-r * t).exp() * phi(d2)
    }

    /// erfc by continued fraction for |x| > 2 and Taylor series otherwise.
    fn erfc_series(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc_series(-x);
        }
        if x < 2.0 {
            let mut sum = 0.0;
            let mut term = x;
            let mut n = 0.0;
            while term.abs() > 1e-18 {
                sum += term / (2.0 * n + 1.0);
                n += 1.0;
                term *= -x * x / n;
            }
            1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
        } else {
            let mut f = 0.0;
            for k in (1..60).rev() {
                f = (k as f64 / 2.0) / (x + f);
            }
            (-x * x).exp() / std::f64::consts::PI.sqrt() / (x + f)
        }
    }

    #[test]
    fn kernel_matches_textbook() {
        let t_mat = 0.25;
        let sigma_s = 0.04;
        let vol: f64 = 0.4;
        let x = vol * vol * t_mat / (sigma_s * sigma_s);
        let spec = OptionSpec::call(450.0, t_mat, 0.01);
        let k = bs_kernel(0.0, 450.0, x, sigma_s, &spec).unwrap();
        assert_relative_eq!(k, textbook_call(450.0, 450.0, 0.01, vol, t_mat), epsilon = 1e-10);
    }

    #[test]
    fn kernel_limits() {
        let spec = OptionSpec::call(0.0, 1.0, 0.05);
        assert_eq!(bs_kernel(0.0, 123.0, 2.0, 0.3, &spec).unwrap(), 123.0);
        let spec = OptionSpec::call(100.0, 1.0, 0.05);
        let tiny = bs_kernel(0.0, 110.0, 1e-14, 0.3, &spec).unwrap();
        assert_relative_eq!(tiny, 110.0 - 100.0 * (-0.05f64).exp(), max_relative = 1e-9);
        assert!(matches!(bs_kernel(0.0, 110.0, 0.0, 0.3, &spec), Err(ModelError::Domain(_))));
        let bin = OptionSpec::binary(100.0, 1.0, 10.0, 0.05);
        let b = bs_kernel(0.0, 110.0, 1e-14, 0.3, &bin).unwrap();
        assert_relative_eq!(b, 10.0 * (-0.05f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn zero_strike_call_is_spot() {
        let p = table3_params(100.0);
        let r = price_quadrature(&p, 450.0, &OptionSpec::call(0.0, 0.25, 0.01), true).unwrap();
        assert_relative_eq!(r.price, 450.0, max_relative = 1e-13);
    }

    #[test]
    fn put_call_parity() {
        for p0 in [10.0, 100.0, 1000.0] {
            let p = table3_params(p0);
            for k in [400.0, 450.0, 500.0] {
                for shift in [false, true] {
                    let c = price_quadrature(&p, 450.0, &OptionSpec::call(k, 0.25, 0.01), shift).unwrap();
                    let q = price_quadrature(&p, 450.0, &OptionSpec::put(k, 0.25, 0.01), shift).unwrap();
                    let parity = 450.0 - k * (-0.01f64 * 0.25).exp();
                    assert!((c.price - q.price - parity).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn node_doubling_is_converged() {
        for p0 in [10.0, 100.0, 1000.0] {
            let p = table3_params(p0);
            for k in [400.0, 425.0, 450.0, 475.0, 500.0] {
                let spec = OptionSpec::call(k, 0.25, 0.01);
                let a = price_quadrature_with(&p, 450.0, &spec, QuadratureOptions { nodes: 256, include_initial_window: true }).unwrap();
                let b = price_quadrature_with(&p, 450.0, &spec, QuadratureOptions { nodes: 512, include_initial_window: true }).unwrap();
                assert!(((a.price - b.price) / b.price).abs() < 1e-6, "P0={p0} K={k}");
            }
        }
    }

    #[test]
    fn point_mass_reduces_to_kernel() {
        let p = ModelParams::new(0.03, 1e-9, 0.0, 0.04, 5.0 / 365.0, 100.0, 5.0 / 365.0).unwrap();
        let spec = OptionSpec::call(450.0, 0.25, 0.01);
        let (m1, _) = ip_moments(&p, 0.25 - p.tau).unwrap();
        let q = price_quadrature(&p, 450.0, &spec, false).unwrap();
        let k = bs_kernel(0.0, 450.0, m1, p.sigma_s, &spec).unwrap();
        assert!((q.price - k).abs() < 1e-8);
    }

    #[test]
    fn monotone_in_strike_p0_and_maturity() {
        for kind in [OptionKind::Call, OptionKind::BinaryCashCall] {
            for p0 in [10.0, 100.0, 1000.0] {
                let p = table3_params(p0);
                let mut prev = f64::INFINITY;
                for k in [400.0, 425.0, 450.0, 475.0, 500.0] {
                    let spec = OptionSpec { kind, strike: k, maturity: 0.25, cash: 100.0, rate: 0.01 };
                    let v = price_quadrature(&p, 450.0, &spec, true).unwrap().price;
                    assert!(v < prev);
                    prev = v;
                }
            }
        }
        for k in [400.0, 450.0, 500.0] {
            let spec = OptionSpec::call(k, 0.25, 0.01);
            let prices: Vec<f64> = [10.0, 100.0, 1000.0]
                .iter()
                .map(|p0| price_quadrature(&table3_params(*p0), 450.0, &spec, true).unwrap().price)
                .collect();
            assert!(prices[0] < prices[1] && prices[1] < prices[2]);
            let short = price_quadrature(&table3_params(100.0), 450.0, &OptionSpec::call(k, 1.0 / 12.0, 0.01), true).unwrap();
            assert!(short.price < prices[1]);
        }
    }

    #[test]
    fn noise_free_mc_is_exact() {
        let p = ModelParams::new(0.03, 0.35, 0.0, 0.0, 5.0 / 365.0, 100.0, 5.0 / 365.0).unwrap();
        let spec = OptionSpec::call(440.0, 0.25, 0.01);
        let r = price_mc(&p, 450.0, &spec, 64, 1.0 / 730.0, 9).unwrap();
        let exact = (-0.0025f64).exp() * (450.0 * 0.0025f64.exp() - 440.0);
        assert_relative_eq!(r.price, exact, max_relative = 1e-12);
        assert!(r.stderr < 1e-9);
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let p = table3_params(100.0);
        let spec = OptionSpec::call(450.0, 0.25, 0.01);
        let a = price_mc(&p, 450.0, &spec, 10_000, 1.0 / 730.0, 4).unwrap();
        let b = price_mc(&p, 450.0, &spec, 10_000, 1.0 / 730.0, 4).unwrap();
        assert_eq!(a.price.to_bits(), b.price.to_bits());
    }

    #[test]
    fn presets_cover_tables() {
        for name in ["table3", "table4", "table5", "table6"] {
            let t = table_preset(name).unwrap().run().unwrap();
            assert_eq!(t.strikes.len(), 5);
            assert!(t.rows.len() == 3 || t.rows.len() == 4);
        }
        assert!(table_preset("table9").is_err());
    }

    #[test]
    fn single_cell_table_equals_price() {
        let p = table3_params(100.0);
        let inputs = TableInputs {
            kind: OptionKind::Call,
            s0: 450.0,
            rate: 0.01,
            cash: 0.0,
            quadrature: QuadratureOptions::default(),
        };
        let t = table_report(&p, &inputs, &[450.0], &[0.25], &[p.tau], &[100.0]).unwrap();
        let direct = price_quadrature(&p, 450.0, &OptionSpec::call(450.0, 0.25, 0.01), true).unwrap();
        assert_eq!(t.rows[0].prices[0], direct.price);
    }

    proptest! {
        #[test]
        fn bounds_hold(p0 in 1.0f64..2000.0, k in 1.0f64..1000.0, t in 0.02f64..1.0) {
            let p = table3_params(p0);
            let c = price_quadrature(&p, 450.0, &OptionSpec::call(k, t, 0.01), true).unwrap().price;
            prop_assert!((0.0..=450.0).contains(&c));
            let b = price_quadrature(&p, 450.0, &OptionSpec::binary(k, t, 100.0, 0.01), true).unwrap().price;
            prop_assert!(b >= 0.0 && b <= 100.0 * (-0.01 * t).exp() + 1e-12);
        }
    }
}
