//! Suitability tests for a candidate sentiment proxy: augmented Dickey–Fuller
//! on the series and Kolmogorov–Smirnov normality of its log-returns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::special::{kolmogorov_sf, norm_cdf};

/// p-value, either exact (`lower == upper`) or bracketed by table levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub lower: f64,
    pub upper: f64,
}

impl PValue {
    pub fn point(p: f64) -> Self {
        PValue { lower: p, upper: p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectFlags {
    #[serde(rename = "0.01")]
    pub at_1pct: bool,
    #[serde(rename = "0.05")]
    pub at_5pct: bool,
    #[serde(rename = "0.10")]
    pub at_10pct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: PValue,
    pub reject_at: RejectFlags,
    pub n: usize,
}

/// Dickey–Fuller critical values, constant and no trend: `(n, 1%, 5%, 10%)`.
const ADF_TABLE: [(f64, [f64; 3]); 6] = [
    (25.0, [-3.75, -3.00, -2.63]),
    (50.0, [-3.58, -2.93, -2.60]),
    (100.0, [-3.51, -2.89, -2.58]),
    (250.0, [-3.46, -2.88, -2.57]),
    (500.0, [-3.44, -2.87, -2.57]),
    (f64::INFINITY, [-3.43, -2.86, -2.57]),
];

/// Critical values at 1%, 5% and 10% for sample size `n`, linear in `1/n`.
pub fn adf_critical_values(n: usize) -> [f64; 3] {
    let inv = 1.0 / n as f64;
    let inv_of = |m: f64| if m.is_finite() { 1.0 / m } else { 0.0 };
    if inv >= inv_of(ADF_TABLE[0].0) {
        return ADF_TABLE[0].1;
    }
    for w in ADF_TABLE.windows(2) {
        let (a, b) = (inv_of(w[0].0), inv_of(w[1].0));
        if inv <= a && inv >= b {
            let t = (inv - b) / (a - b);
            return std::array::from_fn(|i| w[1].1[i] + t * (w[0].1[i] - w[1].1[i]));
        }
    }
    ADF_TABLE[ADF_TABLE.len() - 1].1
}

/// Augmented Dickey–Fuller test with a constant and `lag_order` lagged differences.
pub fn adf_test(series: &[f64], lag_order: usize) -> Result<TestReport> {
    let n = series.len();
    if n < 20 + lag_order {
        return Err(ModelError::InsufficientData(format!(
            "{n} observations, need at least {}",
            20 + lag_order
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("adf_test input"));
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = dy.len() - lag_order;
    let cols = 2 + lag_order;
    let x = DMatrix::from_fn(rows, cols, |i, j| {
        let t = i + lag_order;
        match j {
            0 => 1.0,
            1 => series[t],
            _ => dy[t - (j - 1)],
        }
    });
    let y = DVector::from_iterator(rows, dy[lag_order..].iter().copied());

    let qr = x.clone().qr();
    let r = qr.r();
    let r_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let col_scale = (0..cols).map(|j| x.column(j).norm()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= 1e-10 * r_max.max(col_scale)) {
        return Err(ModelError::SingularRegression("regressors are collinear".into()));
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| ModelError::SingularRegression("triangular solve failed".into()))?;
    let resid = &y - &x * &beta;
    let dof = rows as f64 - cols as f64;
    let s2 = resid.norm_squared() / dof;
    if !(s2 > 0.0) {
        return Err(ModelError::SingularRegression("regression fits exactly".into()));
    }
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| ModelError::SingularRegression("R is not invertible".into()))?;
    let var_gamma = s2 * r_inv.row(1).norm_squared();
    let stat = beta[1] / var_gamma.sqrt();

    let cv = adf_critical_values(rows);
    let reject_at = RejectFlags { at_1pct: stat < cv[0], at_5pct: stat < cv[1], at_10pct: stat < cv[2] };
    let p_value = if reject_at.at_1pct {
        PValue { lower: 0.0, upper: 0.01 }
    } else if reject_at.at_5pct {
        PValue { lower: 0.01, upper: 0.05 }
    } else if reject_at.at_10pct {
        PValue { lower: 0.05, upper: 0.10 }
    } else {
        PValue { lower: 0.10, upper: 1.0 }
    };
    Ok(TestReport { statistic: stat, p_value, reject_at, n: rows })
}

/// Kolmogorov–Smirnov distance between `sample` and a continuous `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS test of normality for the log-returns of a positive series,
/// standardised by their sample mean and standard deviation.
pub fn ks_lognormal_test(series: &[f64]) -> Result<TestReport> {
    if series.len() < 20 {
        return Err(ModelError::InsufficientData(format!(
            "{} observations, need at least 20",
            series.len()
        )));
    }
    if let Some(v) = series.iter().find(|v| !(**v > 0.0)) {
        return Err(ModelError::Domain(format!("series value {v} is not positive")));
    }
    let x: Vec<f64> = series.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    ks_normal_test(&x)
}

/// KS test of normality with estimated location and scale.
pub fn ks_normal_test(x: &[f64]) -> Result<TestReport> {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(ModelError::Domain("log-returns have zero dispersion".into()));
    }
    let z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let d = ks_statistic(&z, norm_cdf);
    let p = kolmogorov_sf(m.sqrt() * d);
    Ok(TestReport {
        statistic: d,
        p_value: PValue::point(p),
        reject_at: RejectFlags { at_1pct: p < 0.01, at_5pct: p < 0.05, at_10pct: p < 0.10 },
        n: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn critical_values_interpolate() {
        assert_eq!(adf_critical_values(25), [-3.75, -3.00, -2.63]);
        assert_eq!(adf_critical_values(10), [-3.75, -3.00, -2.63]);
        let cv = adf_critical_values(100);
        assert_relative_eq!(cv[1], -2.89, epsilon = 1e-12);
        let mid = adf_critical_values(1000);
        assert!(mid[0] > -3.44 && mid[0] < -3.43);
    }

    #[test]
    fn constant_series_is_singular() {
        let y = vec![3.0; 50];
        assert!(matches!(adf_test(&y, 1), Err(ModelError::SingularRegression(_))));
        let trend: Vec<f64> = (0..50).map(|i| 2.0 + 0.5 * i as f64).collect();
        let detrended: Vec<f64> = trend.iter().enumerate().map(|(i, v)| v - 0.5 * i as f64).collect();
        assert!(matches!(adf_test(&detrended, 1), Err(ModelError::SingularRegression(_))));
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(matches!(adf_test(&noise(1, 20), 1), Err(ModelError::InsufficientData(_))));
        assert!(matches!(ks_lognormal_test(&[1.0; 10]), Err(ModelError::InsufficientData(_))));
        let mut v = vec![1.0; 30];
        v[4] = 0.0;
        assert!(matches!(ks_lognormal_test(&v), Err(ModelError::Domain(_))));
    }

    #[test]
    fn adf_white_noise_rejects() {
        let r = adf_test(&noise(2, 500), 1).unwrap();
        assert!(r.reject_at.at_1pct);
        assert_eq!(r.p_value, PValue { lower: 0.0, upper: 0.01 });
        assert_eq!(r.n, 498);
    }

    #[test]
    fn ecdf_distance_bound() {
        let x = noise(3, 200);
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        let ecdf = |t: f64| sorted.partition_point(|v| *v <= t) as f64 / sorted.len() as f64;
        assert!(ks_statistic(&x, ecdf) <= 1.0 / 200.0 + 1e-15);
    }

    #[test]
    fn deterministic_for_fixed_input() {
        let x: Vec<f64> = noise(4, 300).iter().scan(100.0, |s, z| { *s *= (0.01 * z).exp(); Some(*s) }).collect();
        assert_eq!(ks_lognormal_test(&x).unwrap(), ks_lognormal_test(&x).unwrap());
        assert_eq!(adf_test(&x, 1).unwrap(), adf_test(&x, 1).unwrap());
    }

    proptest! {
        #[test]
        fn ks_affine_invariance(seed in 0u64..1000, a in -5.0f64..5.0, b in 0.1f64..10.0) {
            let x = noise(seed, 100);
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let dx = ks_normal_test(&x).unwrap().statistic;
            let dy = ks_normal_test(&y).unwrap().statistic;
            prop_assert!((dx - dy).abs() < 1e-12);
        }

        #[test]
        fn adf_scale_invariance(seed in 0u64..1000, c in 0.01f64..100.0) {
            let x: Vec<f64> = noise(seed, 120).iter().scan(0.0, |s, z| { *s = 0.7 * *s + z; Some(*s) }).collect();
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let tx = adf_test(&x, 1).unwrap().statistic;
            let ty = adf_test(&y, 1).unwrap().statistic;
            prop_assert!((tx - ty).abs() < 1e-9);
        }
    }
}
