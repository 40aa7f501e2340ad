//! Thin wrappers over `statrs` plus the Kolmogorov limiting distribution.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal is valid")
}

pub fn norm_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn norm_ppf(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Quantile of the chi-squared law with `dof` degrees of freedom.
pub fn chi2_ppf(p: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("positive degrees of freedom").inverse_cdf(p)
}

/// Survival function of the Kolmogorov distribution,
/// `P(K > x) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² x²)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // The alternating series converges slowly here and the mass is ~1.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_reference_values() {
        assert_relative_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(norm_cdf(1.959963984540054), 0.975, epsilon = 1e-11);
        assert_relative_eq!(norm_ppf(0.975), 1.959963984540054, epsilon = 1e-9);
        assert_relative_eq!(norm_pdf(0.0), 0.3989422804014327, epsilon = 1e-15);
    }

    #[test]
    fn chi2_quantile_at_ninety_percent() {
        assert_relative_eq!(chi2_ppf(0.90, 1.0), 2.705543454095404, epsilon = 1e-8);
        assert_relative_eq!(chi2_ppf(0.95, 1.0), 3.841458820694124, epsilon = 1e-8);
    }

    #[test]
    fn kolmogorov_critical_points() {
        assert_relative_eq!(kolmogorov_sf(1.3580986393225505), 0.05, epsilon = 1e-10);
        assert_relative_eq!(kolmogorov_sf(1.6276236115189284), 0.01, epsilon = 1e-10);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }
}
