use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT};
use sentiment_sde::diagnostics::{ks_lognormal_test, ks_normal_test};
use sentiment_sde::model::{integrated_info_moments, ip_moments, levy_params, log_price_moments, ModelParams};
use sentiment_sde::pricing::{price_mc, OptionSpec};
use sentiment_sde::simulate::{simulate_paths, Measure, SampledPath};

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Trapezoid integral of a sampled path between grid indices.
fn trapezoid(p: &SampledPath, lo: usize, hi: usize) -> f64 {
    let v = &p.values[lo..=hi];
    p.step * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

fn within(est: f64, sd: f64, n: usize, truth: f64, extra: f64) -> bool {
    (est - truth).abs() <= 4.0 * sd / (n as f64).sqrt() + extra
}

#[test]
fn integrated_gbm_moments_match_simulation() {
    let params = ModelParams::new(0.3, 0.5, 0.0, 0.1, 0.0, 2.0, 0.0).unwrap();
    let (step, s, n) = (1.0 / 3650.0, 0.5, 20_000);
    let set = simulate_paths(&params, 1.0, s, step, n, 21, Measure::Physical).unwrap();
    let ip: Vec<f64> = set.sentiment.iter().map(|p| trapezoid(p, 0, p.len() - 1)).collect();
    let sq: Vec<f64> = ip.iter().map(|x| x * x).collect();
    let (m1, m2) = ip_moments(&params, s).unwrap();
    let (e1, sd1) = mean_sd(&ip);
    let (e2, sd2) = mean_sd(&sq);
    assert!(within(e1, sd1, n, m1, 1e-6), "{e1} vs {m1}");
    assert!(within(e2, sd2, n, m2, 1e-6), "{e2} vs {m2}");
}

#[test]
fn delayed_increment_variance_matches_simulation() {
    // X_{t,T} for t > tau carries E[P^2_{t-tau}] in its second moment.
    let step = 1.0 / 1460.0;
    let tau = 73.0 * step;
    let params = ModelParams::new(0.4, 0.6, 0.0, 0.1, tau, 1.5, tau).unwrap();
    let (t, big_t, n) = (365.0 * step, 730.0 * step, 20_000);
    let set = simulate_paths(&params, 1.0, big_t, step, n, 5, Measure::Physical).unwrap();
    let hist = 73;
    let x: Vec<f64> = set.sentiment.iter().map(|p| trapezoid(p, hist + 365 - 73, hist + 730 - 73)).collect();
    let m = integrated_info_moments(&params, t, Some(big_t)).unwrap();
    let (e, sd) = mean_sd(&x);
    assert!(within(e, sd, n, m.mean, 1e-6), "{e} vs {}", m.mean);
    let dev: Vec<f64> = x.iter().map(|v| (v - e).powi(2)).collect();
    let (v, sdv) = mean_sd(&dev);
    assert!(within(v, sdv, n, m.variance, 1e-5), "{v} vs {}", m.variance);

    // The version with E[P_{t-tau}] on the second term understates it.
    let (i1, i2) = ip_moments(&params, big_t - t).unwrap();
    let lag = t - tau;
    let first = (params.mu_p * lag).exp() * i1;
    let understated = (params.mu_p * lag).exp() * i2 - first * first;
    assert!(!within(v, sdv, n, understated, 1e-5));
}

#[test]
fn log_price_moments_match_simulation() {
    let step = 1.0 / 3650.0;
    let tau = 10.0 * step;
    let params = ModelParams::new(0.2, 0.4, 0.3, 0.2, tau, 4.0, tau).unwrap();
    let (t, n) = (1.0, 20_000);
    let set = simulate_paths(&params, 50.0, t, step, n, 9, Measure::Physical).unwrap();
    let logs: Vec<f64> = set.price.iter().map(|p| p.values.last().unwrap().ln()).collect();
    let m = log_price_moments(&params, 50.0, t).unwrap();
    let (e, sd) = mean_sd(&logs);
    // Left-point sums bias the mean by O(step).
    assert!(within(e, sd, n, m.mean, 1e-3), "{e} vs {}", m.mean);
    let dev: Vec<f64> = logs.iter().map(|v| (v - e).powi(2)).collect();
    let (v, sdv) = mean_sd(&dev);
    assert!(within(v, sdv, n, m.variance, 1e-3), "{v} vs {}", m.variance);
}

#[test]
fn conditionally_gaussian_log_price() {
    let step = 1.0 / 365.0;
    let params = ModelParams::new(0.5, 0.8, 0.2, 0.3, 0.0, 3.0, 0.0).unwrap();
    let set = simulate_paths(&params, 1.0, 182.0 * step, step, 2000, 17, Measure::Physical).unwrap();
    let z: Vec<f64> = set
        .sentiment
        .iter()
        .zip(&set.price)
        .map(|(p, s)| {
            let n = s.len() - 1;
            let x = step * p.values[..n].iter().sum::<f64>();
            let ls = s.values[n].ln();
            (ls - params.log_drift() * x) / (params.sigma_s * x.sqrt())
        })
        .collect();
    let (m, sd) = mean_sd(&z);
    assert!(m.abs() < 0.1 && (sd - 1.0).abs() < 0.05, "{m} {sd}");
    assert!(!ks_normal_test(&z).unwrap().reject_at.at_1pct);
}

#[test]
fn discounted_price_is_a_martingale() {
    let params = ModelParams::new(0.03, 0.35, 0.0, 0.04, 5.0 / 365.0, 100.0, 5.0 / 365.0).unwrap();
    let spec = OptionSpec::call(0.0, 0.25, 0.01);
    let r = price_mc(&params, 450.0, &spec, 100_000, 1.0 / 730.0, 3).unwrap();
    assert!((r.price - 450.0).abs() <= 3.0 * r.stderr, "{} ± {}", r.price, r.stderr);
}

#[test]
fn left_point_bias_is_first_order() {
    let params = ModelParams::new(2.0, 0.2, 1.0, 0.1, 0.0, 1.0, 0.0).unwrap();
    let truth = log_price_moments(&params, 1.0, 1.0).unwrap().mean;
    let bias = |step: f64| {
        let set = simulate_paths(&params, 1.0, 1.0, step, 100_000, 1, Measure::Physical).unwrap();
        let logs: Vec<f64> = set.price.iter().map(|p| p.values.last().unwrap().ln()).collect();
        truth - mean_sd(&logs).0
    };
    let (coarse, fine) = (bias(1.0 / 50.0), bias(1.0 / 100.0));
    let ratio = coarse / fine;
    assert!(coarse > 0.0 && (1.6..2.4).contains(&ratio), "{coarse} {fine}");
}

#[test]
#[ignore = "KS with estimated parameters is conservative; its size sits near zero"]
fn ks_size_under_gbm_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let reps = 1000;
    let rejections = (0..reps)
        .filter(|_| {
            let mut level = 100.0f64;
            let series: Vec<f64> = (0..501)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    level *= (0.001 + 0.02 * z).exp();
                    level
                })
                .collect();
            ks_lognormal_test(&series).unwrap().reject_at.at_5pct
        })
        .count();
    let rate = rejections as f64 / reps as f64;
    assert!((0.01..=0.12).contains(&rate), "{rate}");
}

#[test]
fn ks_detects_heavy_tails() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t2 = StudentT::new(2.0).unwrap();
    let x: Vec<f64> = (0..500).map(|_| rng.sample(t2)).collect();
    assert!(ks_normal_test(&x).unwrap().reject_at.at_5pct);
}

proptest! {
    #[test]
    fn levy_round_trip(log_m1 in -5.0f64..5.0, excess in 0.0f64..3.0) {
        let m1 = log_m1.exp();
        let m2 = m1 * m1 * excess.exp();
        let law = levy_params(m1, m2).unwrap();
        prop_assert!((law.mean() / m1 - 1.0).abs() < 1e-12);
        prop_assert!((law.second_moment() / m2 - 1.0).abs() < 1e-12);
    }
}
