//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = ((4 * i + 3) as f64 * PI / (4.0 * nf + 2.0)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 64, 256, 512] {
            let g = GaussLegendre::new(n);
            assert_relative_eq!(g.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let g = GaussLegendre::new(5);
        // Degree 9 is the highest exactly integrated by five nodes.
        let v = g.integrate(0.0, 2.0, |x| x.powi(9) + 3.0 * x * x);
        assert_relative_eq!(v, 2f64.powi(10) / 10.0 + 8.0, max_relative = 1e-13);
    }

    #[test]
    fn three_point_rule() {
        let g = GaussLegendre::new(3);
        assert_relative_eq!(g.nodes[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(g.weights[0], 5.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(g.weights[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn smooth_integrand_high_order() {
        let g = GaussLegendre::new(256);
        assert_relative_eq!(g.integrate(0.0, 1.0, f64::exp), 1f64.exp() - 1.0, max_relative = 1e-14);
    }
}
