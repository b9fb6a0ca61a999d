//! Composite Gauss-Legendre quadrature on [0, 1].
//!
//! Inner products against eigenfunctions are oscillatory, so the number of
//! panels scales with the highest frequency present: a 16-point rule per
//! panel resolves roughly eight radians of phase per panel to near machine
//! precision.

/// Nodes and weights of a composite Gauss-Legendre rule on [0, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Composite rule with `panels` equal panels of `points` Gauss nodes each.
    pub fn composite(points: usize, panels: usize) -> Self {
        assert!(points >= 2 && panels >= 1);
        let (xs, ws) = legendre_nodes(points);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(points * panels);
        let mut weights = Vec::with_capacity(points * panels);
        for p in 0..panels {
            let a = p as f64 * h;
            for (&x, &w) in xs.iter().zip(&ws) {
                // map [-1, 1] -> [a, a + h]
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        GaussRule { nodes, weights }
    }

    /// Rule resolving integrands whose total angular frequency on [0, 1] does
    /// not exceed `freq` radians.
    pub fn for_max_frequency(freq: f64) -> Self {
        let panels = ((freq / 6.0).ceil() as usize).max(4);
        GaussRule::composite(16, panels)
    }

    /// Rule adequate for products of the first `n_modes` eigenfunctions of
    /// the families used here (frequencies up to about `n_modes * pi` each).
    pub fn for_modes(n_modes: usize) -> Self {
        GaussRule::for_max_frequency(2.0 * (n_modes as f64 + 1.0) * std::f64::consts::PI)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// Integral of sampled values (one per node).
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        values.iter().zip(&self.weights).map(|(&v, &w)| w * v).sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[k] = -x;
        ws[k] = w;
        xs[n - 1 - k] = x;
        ws[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_eval(n, 0.0);
        xs[n / 2] = 0.0;
        ws[n / 2] = 2.0 / (d * d);
    }
    (xs, ws)
}

/// Legendre P_n(x) and its derivative.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_exactness() {
        let rule = GaussRule::composite(8, 1);
        // degree 15 polynomial integrated exactly by an 8-point rule
        let exact = 1.0 / 16.0;
        assert_abs_diff_eq!(rule.integrate(|z| z.powi(15)), exact, epsilon = 1e-14);
    }

    #[test]
    fn oscillatory_integral() {
        // int_0^1 sin(40 pi z)^2 dz = 1/2
        let rule = GaussRule::for_max_frequency(80.0 * std::f64::consts::PI);
        let val = rule.integrate(|z| (40.0 * std::f64::consts::PI * z).sin().powi(2));
        assert_abs_diff_eq!(val, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        for panels in [1, 3, 7] {
            let rule = GaussRule::composite(16, panels);
            assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        }
    }
}
