//! Gauss–Legendre rules and the modal Legendre basis on the reference cell `[-1, 1]`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Node count of the spatial rule used for every estimator integral.
pub const SPATIAL_POINTS: usize = 10;
/// Node count of the per-slab temporal rule used for residual integrals.
pub const TEMPORAL_POINTS: usize = 7;

const MAX_NODES: usize = 32;
const MAX_LEGENDRE_DEGREE: usize = 16;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates `f` over `[a, b]` with the affinely mapped rule.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
}

/// Computes the `n`-point Gauss–Legendre rule by Newton iteration on the roots of `P_n`,
/// seeded with Chebyshev-like initial guesses.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_NODES {
        return Err(invalid(format!(
            "Gauss-Legendre node count must be in 1..={MAX_NODES}, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                dp = legendre_pair(n, x).1;
                break;
            }
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
    Ok(QuadratureRule { nodes, weights })
}

/// `(P_k(x), P_k'(x))` by the three-term recurrence.
fn legendre_pair(k: usize, x: f64) -> (f64, f64) {
    if k == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for j in 1..k {
        let jf = j as f64;
        let p_next = ((2.0 * jf + 1.0) * x * p - jf * p_prev) / (jf + 1.0);
        // P'_{j+1} = P'_{j-1} + (2j+1) P_j
        let d_next = d_prev + (2.0 * jf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Value and derivative of the Legendre polynomial `P_k` at `x`.
///
/// Degrees above 16 are outside the supported range and panic.
pub fn legendre_eval(k: usize, x: f64) -> (f64, f64) {
    assert!(
        k <= MAX_LEGENDRE_DEGREE,
        "Legendre degree {k} exceeds {MAX_LEGENDRE_DEGREE}"
    );
    legendre_pair(k, x)
}

/// `P_0..P_p` and their derivatives tabulated at a fixed set of reference points.
#[derive(Debug, Clone)]
pub struct LegendreBasis {
    degree: usize,
    points: Vec<f64>,
    values: Vec<f64>,
    derivatives: Vec<f64>,
}

impl LegendreBasis {
    pub fn new(degree: usize, points: &[f64]) -> Self {
        let stride = degree + 1;
        let mut values = vec![0.0; points.len() * stride];
        let mut derivatives = vec![0.0; points.len() * stride];
        for (q, &x) in points.iter().enumerate() {
            for k in 0..=degree {
                let (v, d) = legendre_eval(k, x);
                values[q * stride + k] = v;
                derivatives[q * stride + k] = d;
            }
        }
        Self {
            degree,
            points: points.to_vec(),
            values,
            derivatives,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `P_0..P_p` at point `q`.
    pub fn values(&self, q: usize) -> &[f64] {
        let s = self.degree + 1;
        &self.values[q * s..(q + 1) * s]
    }

    /// `P_0'..P_p'` at point `q`, with respect to the reference coordinate.
    pub fn derivatives(&self, q: usize) -> &[f64] {
        let s = self.degree + 1;
        &self.derivatives[q * s..(q + 1) * s]
    }
}

/// `∫_{-1}^{1} P_k^2 = 2 / (2k + 1)`.
pub fn legendre_norm_sq(k: usize) -> f64 {
    2.0 / (2 * k + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert!((r1.weights()[0] - 2.0).abs() < 1e-15);

        let r2 = gauss_legendre(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r2.nodes()[0] + s).abs() < 1e-15);
        assert!((r2.nodes()[1] - s).abs() < 1e-15);
        assert!((r2.weights()[0] - 1.0).abs() < 1e-15);
        assert!((r2.weights()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn five_points_integrate_x8() {
        let r = gauss_legendre(5).unwrap();
        let v = r.integrate(-1.0, 1.0, |x| x.powi(8));
        assert!((v - 2.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn out_of_range_node_counts() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(33).is_err());
        assert!(gauss_legendre(32).is_ok());
    }

    #[test]
    fn rules_are_sorted_and_normalised() {
        for n in 1..=32 {
            let r = gauss_legendre(n).unwrap();
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]), "n = {n}");
            assert!(r.weights().iter().all(|&w| w > 0.0));
            let total: f64 = r.weights().iter().sum();
            assert!((total - 2.0).abs() < 1e-14, "n = {n}: {total}");
        }
    }

    #[test]
    fn monomials_are_exact_up_to_degree_2n_minus_1() {
        for n in 1..=10 {
            let r = gauss_legendre(n).unwrap();
            for d in 0..2 * n {
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d + 1) as f64
                };
                let got = r.integrate(-1.0, 1.0, |x| x.powi(d as i32));
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "n = {n}, d = {d}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_eval(0, 0.37), (1.0, 0.0));
        assert_eq!(legendre_eval(1, 0.5), (0.5, 1.0));
        let (v, d) = legendre_eval(2, 1.0);
        assert!((v - 1.0).abs() < 1e-15 && (d - 3.0).abs() < 1e-15);
        for k in 0..=16 {
            assert!((legendre_eval(k, 1.0).0 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_is_orthogonal() {
        let p = 8;
        let r = gauss_legendre(p + 1).unwrap();
        let basis = LegendreBasis::new(p, r.nodes());
        for i in 0..=p {
            for j in 0..=p {
                let ip: f64 = (0..r.order())
                    .map(|q| r.weights()[q] * basis.values(q)[i] * basis.values(q)[j])
                    .sum();
                let exact = if i == j { legendre_norm_sq(i) } else { 0.0 };
                assert!((ip - exact).abs() < 1e-12, "({i},{j}) {ip}");
            }
        }
    }
}
