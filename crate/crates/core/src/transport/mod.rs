//! Exact 2-Wasserstein distances between atomic measures on `L²(0, 1)`.

mod simplex;

use itertools::Itertools;
use rayon::prelude::*;

use crate::ensemble::{EmpiricalMeasure, SampledMeasure};
use crate::error::{invalid, Error, Result};
use crate::field::QuadGrid;

/// Costs below this are treated as exact zeros.
pub const COST_FLOOR: f64 = 1e-15;
const MARGINAL_TOL: f64 = 1e-12;

/// Row-major `K × M` matrix of squared distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(invalid(format!(
                "cost matrix of shape {rows}×{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(invalid(format!("cost entries must be finite and nonnegative, got {bad}")));
        }
        let data = data
            .into_iter()
            .map(|c| if c < COST_FLOOR { 0.0 } else { c })
            .collect();
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged cost matrix"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.data[k * self.cols + m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The first `k` rows.
    pub fn top_rows(&self, k: usize) -> Result<Self> {
        self.block(k, self.cols)
    }

    /// The leading `rows × cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || rows > self.rows || cols == 0 || cols > self.cols {
            return Err(invalid(format!(
                "block {rows}×{cols} out of range for a {}×{} matrix",
                self.rows, self.cols
            )));
        }
        let data = self
            .data
            .chunks(self.cols)
            .take(rows)
            .flat_map(|r| r[..cols].iter().copied())
            .collect();
        Ok(Self { rows, cols, data })
    }
}

/// A transport plan with the dual potentials certifying its optimality:
/// `C[k][m] + row_potential[k] − col_potential[m] ≥ 0`, with equality where
/// the plan is positive.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    pub cost: f64,
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
    pub pivots: usize,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.plan[k * self.cols + m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.plan
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|m| (0..self.rows).map(|k| self.get(k, m)).sum())
            .collect()
    }

    /// `min_{k,m} C[k][m] + row_potential[k] − col_potential[m]`.
    pub fn min_reduced_cost(&self, cost: &CostMatrix) -> f64 {
        let mut min = f64::INFINITY;
        for k in 0..self.rows {
            for m in 0..self.cols {
                min = min.min(cost.get(k, m) + self.row_potential[k] - self.col_potential[m]);
            }
        }
        min
    }
}

fn check_marginal(name: &str, w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InfeasibleMarginals(format!("{name} is empty")));
    }
    if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InfeasibleMarginals(format!("{name} has a negative or non-finite weight {bad}")));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Optimal plan for `min Σ π C` subject to row sums `weights_a` and column sums
/// `weights_b`, by the network simplex method.
pub fn solve_emd(weights_a: &[f64], weights_b: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    check_marginal("first marginal", weights_a)?;
    check_marginal("second marginal", weights_b)?;
    if cost.rows != weights_a.len() || cost.cols != weights_b.len() {
        return Err(invalid(format!(
            "cost matrix is {}×{} but the marginals have {} and {} entries",
            cost.rows,
            cost.cols,
            weights_a.len(),
            weights_b.len()
        )));
    }
    let sol = simplex::network_simplex(weights_a, weights_b, &cost.data)?;
    let k = weights_a.len();
    let total = sol.flow.iter().zip(&cost.data).map(|(f, c)| f * c).sum();
    Ok(TransportPlan {
        rows: k,
        cols: weights_b.len(),
        plan: sol.flow,
        cost: total,
        row_potential: sol.potential[..k].to_vec(),
        col_potential: sol.potential[k..k + weights_b.len()].to_vec(),
        pivots: sol.pivots,
    })
}

/// `C[k][m] = Σ_q w_q |a_k(x_q) − b_m(x_q)|²` on the grid the measures were sampled on.
pub fn cost_matrix_sampled(a: &SampledMeasure, b: &SampledMeasure, grid: &QuadGrid) -> Result<CostMatrix> {
    if a.components != b.components {
        return Err(invalid(format!(
            "atoms with {} and {} components",
            a.components, b.components
        )));
    }
    if a.points != grid.len() || b.points != grid.len() {
        return Err(invalid("measures were sampled on a different grid"));
    }
    let c = a.components;
    let weights = grid.weights();
    let mut data = vec![0.0; a.len() * b.len()];
    data.par_chunks_mut(b.len()).enumerate().for_each(|(k, row)| {
        let u = a.atom(k);
        for (m, entry) in row.iter_mut().enumerate() {
            let v = b.atom(m);
            let mut total = 0.0;
            for (q, w) in weights.iter().enumerate() {
                let mut d = 0.0;
                for j in q * c..(q + 1) * c {
                    let diff = u[j] - v[j];
                    d += diff * diff;
                }
                total += w * d;
            }
            *entry = total;
        }
    });
    CostMatrix::new(a.len(), b.len(), data)
}

/// Cost matrix of squared `L²` distances, with integrals on `grid`.
pub fn cost_matrix(a: &EmpiricalMeasure, b: &EmpiricalMeasure, grid: &QuadGrid) -> Result<CostMatrix> {
    if a.components() != b.components() {
        return Err(invalid(format!(
            "atoms with {} and {} components",
            a.components(),
            b.components()
        )));
    }
    cost_matrix_sampled(&a.sample(grid), &b.sample(grid), grid)
}

/// Squared 2-Wasserstein distance between two measures sampled on `grid`.
pub fn wasserstein2_sq_sampled(a: &SampledMeasure, b: &SampledMeasure, grid: &QuadGrid) -> Result<f64> {
    let cost = cost_matrix_sampled(a, b, grid)?;
    Ok(solve_emd(&a.weights, &b.weights, &cost)?.cost)
}

/// `W₂(a, b)` with all `L²` integrals on `grid`.
pub fn wasserstein2(a: &EmpiricalMeasure, b: &EmpiricalMeasure, grid: &QuadGrid) -> Result<f64> {
    let cost = cost_matrix(a, b, grid)?;
    Ok(solve_emd(a.weights(), b.weights(), &cost)?.cost.max(0.0).sqrt())
}

/// Exhaustive minimum of `(1/K) Σ_k C[k][σ(k)]` over permutations `σ`, for
/// square matrices with `K ≤ 8`.
pub fn assignment_oracle(cost: &CostMatrix) -> Result<f64> {
    let k = cost.rows;
    if k != cost.cols {
        return Err(invalid("the assignment oracle needs a square cost matrix"));
    }
    if k > 8 {
        return Err(invalid(format!("the assignment oracle refuses K = {k} > 8")));
    }
    let best = (0..k)
        .permutations(k)
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(best / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{analytic_measure, Atom};
    use crate::field::{FnField, ModalField, State};
    use crate::mesh::Mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    fn grid(cells: usize) -> QuadGrid {
        QuadGrid::spatial(Arc::new(Mesh::uniform(cells).unwrap()))
    }

    #[test]
    fn single_atom() {
        let c = CostMatrix::new(1, 1, vec![2.5]).unwrap();
        let p = solve_emd(&[1.0], &[1.0], &c).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.cost, 2.5);
    }

    #[test]
    fn zero_cost_matching() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let p = solve_emd(&uniform(3), &uniform(3), &c).unwrap();
        assert_eq!(p.cost, 0.0);
        for k in 0..3 {
            assert!((p.get(k, k) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_hand_value() {
        let c = CostMatrix::from_rows(&[vec![1.0, 3.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(assignment_oracle(&c).unwrap(), 1.0);
        let big = CostMatrix::new(9, 9, vec![0.0; 81]).unwrap();
        assert!(assignment_oracle(&big).is_err());
    }

    #[test]
    fn random_square_instances_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 2..=6 {
            for _ in 0..20 {
                let c = CostMatrix::new(k, k, (0..k * k).map(|_| rng.gen::<f64>()).collect()).unwrap();
                let p = solve_emd(&uniform(k), &uniform(k), &c).unwrap();
                assert!((p.cost - assignment_oracle(&c).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_marginals() {
        let c = CostMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        let err = solve_emd(&[0.5, 0.6], &[0.5, 0.5], &c).unwrap_err();
        assert_eq!(err.category(), "infeasible-marginals");
        assert!(solve_emd(&[1.5, -0.5], &[0.5, 0.5], &c).is_err());
        assert!(solve_emd(&[1.0], &[0.5, 0.5], &c).is_err());
    }

    #[test]
    fn rectangular_plans_are_feasible_and_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(k, m) in &[(3, 7), (10, 4), (50, 50), (20, 35)] {
            let mut a: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.01).collect();
            let mut b: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 0.01).collect();
            let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            a.iter_mut().for_each(|x| *x /= sa);
            b.iter_mut().for_each(|x| *x /= sb);
            let c = CostMatrix::new(k, m, (0..k * m).map(|_| rng.gen::<f64>() * 3.0).collect()).unwrap();
            let p = solve_emd(&a, &b, &c).unwrap();
            for (x, y) in p.row_sums().iter().zip(&a) {
                assert!((x - y).abs() < 1e-10);
            }
            for (x, y) in p.col_sums().iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!(p.as_slice().iter().all(|&x| x >= 0.0));
            assert!(p.min_reduced_cost(&c) >= -1e-10);
            // complementary slackness
            for kk in 0..k {
                for mm in 0..m {
                    if p.get(kk, mm) > 0.0 {
                        let rc = c.get(kk, mm) + p.row_potential[kk] - p.col_potential[mm];
                        assert!(rc.abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_and_sine_atoms() {
        let g = grid(8);
        let a: Atom = Arc::new(FnField::new(1, |_, o: &mut [f64]| o[0] = 1.0));
        let b: Atom = Arc::new(FnField::new(1, |_, o: &mut [f64]| o[0] = 3.0));
        let s: Atom = Arc::new(FnField::new(1, |x, o: &mut [f64]| o[0] = (2.0 * PI * x).sin()));
        let z: Atom = Arc::new(FnField::new(1, |_, o: &mut [f64]| o[0] = 0.0));
        let ma = EmpiricalMeasure::uniform(vec![a, s]).unwrap();
        let mb = EmpiricalMeasure::uniform(vec![b, z]).unwrap();
        let c = cost_matrix(&ma, &mb, &g).unwrap();
        assert!((c.get(0, 0) - 4.0).abs() < 1e-13);
        assert!((c.get(1, 1) - 0.5).abs() < 1e-13);
        let self_cost = cost_matrix(&ma, &ma, &g).unwrap();
        assert_eq!(self_cost.get(0, 0), 0.0);
        assert_eq!(self_cost.get(1, 1), 0.0);
    }

    #[test]
    fn identical_measures_and_diracs() {
        let g = grid(16);
        let m = analytic_measure(&[0.1, 0.5, 0.9], 0.05);
        assert!(wasserstein2(&m, &m, &g).unwrap() < 1e-7);
        let u = analytic_measure(&[0.2], 0.0);
        let v = analytic_measure(&[0.7], 0.0);
        let mut a = vec![0.0; 3];
        let mut b = vec![0.0; 3];
        let direct: f64 = g
            .points()
            .iter()
            .zip(g.weights())
            .map(|(&x, w)| {
                u.atoms()[0].eval_into(x, &mut a);
                v.atoms()[0].eval_into(x, &mut b);
                w * a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>()
            })
            .sum();
        assert!((wasserstein2(&u, &v, &g).unwrap() - direct.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn paired_atoms_bound_the_distance() {
        let g = grid(8);
        let mesh = g.mesh().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let random_field = |rng: &mut ChaCha8Rng| {
            let coeffs = (0..8 * 4).map(|_| State::<1>::new(rng.gen::<f64>() - 0.5)).collect();
            ModalField::from_coeffs(mesh.clone(), 3, coeffs).unwrap()
        };
        let xs: Vec<_> = (0..6).map(|_| random_field(&mut rng)).collect();
        let ys: Vec<_> = (0..6).map(|_| random_field(&mut rng)).collect();
        let paired: f64 = xs.iter().zip(&ys).map(|(x, y)| x.l2_distance_sq_to(y)).sum::<f64>() / 6.0;
        let a = EmpiricalMeasure::from_modal(xs).unwrap();
        let b = EmpiricalMeasure::from_modal(ys).unwrap();
        let w = wasserstein2(&a, &b, &g).unwrap();
        assert!(w * w <= paired + 1e-12);
    }
}
