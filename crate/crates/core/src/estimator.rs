//! A posteriori bound on the Wasserstein distance between the exact and the
//! regularized empirical statistical solution.
//!
//! The bound reads
//!
//! ```text
//! W₂(μ_s, μ̂_s)² ≤ A (E^det + A · W₂(μ̄, μ̂̄)²) · exp(s A³ B (L + 1))
//! ```
//!
//! where `W₂(μ̄, μ̂̄)²` is itself bounded by `(√E₀^stoch + √E₀^det)²`.

use nalgebra::DMatrix;

use crate::ensemble::{Ensemble, SampledMeasure};
use crate::error::{invalid, Error, Result};
use crate::field::{QuadGrid, State};
use crate::physics::{ConservationLaw, Mat};
use crate::strec::ReconstructionSummary;
use crate::transport::{solve_emd, CostMatrix};

/// `Σ_k w_k ‖R_k‖²`.
pub fn e_det(residual_norms_sq: &[f64], weights: &[f64]) -> Result<f64> {
    if residual_norms_sq.len() != weights.len() {
        return Err(invalid(format!(
            "{} residual norms for {} weights",
            residual_norms_sq.len(),
            weights.len()
        )));
    }
    Ok(residual_norms_sq.iter().zip(weights).map(|(r, w)| r * w).sum())
}

/// Squared `L²` distance of each pair of atoms, with the grid weights `quad`.
pub fn paired_distances_sq(a: &SampledMeasure, b: &SampledMeasure, quad: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.components != b.components || a.points != b.points {
        return Err(invalid("paired measures differ in size, components or grid"));
    }
    if quad.len() != a.points {
        return Err(invalid("quadrature weights do not match the sampled grid"));
    }
    let c = a.components;
    Ok((0..a.len())
        .map(|k| {
            let (u, v) = (a.atom(k), b.atom(k));
            quad.iter()
                .enumerate()
                .map(|(q, w)| {
                    w * (q * c..(q + 1) * c)
                        .map(|j| (u[j] - v[j]).powi(2))
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// `Σ_k w_k ‖ū_k − û_k(0)‖²`, weights taken from `initial`.
pub fn e0_det(initial: &SampledMeasure, reconstructed: &SampledMeasure, quad: &[f64]) -> Result<f64> {
    let d = paired_distances_sq(initial, reconstructed, quad)?;
    e_det(&d, &initial.weights)
}

/// `W₂(μ̄, Σ w_k δ_{ū_k})²`, given the cost matrix between the sample atoms
/// (rows) and the reference atoms (columns).
pub fn e0_stoch(sample_weights: &[f64], reference_weights: &[f64], cost: &CostMatrix) -> Result<f64> {
    Ok(solve_emd(sample_weights, reference_weights, cost)?.cost.max(0.0))
}

/// Axis-aligned box of states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox<const M: usize> {
    pub min: State<M>,
    pub max: State<M>,
}

impl<const M: usize> StateBox<M> {
    pub fn new(min: State<M>, max: State<M>) -> Result<Self> {
        if (0..M).any(|i| !(min[i] <= max[i]) || !min[i].is_finite() || !max[i].is_finite()) {
            return Err(invalid(format!("degenerate state box {min:?} .. {max:?}")));
        }
        Ok(Self { min, max })
    }

    /// Smallest box holding every reconstructed state of every summary.
    pub fn from_summaries<'a>(summaries: impl IntoIterator<Item = &'a ReconstructionSummary<M>>) -> Result<Self> {
        let mut it = summaries.into_iter();
        let first = it.next().ok_or_else(|| invalid("no summaries for the state box"))?;
        let (mut lo, mut hi) = (first.state_min, first.state_max);
        for s in it {
            lo = lo.inf(&s.state_min);
            hi = hi.sup(&s.state_max);
        }
        Self::new(lo, hi)
    }

    /// Widens each side by `margin` times the width of that side (and by
    /// `margin` times the magnitude where the width is zero).
    pub fn inflate(&self, margin: f64) -> Self {
        let mut lo = self.min;
        let mut hi = self.max;
        for i in 0..M {
            let width = hi[i] - lo[i];
            let pad = margin * if width > 0.0 { width } else { lo[i].abs().max(hi[i].abs()) };
            lo[i] -= pad;
            hi[i] += pad;
        }
        Self { min: lo, max: hi }
    }

    pub fn contains(&self, u: &State<M>) -> bool {
        (0..M).all(|i| self.min[i] <= u[i] && u[i] <= self.max[i])
    }

    /// Tensor grid with `n` points per dimension (both ends included).
    pub fn grid(&self, n: usize) -> impl Iterator<Item = State<M>> + '_ {
        let n = n.max(2);
        let total = n.pow(M as u32);
        (0..total).map(move |mut idx| {
            let mut u = State::<M>::zeros();
            for i in 0..M {
                let j = idx % n;
                idx /= n;
                u[i] = self.min[i] + (self.max[i] - self.min[i]) * j as f64 / (n - 1) as f64;
            }
            u
        })
    }
}

/// Curvature bounds of the flux and entropy over a state box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Largest spectral norm of any flux-component Hessian.
    pub c_f: f64,
    /// Smallest eigenvalue of the entropy Hessian.
    pub c_eta_min: f64,
    /// Largest eigenvalue of the entropy Hessian.
    pub c_eta_max: f64,
    pub a: f64,
    pub b: f64,
}

fn spectrum<const M: usize>(m: Mat<M>) -> (f64, f64) {
    let eig = DMatrix::from_column_slice(M, M, m.as_slice()).symmetric_eigenvalues();
    (eig.min(), eig.max())
}

/// `A = max{(1 + C_f) / C_η_min, C_η_max}` and `B = C_η_max`, from Hessians
/// sampled on `points` per dimension. `safety ≥ 1` enlarges `C_f` and
/// `C_η_max` and shrinks `C_η_min` by that factor before forming `A`, `B`.
pub fn estimate_constants<const M: usize>(
    bx: &StateBox<M>,
    law: &impl ConservationLaw<M>,
    points: usize,
    safety: f64,
) -> Result<Constants> {
    if !(safety >= 1.0) {
        return Err(invalid(format!("safety factor must be at least 1, got {safety}")));
    }
    let mut c_f: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for u in bx.grid(points) {
        law.check_admissible(&u)?;
        for h in law.flux_hessians(&u) {
            let (a, b) = spectrum(h);
            c_f = c_f.max(a.abs()).max(b.abs());
        }
        let (a, b) = spectrum(law.entropy_hessian(&u));
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if !(lo > 0.0) {
        return Err(Error::state_space(
            format!("entropy Hessian is not positive definite on the box (min eigenvalue {lo})"),
            bx.min.as_slice(),
        ));
    }
    let c_f = c_f * safety;
    let c_eta_min = lo / safety;
    let c_eta_max = hi * safety;
    Ok(Constants {
        c_f,
        c_eta_min,
        c_eta_max,
        a: ((1.0 + c_f) / c_eta_min).max(c_eta_max),
        b: c_eta_max,
    })
}

/// `log₁₀` of `A (e_det + A w2) exp(s A³ B (L + 1))`, evaluated without
/// forming the exponential.
pub fn log10_total_bound(a: f64, b: f64, l: f64, s: f64, e_det: f64, w2_initial_sq: f64) -> f64 {
    let inner = e_det + a * w2_initial_sq;
    if inner == 0.0 {
        return f64::NEG_INFINITY;
    }
    a.log10() + inner.log10() + s * a.powi(3) * b * (l + 1.0) / std::f64::consts::LN_10
}

/// `A (e_det + A w2) exp(s A³ B (L + 1))`; `+∞` if it exceeds the `f64` range.
pub fn total_bound(a: f64, b: f64, l: f64, s: f64, e_det: f64, w2_initial_sq: f64) -> f64 {
    a * (e_det + a * w2_initial_sq) * (s * a.powi(3) * b * (l + 1.0)).exp()
}

/// Triangle-inequality bound on the squared initial distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSplit {
    /// `(√e0_stoch + √e0_det)²`.
    pub w2_initial_sq: f64,
    pub e0_stoch: f64,
    pub e0_det: f64,
    /// Whether `‖ū_k − û_k(0)‖² ≤ ½ min_{ℓ≠k} ‖ū_k − ū_ℓ‖²` holds for every `k`,
    /// in which case the paired distance equals the Wasserstein distance.
    pub pairing_is_optimal: bool,
}

/// Splits the initial error through the sample measure `Σ w_k δ_{ū_k}`.
/// `sample_cost` is the cost matrix between the sample atoms and themselves.
pub fn initial_split(
    initial: &SampledMeasure,
    reconstructed: &SampledMeasure,
    quad: &[f64],
    sample_cost: &CostMatrix,
    e0_stoch: f64,
) -> Result<InitialSplit> {
    let k = initial.len();
    if sample_cost.rows() != k || sample_cost.cols() != k {
        return Err(invalid("sample cost matrix does not match the sample count"));
    }
    let d = paired_distances_sq(initial, reconstructed, quad)?;
    let e0_det = e_det(&d, &initial.weights)?;
    let pairing_is_optimal = (0..k).all(|i| {
        let nearest = (0..k)
            .filter(|&j| j != i)
            .map(|j| sample_cost.get(i, j))
            .fold(f64::INFINITY, f64::min);
        d[i] <= 0.5 * nearest
    });
    Ok(InitialSplit {
        w2_initial_sq: (e0_stoch.sqrt() + e0_det.sqrt()).powi(2),
        e0_stoch,
        e0_det,
        pairing_is_optimal,
    })
}

/// Knobs of the constant estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    /// Grid points per state dimension.
    pub grid_points: usize,
    /// Multiplicative safety factor on the constants.
    pub safety: f64,
    /// Relative widening of the observed state box.
    pub box_margin: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            grid_points: 21,
            safety: 1.1,
            box_margin: 0.05,
        }
    }
}

/// Every term of the bound for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub h: f64,
    pub samples: usize,
    pub reference_samples: usize,
    pub seed: u64,
    pub degree: usize,
    pub s: f64,
    /// Squared `W₂` between the density marginals of the reference and the
    /// regularized measure at `s`.
    pub error: f64,
    /// Squared `W₂` between the full-state reference and regularized measures.
    pub error_full: f64,
    pub e_det: f64,
    pub e0_det: f64,
    pub e0_stoch: f64,
    pub w2_initial_sq: f64,
    pub pairing_is_optimal: bool,
    pub a: f64,
    pub b: f64,
    pub l: f64,
    pub total_bound: f64,
    pub log10_total_bound: f64,
}

impl EstimatorReport {
    /// `error ≤ total_bound`, compared in log space so an overflowing bound still counts.
    pub fn is_reliable(&self) -> bool {
        self.error <= 0.0 || self.error.log10() <= self.log10_total_bound
    }
}

/// Sample-independent inputs of a report that callers may reuse across rows.
pub struct ReportInputs<'a> {
    /// Quadrature weights of the grid all measures are sampled on.
    pub quad: &'a [f64],
    /// Initial sample atoms `ū_k`.
    pub initial: &'a SampledMeasure,
    /// Cost between `ū_k` and the reference atoms at time zero.
    pub initial_cost: &'a CostMatrix,
    /// Cost between `ū_k` and `ū_ℓ`.
    pub sample_cost: &'a CostMatrix,
    /// Density-marginal cost between `u^st_k(s)` and the reference at `s`.
    pub density_cost: &'a CostMatrix,
    /// Full-state cost between `u^st_k(s)` and the reference at `s`.
    pub full_cost: &'a CostMatrix,
    pub reference_weights: &'a [f64],
    pub seed: u64,
}

/// Assembles the report for an ensemble of 3-component Euler samples.
pub fn assemble_report(
    ensemble: &Ensemble,
    law: &impl ConservationLaw<3>,
    inputs: &ReportInputs<'_>,
    settings: &EstimatorSettings,
) -> Result<EstimatorReport> {
    let outcomes = &ensemble.outcomes;
    let first = outcomes.first().ok_or_else(|| invalid("empty ensemble"))?;
    let weights = ensemble.weights();
    let s = first.summary.s;
    let mesh = first.summary.initial.mesh().clone();

    let residuals: Vec<f64> = outcomes.iter().map(|o| o.summary.residual_sq).collect();
    let e_det = e_det(&residuals, weights)?;
    let l = outcomes.iter().map(|o| o.summary.lipschitz).fold(0.0, f64::max);

    let grid = QuadGrid::spatial(mesh.clone());
    if grid.len() != inputs.quad.len() {
        return Err(invalid("reference grid does not match the ensemble mesh"));
    }
    let reconstructed = ensemble.reconstructed_initial_measure().sample(&grid);
    let e0_stoch = e0_stoch(weights, inputs.reference_weights, inputs.initial_cost)?;
    let split = initial_split(inputs.initial, &reconstructed, inputs.quad, inputs.sample_cost, e0_stoch)?;

    let bx = StateBox::from_summaries(outcomes.iter().map(|o| &o.summary))?.inflate(settings.box_margin);
    let constants = estimate_constants(&bx, law, settings.grid_points, settings.safety)?;

    let error = solve_emd(weights, inputs.reference_weights, inputs.density_cost)?.cost.max(0.0);
    let error_full = solve_emd(weights, inputs.reference_weights, inputs.full_cost)?.cost.max(0.0);

    let (a, b) = (constants.a, constants.b);
    Ok(EstimatorReport {
        h: mesh.h_min(),
        samples: outcomes.len(),
        reference_samples: inputs.reference_weights.len(),
        seed: inputs.seed,
        degree: first.summary.initial.degree(),
        s,
        error,
        error_full,
        e_det,
        e0_det: split.e0_det,
        e0_stoch,
        w2_initial_sq: split.w2_initial_sq,
        pairing_is_optimal: split.pairing_is_optimal,
        a,
        b,
        l,
        total_bound: total_bound(a, b, l, s, e_det, split.w2_initial_sq),
        log10_total_bound: log10_total_bound(a, b, l, s, e_det, split.w2_initial_sq),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{Burgers, Euler, LinearAdvection};

    #[test]
    fn e_det_is_a_weighted_sum() {
        assert_eq!(e_det(&[0.0, 0.0], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(e_det(&[2.0, 4.0], &[0.5, 0.5]).unwrap(), 3.0);
        assert!(e_det(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn bound_formula() {
        assert_eq!(total_bound(1.0, 1.0, 0.0, 1.0, 0.0, 0.0), 0.0);
        assert!((total_bound(1.0, 1.0, 0.0, 1.0, 1.0, 0.0) - std::f64::consts::E).abs() < 1e-15);
        let lg = log10_total_bound(1.0, 1.0, 0.0, 1.0, 1.0, 0.0);
        assert!((lg - std::f64::consts::E.log10()).abs() < 1e-15);
        // overflow is still represented in log space
        assert!(total_bound(10.0, 10.0, 100.0, 1.0, 1.0, 1.0).is_infinite());
        assert!(log10_total_bound(10.0, 10.0, 100.0, 1.0, 1.0, 1.0).is_finite());
    }

    #[test]
    fn bound_is_monotone_in_each_part() {
        let base = [2.0, 3.0, 1.5, 0.2, 1e-3, 1e-4];
        let f = |p: [f64; 6]| log10_total_bound(p[0], p[1], p[2], p[3], p[4], p[5]);
        for i in [2, 3, 4, 5] {
            let mut up = base;
            up[i] *= 1.5;
            assert!(f(up) >= f(base));
        }
    }

    #[test]
    fn advection_and_burgers_constants() {
        let bx = StateBox::new(State::<1>::new(-1.0), State::<1>::new(1.0)).unwrap();
        let c = estimate_constants(&bx, &LinearAdvection::new(1.0), 21, 1.0).unwrap();
        assert_eq!((c.c_f, c.c_eta_min, c.c_eta_max, c.a, c.b), (0.0, 1.0, 1.0, 1.0, 1.0));
        let c = estimate_constants(&bx, &Burgers, 21, 1.0).unwrap();
        assert_eq!((c.c_f, c.a, c.b), (1.0, 2.0, 1.0));
        let c = estimate_constants(&bx, &Burgers, 21, 1.1).unwrap();
        assert!((c.a - 2.1 / (1.0 / 1.1)).abs() < 1e-12);
        assert!(c.a >= c.c_eta_max && c.a * c.c_eta_min >= 1.0 + c.c_f - 1e-12);
    }

    #[test]
    fn euler_constants_are_grid_stable() {
        let bx = StateBox::new(State::<3>::new(1.4, -0.3, 2.3), State::<3>::new(2.6, 0.3, 3.8)).unwrap();
        let c21 = estimate_constants(&bx, &Euler, 21, 1.0).unwrap();
        let c41 = estimate_constants(&bx, &Euler, 41, 1.0).unwrap();
        assert!(c21.a.is_finite() && c21.b.is_finite());
        assert!((c21.a / c41.a - 1.0).abs() < 0.05);
        assert!((c21.b / c41.b - 1.0).abs() < 0.05);
    }

    #[test]
    fn inadmissible_box_is_rejected() {
        let bx = StateBox::new(State::<3>::new(-0.1, 0.0, 1.0), State::<3>::new(1.0, 0.1, 2.0)).unwrap();
        let err = estimate_constants(&bx, &Euler, 5, 1.0).unwrap_err();
        assert_eq!(err.category(), "state-space");
    }

    #[test]
    fn box_grid_and_inflation() {
        let bx = StateBox::new(State::<2>::new(0.0, 1.0), State::<2>::new(1.0, 1.0)).unwrap();
        let pts: Vec<_> = bx.grid(3).collect();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|u| bx.contains(u)));
        let big = bx.inflate(0.1);
        assert_eq!(big.min, State::<2>::new(-0.1, 0.9));
        assert_eq!(big.max, State::<2>::new(1.1, 1.1));
        assert!(StateBox::new(State::<1>::new(1.0), State::<1>::new(0.0)).is_err());
    }

    fn sampled(values: Vec<f64>, atoms: usize) -> SampledMeasure {
        SampledMeasure {
            components: 1,
            points: values.len() / atoms,
            values,
            weights: vec![1.0 / atoms as f64; atoms],
        }
    }

    #[test]
    fn split_and_pairing_condition() {
        let quad = [0.5, 0.5];
        let initial = sampled(vec![0.0, 0.0, 1.0, 1.0], 2);
        let exact = initial.clone();
        let near = sampled(vec![0.1, 0.1, 1.0, 1.0], 2);
        let far = sampled(vec![0.9, 0.9, 1.0, 1.0], 2);
        let cost = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();

        let s = initial_split(&initial, &exact, &quad, &cost, 0.04).unwrap();
        assert_eq!(s.e0_det, 0.0);
        assert!((s.w2_initial_sq - 0.04).abs() < 1e-15);
        assert!(s.pairing_is_optimal);

        let s = initial_split(&initial, &near, &quad, &cost, 0.0).unwrap();
        assert!((s.e0_det - 0.005).abs() < 1e-15);
        assert!(s.pairing_is_optimal);

        let s = initial_split(&initial, &far, &quad, &cost, 0.0).unwrap();
        assert!(!s.pairing_is_optimal);
    }
}
