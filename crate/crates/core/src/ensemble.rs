//! Monte-Carlo sampling of the random initial data, per-sample solves and the
//! resulting empirical measures.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::field::{Field, ModalField, QuadGrid};
use crate::physics::{Euler, ManufacturedEuler, ManufacturedField};
use crate::rkdg::{run_deterministic_with, SolverConfig};
use crate::strec::{ReconstructionSummary, SummaryAccumulator};

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Samples = 0,
    Reference = 1,
}

/// Draw number `index` of `stream`, uniform on `[0, 1)`. Depends only on
/// `(seed, stream, index)`, so ensembles of different sizes share prefixes.
pub fn draw_uniform(seed: u64, stream: Stream, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    // one f64 consumes two 32-bit words
    rng.set_word_pos(2 * index as u128);
    rng.gen::<f64>()
}

/// Sample parameters `ξ_k` with Monte-Carlo weights `1/K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub xi: Vec<f64>,
    pub seed: u64,
    pub weights: Vec<f64>,
}

impl SampleSet {
    /// Uses the given parameters verbatim.
    pub fn from_values(xi: Vec<f64>, seed: u64) -> Result<Self> {
        if xi.is_empty() {
            return Err(invalid("a sample set needs at least one sample"));
        }
        if let Some(bad) = xi.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid(format!("sample parameter {bad} outside [0, 1]")));
        }
        let k = xi.len();
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
            xi,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// The first `k` samples, reweighted uniformly.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(invalid(format!("prefix of length {k} out of 1..={}", self.len())));
        }
        Self::from_values(self.xi[..k].to_vec(), self.seed)
    }

    /// Analytic initial fields `ū_k`.
    pub fn initial_measure(&self) -> EmpiricalMeasure {
        analytic_measure(&self.xi, 0.0)
    }
}

fn draws(count: usize, seed: u64, stream: Stream) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("sample count must be positive"));
    }
    Ok((0..count as u64).map(|i| draw_uniform(seed, stream, i)).collect())
}

/// `K` draws of `ξ ~ U(0, 1)`.
pub fn sample_initial(k: usize, seed: u64) -> Result<SampleSet> {
    SampleSet::from_values(draws(k, seed, Stream::Samples)?, seed)
}

/// `M` exact solutions at time `t`, drawn from a stream disjoint from [`sample_initial`].
pub fn reference_measure(m: usize, seed: u64, t: f64) -> Result<EmpiricalMeasure> {
    Ok(analytic_measure(&draws(m, seed, Stream::Reference)?, t))
}

/// Uniformly weighted exact solutions `U(t, ·, ξ)`.
pub fn analytic_measure(xi: &[f64], t: f64) -> EmpiricalMeasure {
    let atoms = xi
        .iter()
        .map(|&xi| Arc::new(ManufacturedField { t, xi }) as Atom)
        .collect();
    EmpiricalMeasure::uniform(atoms).expect("non-empty parameter list")
}

pub type Atom = Arc<dyn Field + Send + Sync>;

/// `Σ w_k δ_{u_k}` over vector fields on the unit interval.
#[derive(Clone)]
pub struct EmpiricalMeasure {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl std::fmt::Debug for EmpiricalMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmpiricalMeasure")
            .field("atoms", &self.atoms.len())
            .field("weights", &self.weights)
            .finish()
    }
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(invalid(format!(
                "{} atoms and {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InfeasibleMarginals(
                "weights must be nonnegative and sum to 1".into(),
            ));
        }
        let c = atoms[0].components();
        if atoms.iter().any(|a| a.components() != c) {
            return Err(invalid("atoms have different numbers of components"));
        }
        Ok(Self { atoms, weights })
    }

    pub fn uniform(atoms: Vec<Atom>) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let n = atoms.len();
        Self::new(atoms, vec![w; n])
    }

    pub fn from_modal<const M: usize>(fields: Vec<ModalField<M>>) -> Result<Self> {
        Self::uniform(fields.into_iter().map(|f| Arc::new(f) as Atom).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn components(&self) -> usize {
        self.atoms[0].components()
    }

    /// The pushforward under `u ↦ u_component`.
    pub fn marginal(&self, component: usize) -> Result<Self> {
        if component >= self.components() {
            return Err(invalid(format!(
                "component {component} out of range for {}-component atoms",
                self.components()
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Arc::new(ComponentField {
                    inner: a.clone(),
                    component,
                }) as Atom
            })
            .collect();
        Self::new(atoms, self.weights.clone())
    }

    /// Atom values on `grid`, atom-major then point-major.
    pub fn sample(&self, grid: &QuadGrid) -> SampledMeasure {
        let c = self.components();
        let stride = grid.len() * c;
        let mut values = vec![0.0; stride * self.len()];
        values
            .par_chunks_mut(stride)
            .zip(self.atoms.par_iter())
            .for_each(|(out, atom)| atom.sample_on(grid, out));
        SampledMeasure {
            components: c,
            points: grid.len(),
            values,
            weights: self.weights.clone(),
        }
    }
}

/// One component of a vector field.
struct ComponentField {
    inner: Atom,
    component: usize,
}

impl Field for ComponentField {
    fn components(&self) -> usize {
        1
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        let mut buf = vec![0.0; self.inner.components()];
        self.inner.eval_into(x, &mut buf);
        out[0] = buf[self.component];
    }

    fn sample_on(&self, grid: &QuadGrid, out: &mut [f64]) {
        let m = self.inner.components();
        let mut buf = vec![0.0; grid.len() * m];
        self.inner.sample_on(grid, &mut buf);
        for (o, chunk) in out.iter_mut().zip(buf.chunks(m)) {
            *o = chunk[self.component];
        }
    }
}

/// An empirical measure evaluated on a quadrature grid.
#[derive(Debug, Clone)]
pub struct SampledMeasure {
    pub components: usize,
    pub points: usize,
    /// `values[(atom * points + q) * components + c]`.
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SampledMeasure {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, k: usize) -> &[f64] {
        let stride = self.points * self.components;
        &self.values[k * stride..(k + 1) * stride]
    }

    /// The `c`-th component marginal.
    pub fn marginal(&self, c: usize) -> Result<Self> {
        if c >= self.components {
            return Err(invalid(format!("component {c} of a {}-component measure", self.components)));
        }
        Ok(Self {
            components: 1,
            points: self.points,
            values: self.values.iter().skip(c).step_by(self.components).copied().collect(),
            weights: self.weights.clone(),
        })
    }

    /// The first `k` atoms, reweighted uniformly.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(invalid(format!("prefix of length {k} out of 1..={}", self.len())));
        }
        let stride = self.points * self.components;
        Ok(Self {
            components: self.components,
            points: self.points,
            values: self.values[..k * stride].to_vec(),
            weights: vec![1.0 / k as f64; k],
        })
    }
}

/// What one sample contributes to the estimator.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub xi: f64,
    /// `u_h(T)`.
    pub final_state: ModalField<3>,
    pub summary: ReconstructionSummary<3>,
}

/// Per-sample outcomes, in sample order.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub samples: SampleSet,
    pub outcomes: Vec<SampleOutcome>,
}

impl Ensemble {
    pub fn weights(&self) -> &[f64] {
        &self.samples.weights
    }

    /// `Σ w_k δ_{u_{h,k}(T)}`.
    pub fn raw_measure(&self) -> EmpiricalMeasure {
        self.measure(|o| o.final_state.clone())
    }

    /// `Σ w_k δ_{u^st_k(s)}`.
    pub fn regularized_measure(&self) -> EmpiricalMeasure {
        self.measure(|o| o.summary.at_s.clone())
    }

    /// `Σ w_k δ_{û_k(0)}`.
    pub fn reconstructed_initial_measure(&self) -> EmpiricalMeasure {
        self.measure(|o| o.summary.initial.clone())
    }

    fn measure(&self, pick: impl Fn(&SampleOutcome) -> ModalField<3>) -> EmpiricalMeasure {
        let atoms = self.outcomes.iter().map(|o| Arc::new(pick(o)) as Atom).collect();
        EmpiricalMeasure::new(atoms, self.samples.weights.clone()).expect("valid ensemble")
    }

    /// The first `k` samples, reweighted uniformly.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Ok(Self {
            samples: self.samples.prefix(k)?,
            outcomes: self.outcomes[..k].to_vec(),
        })
    }
}

/// Solves one sample and summarises its reconstruction on `[0, t_final]`.
pub fn solve_sample(xi: f64, config: &SolverConfig) -> Result<SampleOutcome> {
    let forcing = ManufacturedEuler::new(xi);
    let mut acc = SummaryAccumulator::new(&Euler, &forcing, config.t_final)?;
    let mut final_state = None;
    run_deterministic_with(xi, config, |record| {
        acc.push(record)?;
        if record.end.t >= config.t_final {
            final_state = Some(record.end.state.clone());
        }
        Ok(())
    })?;
    let summary = acc.finish()?;
    Ok(SampleOutcome {
        xi,
        final_state: final_state.ok_or_else(|| invalid("trajectory did not reach t_final"))?,
        summary,
    })
}

/// Runs every sample (concurrently) and gathers the outcomes in sample order.
/// If any sample fails, the error lists all failed indices.
pub fn compute_ensemble(samples: &SampleSet, config: &SolverConfig) -> Result<Ensemble> {
    config.validate()?;
    let results: Vec<Result<SampleOutcome>> = samples
        .xi
        .par_iter()
        .map(|&xi| solve_sample(xi, config))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    let mut first = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                failed.push(i);
                first.get_or_insert(e);
            }
        }
    }
    if let Some(first) = first {
        return Err(Error::Ensemble {
            indices: failed,
            first: Box::new(first),
        });
    }
    Ok(Ensemble {
        samples: samples.clone(),
        outcomes,
    })
}
