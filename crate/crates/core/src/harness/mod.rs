//! Experiment drivers: single runs, spatial and stochastic refinement studies,
//! and the convergence-order bookkeeping around them.

mod config;
mod table;

use std::sync::Arc;

pub use config::{ExperimentConfig, StudyKind};
pub use table::{
    emit_csv, emit_plan, parse_rows, read_cost_matrix, read_weights, to_csv_string, write_plan, write_rows, Row,
    HEADER,
};

use crate::ensemble::{compute_ensemble, reference_measure, sample_initial, Ensemble, SampledMeasure};
use crate::error::{invalid, Error, Result};
use crate::estimator::{assemble_report, EstimatorReport, EstimatorSettings, ReportInputs};
use crate::field::QuadGrid;
use crate::mesh::Mesh;
use crate::physics::Euler;
use crate::transport::{cost_matrix_sampled, CostMatrix};

/// `log(v_i / v_{i+1}) / log(s_i / s_{i+1})` for consecutive pairs; `None`
/// where a value or scale is not positive, or the scales coincide.
pub fn compute_eoc(values: &[f64], scales: &[f64]) -> Result<Vec<Option<f64>>> {
    if values.len() != scales.len() {
        return Err(invalid(format!("{} values for {} scales", values.len(), scales.len())));
    }
    Ok(values
        .windows(2)
        .zip(scales.windows(2))
        .map(|(v, s)| {
            let ok = v[0] > 0.0 && v[1] > 0.0 && s[0] > 0.0 && s[1] > 0.0 && s[0] != s[1];
            ok.then(|| (v[0] / v[1]).ln() / (s[0] / s[1]).ln())
        })
        .collect())
}

/// Least-squares slope of `log v` against `log s`.
pub fn log_log_slope(values: &[f64], scales: &[f64]) -> Result<f64> {
    if values.len() != scales.len() || values.len() < 2 {
        return Err(invalid("a slope needs at least two matching points"));
    }
    if values.iter().chain(scales).any(|&x| !(x > 0.0)) {
        return Err(invalid("log-log slope of nonpositive data"));
    }
    let n = values.len() as f64;
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// The rows of a study in sweep order, plus the sweep points that failed.
#[derive(Debug, Default)]
pub struct StudyResult {
    pub rows: Vec<EstimatorReport>,
    /// `(sweep value, cause)` of every aborted row.
    pub failures: Vec<(usize, Error)>,
    /// Whether the sweep variable is the mesh size `h` (else the sample count).
    pub spatial: bool,
}

impl StudyResult {
    pub fn csv_rows(&self) -> Vec<Row> {
        self.rows.iter().map(Row::from).collect()
    }

    fn scales(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| if self.spatial { r.h } else { r.samples as f64 })
            .collect()
    }

    /// EOCs of one column between consecutive rows.
    pub fn eoc(&self, column: impl Fn(&EstimatorReport) -> f64) -> Vec<Option<f64>> {
        let values: Vec<f64> = self.rows.iter().map(column).collect();
        compute_eoc(&values, &self.scales()).expect("equal lengths")
    }
}

/// Reference measure sampled at time zero and at `s` on one grid.
pub struct Reference {
    pub initial: SampledMeasure,
    pub final_full: SampledMeasure,
    pub final_density: SampledMeasure,
}

impl Reference {
    pub fn new(m: usize, seed: u64, s: f64, grid: &QuadGrid) -> Result<Self> {
        let initial = reference_measure(m, seed, 0.0)?.sample(grid);
        let final_full = reference_measure(m, seed, s)?.sample(grid);
        let final_density = final_full.marginal(0)?;
        Ok(Self {
            initial,
            final_full,
            final_density,
        })
    }
}

/// Cost matrices between an ensemble and the reference.
struct Costs {
    initial: SampledMeasure,
    initial_cost: CostMatrix,
    sample_cost: CostMatrix,
    density_cost: CostMatrix,
    full_cost: CostMatrix,
}

impl Costs {
    fn new(ensemble: &Ensemble, reference: &Reference, grid: &QuadGrid) -> Result<Self> {
        let initial = ensemble.samples.initial_measure().sample(grid);
        let regularized = ensemble.regularized_measure().sample(grid);
        Ok(Self {
            initial_cost: cost_matrix_sampled(&initial, &reference.initial, grid)?,
            sample_cost: cost_matrix_sampled(&initial, &initial, grid)?,
            density_cost: cost_matrix_sampled(&regularized.marginal(0)?, &reference.final_density, grid)?,
            full_cost: cost_matrix_sampled(&regularized, &reference.final_full, grid)?,
            initial,
        })
    }

    /// Restriction to the first `k` samples.
    fn prefix(&self, k: usize) -> Result<Self> {
        Ok(Self {
            initial: self.initial.prefix(k)?,
            initial_cost: self.initial_cost.top_rows(k)?,
            sample_cost: self.sample_cost.block(k, k)?,
            density_cost: self.density_cost.top_rows(k)?,
            full_cost: self.full_cost.top_rows(k)?,
        })
    }
}

fn report(
    ensemble: &Ensemble,
    costs: &Costs,
    reference: &Reference,
    grid: &QuadGrid,
    settings: &EstimatorSettings,
    seed: u64,
) -> Result<EstimatorReport> {
    let inputs = ReportInputs {
        quad: grid.weights(),
        initial: &costs.initial,
        initial_cost: &costs.initial_cost,
        sample_cost: &costs.sample_cost,
        density_cost: &costs.density_cost,
        full_cost: &costs.full_cost,
        reference_weights: &reference.initial.weights,
        seed,
    };
    assemble_report(ensemble, &Euler, &inputs, settings)
}

fn spatial_grid(cells: usize) -> Result<QuadGrid> {
    Ok(QuadGrid::spatial(Arc::new(Mesh::uniform(cells)?)))
}

/// Full pipeline for `samples` samples on `cells` cells.
pub fn run_single(config: &ExperimentConfig, cells: usize, samples: usize) -> Result<EstimatorReport> {
    let solver = config.solver(cells);
    let grid = spatial_grid(cells)?;
    let set = sample_initial(samples, config.seed)?;
    let ensemble = compute_ensemble(&set, &solver)?;
    let reference = Reference::new(config.reference_samples, config.seed, solver.t_final, &grid)?;
    let costs = Costs::new(&ensemble, &reference, &grid)?;
    report(&ensemble, &costs, &reference, &grid, &config.estimator(), config.seed)
}

/// One row per mesh size in `cell_sweep`, all with the same samples.
pub fn run_spatial_study(config: &ExperimentConfig) -> Result<StudyResult> {
    let mut result = StudyResult {
        spatial: true,
        ..Default::default()
    };
    for &cells in &config.cell_sweep {
        log::info!("spatial study: {cells} cells, {} samples", config.samples);
        match run_single(config, cells, config.samples) {
            Ok(r) => result.rows.push(r),
            Err(e) => {
                log::error!("{cells} cells: {e}");
                result.failures.push((cells, e));
            }
        }
    }
    Ok(result)
}

/// One row per sample count in `sample_sweep` on the fixed mesh. Smaller
/// ensembles are prefixes of the largest, so every sample is solved once.
pub fn run_stochastic_study(config: &ExperimentConfig) -> Result<StudyResult> {
    let &k_max = config
        .sample_sweep
        .last()
        .ok_or_else(|| invalid("empty sample sweep"))?;
    let solver = config.solver(config.cells);
    let grid = spatial_grid(config.cells)?;
    log::info!("stochastic study: {} cells, up to {k_max} samples", config.cells);
    let set = sample_initial(k_max, config.seed)?;
    let ensemble = compute_ensemble(&set, &solver)?;
    let reference = Reference::new(config.reference_samples, config.seed, solver.t_final, &grid)?;
    let costs = Costs::new(&ensemble, &reference, &grid)?;
    let settings = config.estimator();

    let mut result = StudyResult::default();
    for &k in &config.sample_sweep {
        let row = ensemble
            .prefix(k)
            .and_then(|e| report(&e, &costs.prefix(k)?, &reference, &grid, &settings, config.seed));
        match row {
            Ok(r) => result.rows.push(r),
            Err(e) => {
                log::error!("{k} samples: {e}");
                result.failures.push((k, e));
            }
        }
    }
    Ok(result)
}

/// `E₀^stoch` alone for each prefix length of one sample sequence; needs no solves.
pub fn initial_stochastic_errors(
    sample_sweep: &[usize],
    reference_samples: usize,
    seed: u64,
    grid: &QuadGrid,
) -> Result<Vec<f64>> {
    let &k_max = sample_sweep.last().ok_or_else(|| invalid("empty sample sweep"))?;
    let initial = sample_initial(k_max, seed)?.initial_measure().sample(grid);
    let reference = reference_measure(reference_samples, seed, 0.0)?.sample(grid);
    let cost = cost_matrix_sampled(&initial, &reference, grid)?;
    sample_sweep
        .iter()
        .map(|&k| {
            let w = vec![1.0 / k as f64; k];
            crate::estimator::e0_stoch(&w, &reference.weights, &cost.top_rows(k)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_examples() {
        assert_eq!(compute_eoc(&[1.0, 0.125], &[1.0, 0.5]).unwrap(), vec![Some(3.0)]);
        assert_eq!(compute_eoc(&[1.0, 1.0], &[0.3, 0.1]).unwrap(), vec![Some(0.0)]);
        let e = compute_eoc(&[64.0, 1.0], &[2.0, 1.0]).unwrap()[0].unwrap();
        assert!((e - 6.0).abs() < 1e-14);
        assert_eq!(compute_eoc(&[1.0, 0.0, 1.0], &[1.0, 0.5, 0.25]).unwrap(), vec![None, None]);
        assert!(compute_eoc(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_eoc(&[1.0], &[1.0]).unwrap().is_empty());
    }

    #[test]
    fn slope_of_a_power_law() {
        let s = [2.0, 4.0, 8.0, 16.0];
        let v: Vec<f64> = s.iter().map(|x: &f64| 3.0 * x.powf(-1.0)).collect();
        assert!((log_log_slope(&v, &s).unwrap() + 1.0).abs() < 1e-14);
        assert!(log_log_slope(&[1.0, 0.0], &[1.0, 2.0]).is_err());
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            samples: 4,
            reference_samples: 16,
            cells: 8,
            cell_sweep: vec![8, 16],
            sample_sweep: vec![2, 4],
            t_final: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn spatial_study_rows_follow_the_sweep() {
        let r = run_spatial_study(&small_config()).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.rows.iter().map(|r| r.h).collect::<Vec<_>>(), vec![1.0 / 8.0, 1.0 / 16.0]);
        for row in &r.rows {
            assert!(row.e_det > 0.0 && row.e0_det > 0.0 && row.e0_stoch > 0.0);
            assert!(row.is_reliable());
        }
        // the initial sample error does not see the mesh beyond quadrature
        let (a, b) = (r.rows[0].e0_stoch, r.rows[1].e0_stoch);
        assert!(((a - b) / a).abs() < 1e-2);
    }

    #[test]
    fn stochastic_prefix_rows_match_direct_runs() {
        let config = small_config();
        let study = run_stochastic_study(&config).unwrap();
        assert_eq!(study.rows.len(), 2);
        let direct = run_single(&config, 8, 2).unwrap();
        let row = &study.rows[0];
        assert_eq!(row.samples, 2);
        for (x, y) in [
            (row.e_det, direct.e_det),
            (row.e0_det, direct.e0_det),
            (row.e0_stoch, direct.e0_stoch),
            (row.error, direct.error),
            (row.a, direct.a),
        ] {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{x} vs {y}");
        }
        let e0 = initial_stochastic_errors(&[2, 4], 16, config.seed, &spatial_grid(8).unwrap()).unwrap();
        assert!((e0[0] - study.rows[0].e0_stoch).abs() < 1e-15);
        assert!((e0[1] - study.rows[1].e0_stoch).abs() < 1e-15);
    }

    #[test]
    fn failing_rows_do_not_abort_the_study() {
        let config = ExperimentConfig {
            cell_sweep: vec![2, 8],
            ..small_config()
        };
        let r = run_spatial_study(&config).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].0, 2);
    }
}
