use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorSettings;
use crate::rkdg::{FluxKind, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    #[default]
    Run,
    SpatialStudy,
    StochasticStudy,
    Emd,
}

/// One experiment, read from a flat TOML file. Every key is optional; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub study: StudyKind,
    /// Sample count `K` of single runs and spatial studies.
    pub samples: usize,
    /// Reference sample count `M`.
    pub reference_samples: usize,
    pub seed: u64,
    /// Mesh size of single runs and stochastic studies.
    pub cells: usize,
    pub cell_sweep: Vec<usize>,
    pub sample_sweep: Vec<usize>,

    pub degree: usize,
    pub cfl: f64,
    pub t_final: f64,
    pub flux: FluxKind,
    pub m_tvb: f64,
    pub limiter_enabled: bool,

    pub constant_grid_points: usize,
    pub constant_safety: f64,
    pub box_margin: f64,

    pub output: Option<PathBuf>,
    pub emd_cost: Option<PathBuf>,
    pub emd_weights_a: Option<PathBuf>,
    pub emd_weights_b: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let est = EstimatorSettings::default();
        Self {
            study: StudyKind::Run,
            samples: 100,
            reference_samples: 2000,
            seed: 1,
            cells: solver.cells,
            cell_sweep: vec![16, 32, 64, 128],
            sample_sweep: (1..=9).map(|i| 1 << i).collect(),
            degree: solver.degree,
            cfl: solver.cfl,
            t_final: solver.t_final,
            flux: solver.flux,
            m_tvb: solver.m_tvb,
            limiter_enabled: solver.limiter_enabled,
            constant_grid_points: est.grid_points,
            constant_safety: est.safety,
            box_margin: est.box_margin,
            output: None,
            emd_cost: None,
            emd_weights_a: None,
            emd_weights_b: None,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_sweep(name: &str, sweep: &[usize]) -> Result<()> {
    if sweep.is_empty() {
        return Err(config_error(format!("{name} must not be empty")));
    }
    if sweep.iter().any(|&v| v == 0) {
        return Err(config_error(format!("{name} entries must be positive")));
    }
    if sweep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_error(format!("{name} must be strictly increasing, got {sweep:?}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => config_error(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Rejects configurations that cannot run. Returns the warnings for
    /// settings that run but are likely unintended.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.solver(self.cells).validate().map_err(|e| config_error(e.to_string()))?;
        if self.samples == 0 || self.reference_samples == 0 {
            return Err(config_error("samples and reference_samples must be positive"));
        }
        if self.constant_grid_points < 2 {
            return Err(config_error("constant_grid_points must be at least 2"));
        }
        if !(self.constant_safety >= 1.0) {
            return Err(config_error("constant_safety must be at least 1"));
        }
        if !(self.box_margin >= 0.0) {
            return Err(config_error("box_margin must be nonnegative"));
        }
        let mut warnings = Vec::new();
        let max_k = match self.study {
            StudyKind::SpatialStudy => {
                check_sweep("cell_sweep", &self.cell_sweep)?;
                self.samples
            }
            StudyKind::StochasticStudy => {
                check_sweep("sample_sweep", &self.sample_sweep)?;
                *self.sample_sweep.last().unwrap()
            }
            StudyKind::Run => self.samples,
            StudyKind::Emd => {
                if self.emd_cost.is_none() || self.emd_weights_a.is_none() || self.emd_weights_b.is_none() {
                    return Err(config_error("emd needs emd_cost, emd_weights_a and emd_weights_b"));
                }
                return Ok(warnings);
            }
        };
        if self.reference_samples < 4 * max_k {
            warnings.push(format!(
                "reference_samples = {} is below 4 × {max_k}; the reference may not dominate the sample error",
                self.reference_samples
            ));
        }
        Ok(warnings)
    }

    /// Solver settings on a mesh of `cells` cells.
    pub fn solver(&self, cells: usize) -> SolverConfig {
        SolverConfig {
            cells,
            degree: self.degree,
            cfl: self.cfl,
            t_final: self.t_final,
            flux: self.flux,
            m_tvb: self.m_tvb,
            limiter_enabled: self.limiter_enabled,
        }
    }

    pub fn estimator(&self) -> EstimatorSettings {
        EstimatorSettings {
            grid_points: self.constant_grid_points,
            safety: self.constant_safety,
            box_margin: self.box_margin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn keys_are_read() {
        let c = ExperimentConfig::from_toml_str(
            "study = \"spatial-study\"\nsamples = 10\ncell_sweep = [8, 16]\nflux = \"local-lax-friedrichs\"\ncfl = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.study, StudyKind::SpatialStudy);
        assert_eq!(c.samples, 10);
        assert_eq!(c.cell_sweep, vec![8, 16]);
        assert_eq!(c.solver(8).flux, FluxKind::LocalLaxFriedrichs);
        assert_eq!(c.solver(8).cfl, 0.5);
    }

    #[test]
    fn unknown_keys_and_bad_sweeps_are_rejected() {
        let e = ExperimentConfig::from_toml_str("sampels = 3\n").unwrap_err();
        assert_eq!(e.category(), "config");
        let e = ExperimentConfig::from_toml_str("study = \"spatial-study\"\ncell_sweep = [32, 16]\n").unwrap_err();
        assert_eq!(e.category(), "config");
        let e = ExperimentConfig::from_toml_str("study = \"stochastic-study\"\nsample_sweep = []\n").unwrap_err();
        assert_eq!(e.category(), "config");
        let e = ExperimentConfig::from_toml_str("cfl = 2.0\n").unwrap_err();
        assert_eq!(e.category(), "config");
        assert!(ExperimentConfig::from_toml_str("study = \"emd\"\n").is_err());
    }

    #[test]
    fn small_reference_is_only_a_warning() {
        let c = ExperimentConfig {
            samples: 100,
            reference_samples: 200,
            ..Default::default()
        };
        let w = c.validate().unwrap();
        assert_eq!(w.len(), 1);
        assert!(ExperimentConfig::default().validate().unwrap().is_empty());
    }
}
