use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state left the admissible set (e.g. negative density or pressure).
    #[error("state-space violation{}: {message} (state = {state:?})", location(.cell, .stage))]
    StateSpace {
        message: String,
        state: Vec<f64>,
        cell: Option<usize>,
        stage: Option<usize>,
    },

    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    #[error("solver blow-up at t = {time}, cell {cell}")]
    BlowUp { time: f64, cell: usize },

    #[error("sample(s) {indices:?} failed: {first}")]
    Ensemble { indices: Vec<usize>, first: Box<Error> },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(cell: &Option<usize>, stage: &Option<usize>) -> String {
    match (cell, stage) {
        (Some(c), Some(s)) => format!(" in cell {c}, RK stage {s}"),
        (Some(c), None) => format!(" in cell {c}"),
        (None, Some(s)) => format!(" in RK stage {s}"),
        (None, None) => String::new(),
    }
}

impl Error {
    /// Short machine-parsable category, used by the CLI exit line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::StateSpace { .. } => "state-space",
            Error::InfeasibleMarginals(_) => "infeasible-marginals",
            Error::BlowUp { .. } => "blow-up",
            Error::Ensemble { .. } => "ensemble",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn state_space(message: impl Into<String>, state: &[f64]) -> Self {
        Error::StateSpace {
            message: message.into(),
            state: state.to_vec(),
            cell: None,
            stage: None,
        }
    }

    pub(crate) fn in_cell(self, c: usize) -> Self {
        match self {
            Error::StateSpace {
                message,
                state,
                stage,
                ..
            } => Error::StateSpace {
                message,
                state,
                cell: Some(c),
                stage,
            },
            other => other,
        }
    }

    pub(crate) fn in_stage(self, s: usize) -> Self {
        match self {
            Error::StateSpace {
                message,
                state,
                cell,
                ..
            } => Error::StateSpace {
                message,
                state,
                cell,
                stage: Some(s),
            },
            other => other,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
