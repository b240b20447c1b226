//! Experiment driver for the rarefaction laboratory: configuration, file
//! formats, seeded corpora and the `rarelab` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod io;
pub mod output;
pub mod plot;

pub use experiments::{run_experiment, validate, Experiment, Kind, Outcome};

/// Failure classes of an experiment, one per process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    /// A run stopped on a CFL, tail-mass or non-finite guard.
    #[error("{module}: numerical abort: {source}")]
    Numerical {
        module: &'static str,
        source: rarefaction_core::Error,
    },
    /// Any other failure reported by a numerical module.
    #[error("{module}: {source}")]
    Module {
        module: &'static str,
        source: rarefaction_core::Error,
    },
    #[error("acceptance failure: {0}")]
    Acceptance(String),
    #[error("malformed file {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Wraps a module error, separating numerical aborts from parameter errors.
    pub fn module(module: &'static str) -> impl Fn(rarefaction_core::Error) -> LabError {
        use rarefaction_core::Error as E;
        move |source| match source {
            E::CflViolation { .. } | E::TailMass { .. } | E::NonFinite { .. } => {
                LabError::Numerical { module, source }
            }
            _ => LabError::Module { module, source },
        }
    }

    /// 0 ok, 1 config error, 2 numerical abort, 3 acceptance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Numerical { .. } => 2,
            LabError::Acceptance(_) => 3,
            _ => 1,
        }
    }
}
