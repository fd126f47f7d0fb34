//! Campaigns that confront the estimators of `dgff-ballot` with the
//! asymptotic statements they target, plus report emission.

pub mod campaigns;
pub mod config;
pub mod record;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use record::ResultRecord;

use dgff_ballot::{concentric::ConcentricError, drw::DrwError, functionals::FunctionalError, gff::GffError, harmonic::PotentialError, scales::ScaleError, solver::SolverError};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Gff(#[from] GffError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Concentric(#[from] ConcentricError),
    #[error(transparent)]
    Drw(#[from] DrwError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
