//! Validation experiments: effective diffusion, chemotactic drift,
//! kinetic-to-continuum convergence and the expanding-colony benchmark.

pub mod convergence;
pub mod drift;
pub mod figure1;
pub mod msd;

use thiserror::Error;

use crate::grid::GridError;
use crate::kinetic::KineticError;
use crate::pde::PdeError;
use crate::turning::TurningError;

pub use convergence::{convergence_study, expected_deposit, ConvergenceReport, ConvergenceRow, ConvergenceSetup};
pub use drift::{drift_experiment, drift_exact, DriftConfig, DriftReport};
pub use figure1::{angular_cv, colony_pair, front_radius, interface_width, ColonyConfig, ColonyFrame, ColonyPair};
pub use msd::{msd_experiment, MsdConfig, MsdReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Kinetic(#[from] KineticError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Turning(#[from] TurningError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
