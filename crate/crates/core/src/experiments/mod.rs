//! Loss sweeps, rate fits, boundary diagnostics and scenario verdicts.
//!
//! A [`ScenarioConfig`] fixes the layout, object, source, loss schedule and
//! mesh. [`run_sweep`] solves the lossy problem for every δ and compares it
//! with the positive-coefficient references; [`run_scenario_suite`] adds the
//! acceptance rule of the scenario.

mod config;
mod diagnostics;
mod fit;
mod suite;
mod sweep;

use thiserror::Error;

use crate::discretization::DiscretizationError;
use crate::geometry::GeometryError;
use crate::media::MediaError;
use crate::oracle::OracleError;

pub use config::{geometric_deltas, MeshSchedule, ScenarioConfig};
pub use diagnostics::{
    fit_common_exponent, reflection_diagnostics, three_sphere_check, three_sphere_exponent, BoundaryMismatch, ReflectionRecord, ThreeSphereReport,
};
pub use fit::{fit_points, fit_rate, least_squares, RateFit, FLOOR_FACTOR};
pub use suite::{
    judge, power_growth, run_scenario_suite, run_suite_config, SuiteOverrides, SuiteReport, Verdict, CSV_HEADER, DISCREPANCY_TOL, MAX_POWER_GROWTH, MIN_RATE,
    MIN_SEPARATION, RATE_ROBUSTNESS,
};
pub use sweep::{power, power_sweep, reference_solution, run_sweep, ConvergenceReport, DeltaRecord, MeshInfo, Workspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("rate fit refused: {0}")]
    BelowFloor(String),
    #[error("circles crossing material interfaces")]
    Interface,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl ExperimentError {
    /// Configuration problems as opposed to numerical failures.
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::Unsupported(_) | ExperimentError::Interface)
            || matches!(self, ExperimentError::Media(MediaError::Ellipticity(_) | MediaError::Precondition(_)))
            || matches!(self, ExperimentError::Geometry(_))
            || matches!(self, ExperimentError::Discretization(DiscretizationError::Source(_)))
    }
}
