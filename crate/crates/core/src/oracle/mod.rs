//! Independent semi-analytic references: Bessel functions and mode matching
//! for radially layered media.

mod bessel;
mod radial;

use thiserror::Error;

pub use bessel::{bessel, BesselKind, BesselTable};
pub use radial::{amplitudes_csv, oracle_field, radial_layered_solve, radial_layers_for, ModeSolution, RadialLayer, RadialProfile, RingOracle, Zone};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{kind:?}_{n} is not available at argument {x}")]
    BesselDomain { kind: BesselKind, n: usize, x: f64 },
    #[error("interface system is singular for mode {mode}")]
    Singular { mode: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
}
