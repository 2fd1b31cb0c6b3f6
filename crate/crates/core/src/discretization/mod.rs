//! P1 assembly and solution of the lossy transmission problems on the
//! truncated disk, with a modal Dirichlet-to-Neumann outer boundary.
//!
//! The bilinear form is
//! `∫ s_δ A ∇u·∇φ − k² ∫ s_0 Σ u φ + ⟨Λ u, φ⟩_{∂B_R}` and the load is
//! `−∫ f φ`, so the solve returns `u` of `div(s_δ A ∇u) + k² s_0 Σ u = f`.
//! For `k = 0` the constant mode is fixed by a zero-mean constraint on the
//! outer circle through one Lagrange multiplier.

mod assembly;
mod dtn;
mod field;
mod flux;
mod source;
mod sparse;

use thiserror::Error;

use crate::geometry::{GeometryError, RegionTag};
use crate::media::MediaError;
use crate::oracle::OracleError;

pub use assembly::{assemble, assemble_with_support, element_system, LinearSystem, QUAD_MIDPOINTS};
pub use dtn::{dtn_operator, DtnOperator, MIN_MODES};
pub use field::{circle_norm, error_against, norm, norm_where, BoundaryNorm, DiscreteField, NormKind};
pub use flux::{weak_flux, CurveFlux};
pub use source::{RingMode, SourceSpec};
pub use sparse::{solve_csr, solve_system, CsrMatrix, SolveStats, TripletBuilder, RESIDUAL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("element {element} carries tag {tag} which the medium does not define")]
    TagMismatch { element: usize, tag: RegionTag },
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid source: {0}")]
    Source(String),
    #[error("boundary operator: {0}")]
    Dtn(String),
    #[error(transparent)]
    Special(#[from] OracleError),
    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("relative residual {residual:e} exceeds the tolerance")]
    Residual { residual: f64 },
    #[error("point ({x}, {y}) is outside the mesh")]
    OutsideMesh { x: f64, y: f64 },
    #[error("region selection is empty")]
    EmptyRegion,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
