//! Finite-element simulation and verification harness for cloaking by
//! anomalous localized resonance in sign-changing media.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds tagged triangulations of the truncated disk.
//! * [`media`] holds coefficient layouts, planar diffeomorphisms and
//!   push-forwards, and checks complementary-media identities.
//! * [`discretization`] assembles and solves the P1 problems with a modal
//!   Dirichlet-to-Neumann boundary and evaluates discrete fields.
//! * [`oracle`] provides Bessel functions and radially layered mode-matching
//!   solutions used as independent references.
//! * [`experiments`] runs loss sweeps, fits rates and produces verdicts.
//! * [`io`] writes VTK and CSV artefacts.

pub mod discretization;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod media;
pub mod oracle;

pub use num_complex::Complex64 as C64;
