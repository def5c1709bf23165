//! Numerical laboratory for the equivariant generalized Landau-Lifshitz flow
//! from C^n to CP^n, written in reduced sphere-valued radial coordinates.
//!
//! Modules follow the problem's layers: [`geom`] holds the pointwise geometry,
//! [`singular_ode`] integrates radial ODEs through the singular origin,
//! [`selfsim`] and [`real_flow`] solve the profile problems, [`radial_pde`]
//! evolves the full PDE by the method of lines and [`hasimoto`] certifies the
//! gauge-transformed equations. [`verify`] bundles the invariant suites.

pub mod fd;
pub mod geom;
pub mod hasimoto;
pub mod io;
pub mod quad;
pub mod radial_pde;
pub mod real_flow;
pub mod selfsim;
pub mod singular_ode;
pub mod verify;

pub use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GllError {
    #[error("pole singularity: point within guard distance of -e3")]
    PoleSingularity,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("norm drift {drift:e} exceeds repair tolerance")]
    NormDrift { drift: f64 },
    #[error("empty grid")]
    EmptyGrid,
    #[error("stiffness/blowup at r = {at}: {reason}")]
    Stiffness { at: f64, reason: String, last_state: Vec<f64> },
    #[error("instability at t = {t}, node {node}: drift {drift:e}")]
    Instability { t: f64, node: usize, drift: f64 },
    #[error("non-converged: {0}")]
    NonConverged(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GllError {
    fn from(e: std::io::Error) -> Self {
        GllError::Io(e.to_string())
    }
}

impl From<csv::Error> for GllError {
    fn from(e: csv::Error) -> Self {
        GllError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GllError {
    fn from(e: serde_json::Error) -> Self {
        GllError::Io(e.to_string())
    }
}
