//! Band functions and bands of the cell problem, partial bands and the
//! discrete spectrum of the ζ-strip problem, dispersion curves of guided
//! modes, and the union formula
//!
//! ```text
//! σ_es(A) = σ_es(A⁰) ∪ σ♯,   σ_ad = σ♯ \ σ_es(A⁰).
//! ```
//!
//! Guided modes are certified numerically: an in-gap strip eigenvalue counts
//! only if its eigenvector decays exponentially away from the waveguide and
//! the eigenvalue is stable under changes of the strip truncation and of the
//! cap boundary condition.

mod bands;
mod dispersion;
mod report;
mod strip;

pub use bands::*;
pub use dispersion::*;
pub use report::*;
pub use strip::*;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::eigensolve::EigenError;
use crate::geometry::{GeometryError, UnitCellGeometry, WaveguideSpec};
use crate::operator::{CoefficientField, OperatorSymbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("eigensolver failed at η = ({}, {}): {source}", .eta[0], .eta[1])]
    CellSolve { eta: [f64; 2], source: EigenError },
    #[error("eigensolver failed on the strip at ζ = {zeta}, T = {t}: {source}")]
    StripSolve { zeta: f64, t: usize, source: EigenError },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("decay fit needs at least two profile rows above the floor, found {0}")]
    InsufficientProfile(usize),
}

/// Everything that defines the operator: perforation, waveguide, symbol and
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub geometry: UnitCellGeometry,
    pub waveguide: WaveguideSpec,
    pub symbol: OperatorSymbol,
    pub field: CoefficientField,
}

/// Numerical thresholds for classification and certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative residual target of every eigensolve.
    pub eig_tol: f64,
    /// An eigenvalue is in a gap iff its distance to every partial band
    /// exceeds `tol_band * max(1, λ)`.
    pub tol_band: f64,
    /// Largest admitted `spread / λ` across truncations and cap conditions.
    pub tol_stab: f64,
    /// Smallest fitted decay rate accepted as exponential decay.
    pub beta_min: f64,
    /// Largest RMS misfit (natural log units) of the decay fit.
    pub fit_residual_max: f64,
    /// Smallest eigenvector overlap that links two dispersion samples.
    pub overlap_min: f64,
    /// Relative overlap margin below which a link is ambiguous.
    pub overlap_ambiguity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_tol: 1e-8,
            tol_band: 1e-3,
            tol_stab: 1e-3,
            beta_min: 0.05,
            fit_residual_max: 0.25,
            overlap_min: 0.5,
            overlap_ambiguity: 0.01,
        }
    }
}

/// Uniform samples `2π i / (points - 1)`, `i = 0..points`; the last sample
/// is the periodic image of the first. A single point means `{0}`.
pub fn periodic_axis(points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    (0..points).map(|i| 2.0 * PI * i as f64 / (points - 1) as f64).collect()
}

/// Number of distinct samples on a [`periodic_axis`].
pub fn distinct_points(points: usize) -> usize {
    if points <= 1 { 1 } else { points - 1 }
}
