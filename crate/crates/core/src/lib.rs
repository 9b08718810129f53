//! Spectral engine for periodic elliptic operators on perforated planes
//! carrying a semi-infinite periodic open waveguide.
//!
//! The essential spectrum of the perturbed operator is assembled from two
//! model problems: the quasi-periodic unit-cell problem (bands) and the
//! ζ-parametrized strip problem (guided modes). See [`spectra`] for the
//! union formula and [`weyl`] for the singular-sequence harness.

pub mod assembly;
pub mod eigensolve;
pub mod geometry;
pub mod operator;
pub mod intervals;
pub mod parallel;
pub mod sparse;
pub mod spectra;
pub mod weyl;
