use serde::{Deserialize, Serialize};

use super::{
    bands_from_samples, sample_band_functions, sigma_sharp, sweep_dispersion, Band, BandFunction, DispersionSweep,
    Setup, SpectraError, SweepParams, Tolerances,
};
use crate::eigensolve::EigenConfig;
use crate::intervals::IntervalSet;

/// Result of combining the periodic spectrum with the waveguide contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionResult {
    pub sigma_es0: IntervalSet,
    pub sigma_sharp: IntervalSet,
    pub sigma_es: IntervalSet,
    pub sigma_ad: IntervalSet,
    pub trust_ceiling: f64,
    /// Set when the two inputs came with different ceilings.
    pub ceiling_mismatch: bool,
}

/// `σ_es = σ⁰ ∪ σ♯` and `σ_ad = σ♯ \ σ⁰`, both restricted to the smaller of
/// the two trust ceilings.
pub fn essential_spectrum_union(sigma0: &IntervalSet, ceiling0: f64, sharp: &IntervalSet, ceiling_sharp: f64) -> UnionResult {
    let trust_ceiling = ceiling0.min(ceiling_sharp);
    let ceiling_mismatch = ceiling0 != ceiling_sharp;
    let sigma_es0 = sigma0.clip_above(trust_ceiling);
    let sigma_sharp = sharp.clip_above(trust_ceiling);
    let sigma_es = sigma_es0.union(&sigma_sharp);
    let sigma_ad = sigma_sharp.difference(&sigma_es0);
    UnionResult { sigma_es0, sigma_sharp, sigma_es, sigma_ad, trust_ceiling, ceiling_mismatch }
}

impl UnionResult {
    /// Recomputes the set algebra from the stored components.
    pub fn verify(&self) -> bool {
        self.sigma_es == self.sigma_es0.union(&self.sigma_sharp)
            && self.sigma_ad == self.sigma_sharp.difference(&self.sigma_es0)
            && self.sigma_ad.is_disjoint(&self.sigma_es0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n: usize,
    pub m_grid: usize,
    pub band_count: usize,
    pub m_line: usize,
    pub zeta_points: usize,
    pub t_list: Vec<usize>,
    pub strip_count: usize,
    pub continuity_modulus: f64,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub bands: Vec<Band>,
    pub gaps: IntervalSet,
    pub sigma_es0: IntervalSet,
    pub sigma_sharp: IntervalSet,
    pub sigma_es: IntervalSet,
    pub sigma_ad: IntervalSet,
    pub trust_ceiling: f64,
    pub ceiling_mismatch: bool,
    pub provenance: Provenance,
}

impl SpectrumReport {
    pub fn union(&self) -> UnionResult {
        UnionResult {
            sigma_es0: self.sigma_es0.clone(),
            sigma_sharp: self.sigma_sharp.clone(),
            sigma_es: self.sigma_es.clone(),
            sigma_ad: self.sigma_ad.clone(),
            trust_ceiling: self.trust_ceiling,
            ceiling_mismatch: self.ceiling_mismatch,
        }
    }
}

/// Everything a full run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub band_function: BandFunction,
    pub sweep: DispersionSweep,
    pub report: SpectrumReport,
}

pub fn build_report(bf: &BandFunction, sweep: &DispersionSweep, m_grid: usize, params: &SweepParams, tol: &Tolerances) -> SpectrumReport {
    let summary = bands_from_samples(bf);
    let sharp = sigma_sharp(&sweep.segments);
    let u = essential_spectrum_union(&summary.union, summary.trust_ceiling, &sharp, sweep.ceiling);
    SpectrumReport {
        bands: summary.bands,
        gaps: summary.gaps,
        sigma_es0: u.sigma_es0,
        sigma_sharp: u.sigma_sharp,
        sigma_es: u.sigma_es,
        sigma_ad: u.sigma_ad,
        trust_ceiling: u.trust_ceiling,
        ceiling_mismatch: u.ceiling_mismatch,
        provenance: Provenance {
            n: params.n,
            m_grid,
            band_count: bf.count,
            m_line: params.m_line,
            zeta_points: params.zeta_points,
            t_list: params.t_list.clone(),
            strip_count: params.strip_count,
            continuity_modulus: bf.continuity_modulus,
            tolerances: tol.clone(),
        },
    }
}

/// Bands, dispersion sweep and union formula in one pass.
pub fn analyze(
    setup: &Setup,
    m_grid: usize,
    params: &SweepParams,
    tol: &Tolerances,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<Analysis, SpectraError> {
    let band_function = sample_band_functions(setup, params.n, m_grid, params.band_count, cfg, workers)?;
    let summary = bands_from_samples(&band_function);
    let sweep = sweep_dispersion(setup, params, tol, summary.trust_ceiling, cfg, workers)?;
    let report = build_report(&band_function, &sweep, m_grid, params, tol);
    Ok(Analysis { band_function, sweep, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::Interval;

    fn set(items: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_intervals(items.iter().map(|&(a, b)| Interval::closed(a, b)))
    }

    #[test]
    fn contained_sharp_adds_nothing() {
        let s0 = set(&[(0.0, 1.0), (2.0, 3.0)]);
        let u = essential_spectrum_union(&s0, f64::INFINITY, &set(&[(0.2, 0.4)]), f64::INFINITY);
        assert_eq!(u.sigma_es, s0);
        assert!(u.sigma_ad.is_empty());
        assert!(u.verify());
        assert!(!u.ceiling_mismatch);
    }

    #[test]
    fn gap_component_is_additional() {
        let u = essential_spectrum_union(&set(&[(0.0, 1.0), (2.0, 3.0)]), 10.0, &set(&[(1.4, 1.6)]), 10.0);
        assert_eq!(u.sigma_es.len(), 3);
        assert_eq!(u.sigma_ad, set(&[(1.4, 1.6)]));
        assert!(u.verify());
    }

    #[test]
    fn straddling_component_is_half_open() {
        let u = essential_spectrum_union(&set(&[(0.0, 1.0)]), 5.0, &set(&[(0.9, 1.2)]), 5.0);
        assert_eq!(u.sigma_ad.intervals(), &[Interval { lo: 1.0, hi: 1.2, lo_closed: false, hi_closed: true }]);
        assert!(u.sigma_ad.is_disjoint(&u.sigma_es0));
    }

    #[test]
    fn mismatched_ceilings_clip_and_flag() {
        let u = essential_spectrum_union(&set(&[(0.0, 1.0), (2.0, 3.0)]), 2.5, &set(&[(1.4, 2.8)]), 4.0);
        assert!(u.ceiling_mismatch);
        assert_eq!(u.trust_ceiling, 2.5);
        assert_eq!(u.sigma_es0, set(&[(0.0, 1.0), (2.0, 2.5)]));
        assert_eq!(u.sigma_ad.intervals(), &[Interval { lo: 1.4, hi: 2.0, lo_closed: true, hi_closed: false }]);
        assert!(u.verify());
    }

    #[test]
    fn empty_sharp() {
        let s0 = set(&[(0.0, 1.0)]);
        let u = essential_spectrum_union(&s0, 3.0, &IntervalSet::empty(), 3.0);
        assert_eq!(u.sigma_es, s0);
        assert!(u.sigma_ad.is_empty());
    }
}
