use serde::{Deserialize, Serialize};

use super::{PartialBands, Setup, SpectraError};
use crate::assembly::{assemble_strip_pair, AssembledPair};
use crate::eigensolve::{lowest_eigenpairs, polish_eigenpairs, EigenConfig};
use crate::geometry::{build_strip_mesh, CapBc};
use crate::sparse::C64;

/// Eigenpairs of the truncated strip at one `(ζ, T, cap)`.
#[derive(Debug, Clone)]
pub struct StripSolution {
    pub zeta: f64,
    pub truncation_t: usize,
    pub cap_bc: CapBc,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub profiles: Vec<RowProfile>,
    pub pair: AssembledPair,
}

impl StripSolution {
    /// `|⟨v_a, w⟩_M|` for a vector on the same dof layout.
    pub fn overlap(&self, a: usize, w: &[C64]) -> f64 {
        let mut mw = vec![C64::new(0.0, 0.0); w.len()];
        self.pair.m.matvec_into(w, &mut mw);
        self.eigenvectors[a].iter().zip(&mw).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
    }

    pub fn levels(&self) -> StripLevels {
        StripLevels { truncation_t: self.truncation_t, cap_bc: self.cap_bc, eigenvalues: self.eigenvalues.clone() }
    }
}

/// Eigenvalues of one strip solve, without vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripLevels {
    pub truncation_t: usize,
    pub cap_bc: CapBc,
    pub eigenvalues: Vec<f64>,
}

impl StripLevels {
    /// Eigenvalue closest to `lambda`.
    pub fn nearest(&self, lambda: f64) -> Option<f64> {
        self.eigenvalues.iter().copied().min_by(|a, b| (a - lambda).abs().total_cmp(&(b - lambda).abs()))
    }
}

/// Mass-weighted norm of a strip vector on each cell row `a₂ ∈ [-T, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowProfile {
    /// Row centres `a₂ + 1/2`.
    pub centers: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Per-row profiles from lumped mass weights; nodes on a row interface are
/// shared equally between the two rows.
pub fn row_profiles(pair: &AssembledPair, truncation_t: usize, vectors: &[Vec<C64>]) -> Vec<RowProfile> {
    let dofs = &pair.dofs;
    let ncomp = dofs.ncomp;
    let rows = 2 * truncation_t;
    let n = dofs.n;
    let mut lumped = vec![0.0; pair.dim()];
    for (i, w) in lumped.iter_mut().enumerate() {
        *w = pair.m.row(i).map(|(_, v)| v.norm()).sum();
    }
    let mut shares: Vec<[(usize, f64); 2]> = Vec::with_capacity(dofs.node_count());
    for b in 0..dofs.node_count() {
        let (_, cy) = dofs.node_of_block(b);
        let r = cy / n;
        let share = if cy % n != 0 {
            [(r, 1.0), (r, 0.0)]
        } else if r == 0 {
            [(0, 1.0), (0, 0.0)]
        } else if r == rows {
            [(rows - 1, 1.0), (rows - 1, 0.0)]
        } else {
            [(r - 1, 0.5), (r, 0.5)]
        };
        shares.push(share);
    }
    let centers: Vec<f64> = (0..rows).map(|r| r as f64 - truncation_t as f64 + 0.5).collect();
    vectors
        .iter()
        .map(|v| {
            let mut sq = vec![0.0; rows];
            for (b, share) in shares.iter().enumerate() {
                let mut e = 0.0;
                for c in 0..ncomp {
                    let i = b * ncomp + c;
                    e += lumped[i] * v[i].norm_sqr();
                }
                for &(r, s) in share {
                    sq[r] += s * e;
                }
            }
            RowProfile { centers: centers.clone(), norms: sq.into_iter().map(f64::sqrt).collect() }
        })
        .collect()
}

/// Extra subspace sweeps so that row norms far below the peak are resolved.
const POLISH_STEPS: usize = 2;

pub fn strip_spectrum(
    setup: &Setup,
    zeta: f64,
    truncation_t: usize,
    n: usize,
    count: usize,
    cap_bc: CapBc,
    cfg: &EigenConfig,
) -> Result<StripSolution, SpectraError> {
    let mesh = build_strip_mesh(&setup.geometry, &setup.waveguide, truncation_t, n, cap_bc)?;
    let pair = assemble_strip_pair(&mesh, &setup.symbol, &setup.field, zeta)?;
    let annotate = |source| SpectraError::StripSolve { zeta, t: truncation_t, source };
    let mut result = lowest_eigenpairs(&pair, count, cfg).map_err(annotate)?;
    polish_eigenpairs(&pair.k, &pair.m, &mut result, POLISH_STEPS, cfg.tol).map_err(annotate)?;
    let profiles = row_profiles(&pair, truncation_t, &result.eigenvectors);
    Ok(StripSolution {
        zeta,
        truncation_t,
        cap_bc,
        eigenvalues: result.eigenvalues,
        residuals: result.residuals,
        eigenvectors: result.eigenvectors,
        profiles,
        pair,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleClass {
    InBand,
    InGap,
    AboveCeiling,
}

/// In a gap iff farther than `tol_band * max(1, |λ|)` from every partial
/// band; ties go to `InBand`.
pub fn classify_strip_eigenvalues(eigs: &[f64], partial: &PartialBands, tol_band: f64, ceiling: f64) -> Vec<SampleClass> {
    eigs.iter()
        .map(|&l| {
            if l >= ceiling {
                SampleClass::AboveCeiling
            } else if partial.distance(l) > tol_band * l.abs().max(1.0) {
                SampleClass::InGap
            } else {
                SampleClass::InBand
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Rate in `‖u‖_row ≈ C e^{-β |x₂|}`.
    pub beta: f64,
    /// RMS misfit of the log-linear model.
    pub residual: f64,
    pub rows_used: usize,
}

impl DecayFit {
    pub fn accepts(&self, beta_min: f64, residual_max: f64) -> bool {
        self.beta > beta_min && self.residual <= residual_max
    }
}

/// Rows below this fraction of the peak row are treated as round-off. The
/// polished strip eigenvectors carry noise near `2e-13` of the peak.
pub const PROFILE_FLOOR: f64 = 1e-12;

/// Least-squares fit of `ln ‖u‖_row` against `|x₂|` over rows with
/// `|x₂| ∈ [h+1, T-1]`, ignoring rows below [`PROFILE_FLOOR`] of the peak.
pub fn fit_decay_rate(profile: &RowProfile, half_width_h: usize, truncation_t: usize) -> Result<DecayFit, SpectraError> {
    if truncation_t < half_width_h + 4 {
        return Err(SpectraError::Parameter(format!(
            "decay fit needs T >= h + 4, got T = {truncation_t}, h = {half_width_h}"
        )));
    }
    let peak = profile.norms.iter().cloned().fold(0.0, f64::max);
    let lo = half_width_h as f64 + 1.0;
    let hi = truncation_t as f64 - 1.0;
    let pts: Vec<(f64, f64)> = profile
        .centers
        .iter()
        .zip(&profile.norms)
        .filter(|(c, v)| c.abs() >= lo && c.abs() <= hi && **v > PROFILE_FLOOR * peak && **v > 0.0)
        .map(|(c, v)| (c.abs(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(SpectraError::InsufficientProfile(pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(SpectraError::InsufficientProfile(1));
    }
    let slope = sxy / sxx;
    let sse: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Ok(DecayFit { beta: -slope, residual: (sse / k).sqrt(), rows_used: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityValue {
    pub truncation_t: usize,
    pub cap_bc: CapBc,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub values: Vec<StabilityValue>,
    /// `(max - min) / |λ|` over all truncations and caps.
    pub relative_spread: f64,
    /// Largest relative difference between the two caps at equal `T`.
    pub cap_disagreement: f64,
    pub accepted: bool,
}

/// Tracks `lambda` across strip spectra at several truncations and both
/// cap conditions by nearest eigenvalue.
pub fn truncation_stability(lambda: f64, solutions: &[StripLevels], tol_stab: f64) -> Result<StabilityRecord, SpectraError> {
    let mut ts: Vec<usize> = solutions.iter().map(|s| s.truncation_t).collect();
    ts.sort_unstable();
    ts.dedup();
    if ts.len() < 2 {
        return Err(SpectraError::Parameter("truncation stability needs at least two values of T".into()));
    }
    let has = |c: CapBc| solutions.iter().any(|s| s.cap_bc == c);
    if !(has(CapBc::Dirichlet) && has(CapBc::Neumann)) {
        return Err(SpectraError::Parameter("truncation stability needs both cap conditions".into()));
    }
    let scale = lambda.abs().max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(solutions.len());
    for s in solutions {
        if let Some(l) = s.nearest(lambda) {
            values.push(StabilityValue { truncation_t: s.truncation_t, cap_bc: s.cap_bc, lambda: l });
        }
    }
    let lo = values.iter().map(|v| v.lambda).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.lambda).fold(f64::NEG_INFINITY, f64::max);
    let relative_spread = if values.len() == solutions.len() { (hi - lo) / scale } else { f64::INFINITY };
    let mut cap_disagreement = 0.0f64;
    for a in &values {
        for b in &values {
            if a.truncation_t == b.truncation_t && a.cap_bc != b.cap_bc {
                cap_disagreement = cap_disagreement.max((a.lambda - b.lambda).abs() / scale);
            }
        }
    }
    let accepted = relative_spread <= tol_stab;
    Ok(StabilityRecord { values, relative_spread, cap_disagreement, accepted })
}
