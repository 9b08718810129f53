use serde::{Deserialize, Serialize};

use super::{
    classify_strip_eigenvalues, distinct_points, fit_decay_rate, partial_bands, periodic_axis, strip_spectrum,
    truncation_stability, DecayFit, PartialBands, RowProfile, SampleClass, Setup, SpectraError, StabilityRecord,
    StripLevels, StripSolution, Tolerances,
};
use crate::eigensolve::EigenConfig;
use crate::geometry::CapBc;
use crate::intervals::{Interval, IntervalSet};
use crate::parallel::map_indexed;

/// Discretization of a dispersion sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub n: usize,
    /// Points of the periodic ζ grid, last one the image of the first.
    pub zeta_points: usize,
    /// Strip truncations; the largest one carries the branches.
    pub t_list: Vec<usize>,
    /// Eigenvalues per strip solve.
    pub strip_count: usize,
    /// `η₂` samples per partial-band sweep.
    pub m_line: usize,
    /// Cell eigenvalues per partial-band sample.
    pub band_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    /// The branch continues into a partial band.
    BandEdge,
    /// The branch stops without entering a band (ambiguity, ceiling, or a
    /// failed certificate).
    Interior,
    /// The segment reaches the end of the ζ period.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSample {
    pub zeta: f64,
    pub lambda: f64,
    pub class: SampleClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSegment {
    pub branch: usize,
    pub samples: Vec<DispersionSample>,
    pub start: EndpointKind,
    pub end: EndpointKind,
}

impl DispersionSegment {
    pub fn range(&self) -> Interval {
        let lo = self.samples.iter().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
        let hi = self.samples.iter().map(|s| s.lambda).fold(f64::NEG_INFINITY, f64::max);
        Interval::closed(lo, hi)
    }

    /// Largest jump between neighbouring samples.
    pub fn max_step(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].lambda - w[0].lambda).abs()).fold(0.0, f64::max)
    }
}

/// Certified guided mode at one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappedMode {
    pub zeta: f64,
    pub lambda: f64,
    pub decay: DecayFit,
    pub stability: StabilityRecord,
    pub profile: RowProfile,
}

/// In-gap eigenvalue that failed certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub zeta: f64,
    pub lambda: f64,
    pub decay: Option<DecayFit>,
    pub stability: Option<StabilityRecord>,
    pub reason: String,
}

/// Branch link left unresolved because two overlaps were too close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSplit {
    pub zeta: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSweep {
    pub zeta_grid: Vec<f64>,
    /// One entry per distinct ζ.
    pub partial: Vec<PartialBands>,
    /// Eigenvalues of the branch-carrying strip per distinct ζ.
    pub levels: Vec<Vec<f64>>,
    pub classes: Vec<Vec<SampleClass>>,
    pub segments: Vec<DispersionSegment>,
    pub trapped: Vec<TrappedMode>,
    pub rejected: Vec<RejectedCandidate>,
    pub splits: Vec<BranchSplit>,
    /// Classification ceiling actually used.
    pub ceiling: f64,
}

impl DispersionSweep {
    pub fn in_gap_segments(&self) -> impl Iterator<Item = &DispersionSegment> {
        self.segments.iter().filter(|s| s.samples.iter().any(|x| x.class == SampleClass::InGap))
    }

    /// Lowest partial-band ceiling over ζ.
    pub fn partial_ceiling(&self) -> f64 {
        self.partial.iter().map(|p| p.ceiling).fold(f64::INFINITY, f64::min)
    }
}

enum Link {
    To(usize),
    Weak,
    Ambiguous,
}

/// Value proximity picks the nearest few eigenvalues at the neighbouring ζ,
/// eigenvector overlap decides among them.
fn match_neighbor(from: &StripSolution, a: usize, to: &StripSolution, tol: &Tolerances) -> Link {
    const NEAREST: usize = 4;
    let lambda = from.eigenvalues[a];
    let mut order: Vec<usize> = (0..to.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| (to.eigenvalues[x] - lambda).abs().total_cmp(&(to.eigenvalues[y] - lambda).abs()));
    order.truncate(NEAREST);
    let mut scored: Vec<(usize, f64)> = order.into_iter().map(|b| (b, from.overlap(a, &to.eigenvectors[b]))).collect();
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let (best, score) = scored[0];
    if score < tol.overlap_min {
        return Link::Weak;
    }
    if scored.len() > 1 && scored[1].1 >= (1.0 - tol.overlap_ambiguity) * score {
        return Link::Ambiguous;
    }
    Link::To(best)
}

struct Candidate {
    certified: bool,
}

fn validate_params(setup: &Setup, p: &SweepParams) -> Result<(), SpectraError> {
    if p.zeta_points < 9 {
        return Err(SpectraError::Parameter(format!("ζ grid needs at least 9 points, got {}", p.zeta_points)));
    }
    let mut ts = p.t_list.clone();
    ts.sort_unstable();
    ts.dedup();
    if ts.len() < 2 {
        return Err(SpectraError::Parameter("truncation list needs at least two distinct values".into()));
    }
    let h = setup.waveguide.half_width_h;
    if ts[ts.len() - 1] < h + 4 {
        return Err(SpectraError::Parameter(format!("largest truncation must be at least h + 4 = {}", h + 4)));
    }
    if p.strip_count == 0 || p.band_count == 0 {
        return Err(SpectraError::Parameter("eigenvalue counts must be positive".into()));
    }
    Ok(())
}

/// Strip spectra over the ζ grid, certification of in-gap eigenvalues and
/// assembly of certified samples into dispersion segments.
pub fn sweep_dispersion(
    setup: &Setup,
    params: &SweepParams,
    tol: &Tolerances,
    ceiling: f64,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<DispersionSweep, SpectraError> {
    validate_params(setup, params)?;
    let zeta_grid = periodic_axis(params.zeta_points);
    let p = distinct_points(params.zeta_points);
    let mut ts = params.t_list.clone();
    ts.sort_unstable();
    ts.dedup();
    let t_main = *ts.last().expect("validated");
    let h = setup.waveguide.half_width_h;

    let partial: Vec<PartialBands> = map_indexed(p, workers, |i| {
        partial_bands(setup, params.n, zeta_grid[i], params.m_line, params.band_count, cfg, 1)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let main: Vec<StripSolution> = map_indexed(p, workers, |i| {
        strip_spectrum(setup, zeta_grid[i], t_main, params.n, params.strip_count, CapBc::Dirichlet, cfg)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let ceiling = ceiling.min(partial.iter().map(|pb| pb.ceiling).fold(f64::INFINITY, f64::min));
    let classes: Vec<Vec<SampleClass>> = (0..p)
        .map(|i| classify_strip_eigenvalues(&main[i].eigenvalues, &partial[i], tol.tol_band, ceiling))
        .collect();

    // Remaining (T, cap) combinations, only where in-gap candidates exist.
    let need: Vec<usize> = (0..p).filter(|&i| classes[i].contains(&SampleClass::InGap)).collect();
    let mut combos: Vec<(usize, usize, CapBc)> = Vec::new();
    for &i in &need {
        for &t in &ts {
            for cap in [CapBc::Dirichlet, CapBc::Neumann] {
                if !(t == t_main && cap == CapBc::Dirichlet) {
                    combos.push((i, t, cap));
                }
            }
        }
    }
    let extra: Vec<StripLevels> = map_indexed(combos.len(), workers, |c| {
        let (i, t, cap) = combos[c];
        strip_spectrum(setup, zeta_grid[i], t, params.n, params.strip_count, cap, cfg).map(|s| s.levels())
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let mut trapped = Vec::new();
    let mut rejected = Vec::new();
    let mut cands: Vec<Vec<Option<Candidate>>> = Vec::with_capacity(p);
    for i in 0..p {
        let mut levels: Vec<StripLevels> = vec![main[i].levels()];
        levels.extend(combos.iter().zip(&extra).filter(|(c, _)| c.0 == i).map(|(_, l)| l.clone()));
        let mut row = Vec::with_capacity(classes[i].len());
        for (a, &class) in classes[i].iter().enumerate() {
            if class != SampleClass::InGap {
                row.push(None);
                continue;
            }
            let lambda = main[i].eigenvalues[a];
            let decay = fit_decay_rate(&main[i].profiles[a], h, t_main).ok();
            let stability = truncation_stability(lambda, &levels, tol.tol_stab).ok();
            let decays = decay.is_some_and(|d| d.accepts(tol.beta_min, tol.fit_residual_max));
            let stable = stability.as_ref().is_some_and(|s| s.accepted);
            let certified = decays && stable;
            if certified {
                trapped.push(TrappedMode {
                    zeta: zeta_grid[i],
                    lambda,
                    decay: decay.expect("checked"),
                    stability: stability.expect("checked"),
                    profile: main[i].profiles[a].clone(),
                });
            } else {
                let reason = match (decays, stable) {
                    (false, false) => "no exponential decay; unstable under truncation",
                    (false, true) => "no exponential decay",
                    _ => "unstable under truncation",
                };
                rejected.push(RejectedCandidate { zeta: zeta_grid[i], lambda, decay, stability, reason: reason.into() });
            }
            row.push(Some(Candidate { certified }));
        }
        cands.push(row);
    }

    let certified = |i: usize, a: usize| cands[i % p][a].as_ref().is_some_and(|c| c.certified);

    // Forward links between certified samples; index p stands for ζ = 2π.
    let mut next: Vec<Vec<Option<usize>>> = vec![Vec::new(); p];
    let mut end_kind: Vec<Vec<EndpointKind>> = vec![Vec::new(); p];
    let mut splits = Vec::new();
    let mut incoming = vec![vec![0usize; params.strip_count]; p + 1];
    for i in 0..p {
        let j = (i + 1) % p;
        next[i] = vec![None; main[i].eigenvalues.len()];
        end_kind[i] = vec![EndpointKind::Interior; main[i].eigenvalues.len()];
        for a in 0..main[i].eigenvalues.len() {
            if !certified(i, a) {
                continue;
            }
            match match_neighbor(&main[i], a, &main[j], tol) {
                Link::To(b) if certified(j, b) => {
                    next[i][a] = Some(b);
                    incoming[i + 1][b] += 1;
                }
                Link::To(b) if classes[j][b] == SampleClass::InBand => end_kind[i][a] = EndpointKind::BandEdge,
                Link::Ambiguous => splits.push(BranchSplit { zeta: zeta_grid[i], lambda: main[i].eigenvalues[a] }),
                _ => {}
            }
        }
    }
    // Two certified samples claiming the same successor: split both.
    for i in 0..p {
        for a in 0..next[i].len() {
            if let Some(b) = next[i][a] {
                if incoming[i + 1][b] > 1 {
                    next[i][a] = None;
                    splits.push(BranchSplit { zeta: zeta_grid[i], lambda: main[i].eigenvalues[a] });
                }
            }
        }
    }
    let mut has_pred = vec![vec![false; params.strip_count]; p + 1];
    for i in 0..p {
        for b in next[i].iter().flatten() {
            has_pred[i + 1][*b] = true;
        }
    }

    let mut segments = Vec::new();
    for i0 in 0..p {
        for a0 in 0..main[i0].eigenvalues.len() {
            if !certified(i0, a0) || has_pred[i0][a0] {
                continue;
            }
            let start = if i0 == 0 {
                EndpointKind::Periodic
            } else {
                start_kind(&main[i0], a0, &main[i0 - 1], &classes[i0 - 1], tol)
            };
            let mut samples = Vec::new();
            let (mut i, mut a) = (i0, a0);
            let end = loop {
                samples.push(DispersionSample {
                    zeta: zeta_grid[i],
                    lambda: main[i % p].eigenvalues[a],
                    class: SampleClass::InGap,
                });
                if i == p {
                    break EndpointKind::Periodic;
                }
                match next[i][a] {
                    Some(b) => {
                        i += 1;
                        a = b;
                    }
                    None => break end_kind[i][a],
                }
            };
            segments.push(DispersionSegment { branch: segments.len(), samples, start, end });
        }
    }

    Ok(DispersionSweep {
        zeta_grid,
        partial,
        levels: main.iter().map(|s| s.eigenvalues.clone()).collect(),
        classes,
        segments,
        trapped,
        rejected,
        splits,
        ceiling,
    })
}

fn start_kind(sol: &StripSolution, a: usize, prev: &StripSolution, prev_classes: &[SampleClass], tol: &Tolerances) -> EndpointKind {
    match match_neighbor(sol, a, prev, tol) {
        Link::To(b) if prev_classes[b] == SampleClass::InBand => EndpointKind::BandEdge,
        _ => EndpointKind::Interior,
    }
}

/// Union of the λ-ranges of the segments, merged.
pub fn sigma_sharp(segments: &[DispersionSegment]) -> IntervalSet {
    IntervalSet::from_intervals(segments.iter().filter(|s| !s.samples.is_empty()).map(|s| s.range()))
}
