use serde::{Deserialize, Serialize};

use super::{distinct_points, periodic_axis, Setup, SpectraError};
use crate::assembly::{assemble_cell_pair, BlochMomentum};
use crate::eigensolve::{lowest_eigenpairs, EigenConfig};
use crate::geometry::rasterize_cell;
use crate::intervals::{Interval, IntervalSet};
use crate::parallel::map_indexed;

/// Sampled band functions `Λ_k(η)` on a uniform periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFunction {
    /// Axis samples, shared by `η₁` and `η₂`.
    pub grid: Vec<f64>,
    pub count: usize,
    /// `values[k][i1][i2]`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub n: usize,
    /// Largest `|Λ_k(η) - Λ_k(η')| / |η - η'|` over adjacent samples.
    pub continuity_modulus: f64,
    /// Whether `Λ_1 ≤ Λ_2 ≤ …` holds at every sample.
    pub ordered: bool,
}

impl BandFunction {
    pub fn value(&self, k: usize, i1: usize, i2: usize) -> f64 {
        self.values[k][i1][i2]
    }

    /// Largest relative deviation from `Λ_k(η) = Λ_k(-η)`.
    pub fn conjugation_defect(&self) -> f64 {
        let m = self.grid.len();
        let mut worst = 0.0f64;
        for band in &self.values {
            for i1 in 0..m {
                for i2 in 0..m {
                    let a = band[i1][i2];
                    let b = band[(m - 1 - i1) % m][(m - 1 - i2) % m];
                    worst = worst.max((a - b).abs() / a.abs().max(1.0));
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn interval(&self) -> Interval {
        Interval::closed(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub bands: Vec<Band>,
    pub union: IntervalSet,
    pub gaps: IntervalSet,
    /// `min_η Λ_K(η)`; gap claims above it are not made.
    pub trust_ceiling: f64,
}

fn solve_points(
    setup: &Setup,
    n: usize,
    etas: &[[f64; 2]],
    count: usize,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<Vec<Vec<f64>>, SpectraError> {
    if count == 0 {
        return Err(SpectraError::Parameter("band count must be positive".into()));
    }
    let mesh = rasterize_cell(&setup.geometry, n)?;
    let solved = map_indexed(etas.len(), workers, |i| {
        let eta = etas[i];
        let pair = assemble_cell_pair(&mesh, &setup.symbol, &setup.field, BlochMomentum::new(eta[0], eta[1]))?;
        lowest_eigenpairs(&pair, count, cfg)
            .map(|r| r.eigenvalues)
            .map_err(|source| SpectraError::CellSolve { eta, source })
    });
    solved.into_iter().collect()
}

/// Lowest `count` cell eigenvalues at every sample of an `m_grid × m_grid`
/// periodic grid. The last grid line repeats the first.
pub fn sample_band_functions(
    setup: &Setup,
    n: usize,
    m_grid: usize,
    count: usize,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<BandFunction, SpectraError> {
    if m_grid != 1 && (m_grid < 5 || m_grid % 2 == 0) {
        return Err(SpectraError::Parameter(format!("band grid must be 1 or odd and at least 5, got {m_grid}")));
    }
    let grid = periodic_axis(m_grid);
    let p = distinct_points(m_grid);
    let etas: Vec<[f64; 2]> = (0..p * p).map(|i| [grid[i / p], grid[i % p]]).collect();
    let solved = solve_points(setup, n, &etas, count, cfg, workers)?;

    let m = grid.len();
    let mut values = vec![vec![vec![0.0; m]; m]; count];
    let mut ordered = true;
    for i1 in 0..m {
        for i2 in 0..m {
            let lams = &solved[(i1 % p) * p + (i2 % p)];
            ordered &= lams.windows(2).all(|w| w[0] <= w[1]);
            for k in 0..count {
                values[k][i1][i2] = lams[k];
            }
        }
    }
    let continuity_modulus = continuity_modulus(&values, &grid);
    Ok(BandFunction { grid, count, values, n, continuity_modulus, ordered })
}

fn continuity_modulus(values: &[Vec<Vec<f64>>], grid: &[f64]) -> f64 {
    if grid.len() < 2 {
        return 0.0;
    }
    let step = grid[1] - grid[0];
    let m = grid.len();
    let mut worst = 0.0f64;
    for band in values {
        for i1 in 0..m {
            for i2 in 0..m {
                if i1 + 1 < m {
                    worst = worst.max((band[i1 + 1][i2] - band[i1][i2]).abs());
                }
                if i2 + 1 < m {
                    worst = worst.max((band[i1][i2 + 1] - band[i1][i2]).abs());
                }
            }
        }
    }
    worst / step
}

fn bands_of(per_point: &[&[f64]], count: usize) -> (Vec<Band>, f64) {
    let bands: Vec<Band> = (0..count)
        .map(|k| {
            let (lo, hi) = per_point
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l[k]), hi.max(l[k])));
            Band { index: k + 1, lo, hi }
        })
        .collect();
    let ceiling = bands.last().map_or(f64::INFINITY, |b| b.lo);
    (bands, ceiling)
}

pub fn bands_from_samples(bf: &BandFunction) -> BandSummary {
    let m = bf.grid.len();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(m * m);
    for i1 in 0..m {
        for i2 in 0..m {
            points.push((0..bf.count).map(|k| bf.values[k][i1][i2]).collect());
        }
    }
    let refs: Vec<&[f64]> = points.iter().map(|v| v.as_slice()).collect();
    summarize(bands_of(&refs, bf.count))
}

/// Gaps narrower than this, relative to `max(1, λ)`, are eigensolver noise.
pub const GAP_FLOOR: f64 = 1e-8;

fn is_noise_gap(lo: f64, hi: f64) -> bool {
    hi - lo <= GAP_FLOOR * hi.abs().max(1.0)
}

/// Union of band intervals with noise gaps closed up.
fn band_union(bands: &[Band]) -> IntervalSet {
    let raw = IntervalSet::from_intervals(bands.iter().map(Band::interval));
    let mut merged: Vec<Interval> = Vec::with_capacity(raw.len());
    for &part in raw.intervals() {
        match merged.last_mut() {
            Some(last) if is_noise_gap(last.hi, part.lo) => {
                last.hi = part.hi;
                last.hi_closed = part.hi_closed;
            }
            _ => merged.push(part),
        }
    }
    IntervalSet::from_intervals(merged)
}

fn summarize((bands, trust_ceiling): (Vec<Band>, f64)) -> BandSummary {
    let union = band_union(&bands);
    let gaps = if trust_ceiling.is_finite() && trust_ceiling > 0.0 {
        let raw = union.complement_within(Interval::closed(0.0, trust_ceiling));
        IntervalSet::from_intervals(raw.intervals().iter().copied().filter(|g| !is_noise_gap(g.lo, g.hi)))
    } else {
        IntervalSet::empty()
    };
    BandSummary { bands, union, gaps, trust_ceiling }
}

/// Bands of the strip operator at fixed `ζ`: ranges of `Λ_k(ζ, η₂)` over
/// `η₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialBands {
    pub zeta: f64,
    pub bands: Vec<Band>,
    pub union: IntervalSet,
    /// `min_η₂ Λ_K(ζ, η₂)`.
    pub ceiling: f64,
}

impl PartialBands {
    pub fn distance(&self, lambda: f64) -> f64 {
        self.union.distance(lambda)
    }
}

pub fn partial_bands(
    setup: &Setup,
    n: usize,
    zeta: f64,
    m_line: usize,
    count: usize,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<PartialBands, SpectraError> {
    if m_line == 0 {
        return Err(SpectraError::Parameter("line grid must have at least one point".into()));
    }
    let axis = periodic_axis(m_line);
    let etas: Vec<[f64; 2]> = axis[..distinct_points(m_line)].iter().map(|&e2| [zeta, e2]).collect();
    let solved = solve_points(setup, n, &etas, count, cfg, workers)?;
    let refs: Vec<&[f64]> = solved.iter().map(|v| v.as_slice()).collect();
    let (bands, ceiling) = bands_of(&refs, count);
    let union = band_union(&bands);
    Ok(PartialBands { zeta, bands, union, ceiling })
}
