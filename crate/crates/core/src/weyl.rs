//! Singular-sequence harness.
//!
//! A discrete eigenvector of the cell (or of the strip) is tiled over the
//! truncated plane with its Bloch (Floquet) phase, cut off by a smooth
//! plateau window supported on a dyadic box, and normalized. The residual
//! `‖Kv - λMv‖` then lives on the window frames only and should decay like
//! `2^{-j/2}` as the box grows.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::assembly::{assemble_cell_pair, assemble_plane_pair, AssembledPair, AssemblyError, BlochMomentum};
use crate::eigensolve::{lowest_eigenpairs, EigenConfig, EigenError};
use crate::geometry::{build_truncated_plane_mesh, min_plane_extent, rasterize_cell, CapBc, GeometryError, PlaneMesh, Point};
use crate::parallel::map_indexed;
use crate::spectra::{fit_decay_rate, strip_spectrum, DecayFit, Setup, SpectraError};
use crate::sparse::{dot, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("scale 2^{0} overflows or leaves no room for the ramp width {1}")]
    ScaleOverflow(u32, f64),
    #[error("support box [{lo}, {hi}] does not fit in the plane of half extent {l}")]
    OutsideMesh { lo: f64, hi: f64, l: usize },
    #[error("support box at scale {0} touches the waveguide")]
    HitsWaveguide(u32),
    #[error("need at least 3 scales, got {0}")]
    InsufficientScales(usize),
    #[error("input vector does not match the {expected}-dof layout (got {found})")]
    Layout { expected: usize, found: usize },
    #[error("meshes use different subdivisions ({0} vs {1})")]
    Subdivision(usize, usize),
    #[error("window vector vanishes at scale {0}")]
    ZeroWindow(u32),
    #[error("selected strip eigenvalue {0} is not a decaying mode")]
    NotTrapped(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Quintic smoothstep: `0` for `t <= 0`, `1` for `t >= d`, C² in between.
pub fn smoothstep(t: f64, d: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= d {
        1.0
    } else {
        let s = t / d;
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauSpec {
    pub j: u32,
    /// Ramp width.
    pub d: f64,
}

/// Window equal to one on `[2^j + d, 2^{j+1} - d]` and zero outside
/// `[2^j, 2^{j+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub j: u32,
    pub lo: f64,
    pub hi: f64,
    pub d: f64,
}

pub fn plateau(spec: PlateauSpec) -> Result<Plateau, WeylError> {
    if spec.j > 30 || !(spec.d > 0.0) {
        return Err(WeylError::ScaleOverflow(spec.j, spec.d));
    }
    let lo = (1u64 << spec.j) as f64;
    if 2.0 * spec.d >= lo {
        return Err(WeylError::ScaleOverflow(spec.j, spec.d));
    }
    Ok(Plateau { j: spec.j, lo, hi: 2.0 * lo, d: spec.d })
}

impl Plateau {
    pub fn profile(&self, t: f64) -> f64 {
        smoothstep(t - self.lo, self.d) * smoothstep(self.hi - t, self.d)
    }

    /// Product window on the box `[2^j, 2^{j+1}]²`.
    pub fn bloch(&self, p: Point) -> f64 {
        self.profile(p[0]) * self.profile(p[1])
    }

    /// Window on `[2^j, 2^{j+1}] × [-2^{j+1}, 2^{j+1}]`.
    pub fn floquet(&self, p: Point) -> f64 {
        self.profile(p[0]) * smoothstep(p[1] + self.hi, self.d) * smoothstep(self.hi - p[1], self.d)
    }

    fn near_ramp(&self, t: f64, edge: f64, reach: f64) -> bool {
        t >= edge - self.d - reach && t <= edge + self.d + reach
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeylKind {
    Bloch,
    Floquet,
}

/// Windowed, M-normalized tiling at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylElement {
    pub kind: WeylKind,
    pub window: Plateau,
    pub support_lo: Point,
    pub support_hi: Point,
    /// M-normalized vector on the plane dofs.
    pub vector: Vec<C64>,
    /// `‖X_j u‖²_M` before normalization.
    pub norm_sq: f64,
}

fn check_layout(pair: &AssembledPair, v: &[C64]) -> Result<(), WeylError> {
    if v.len() != pair.dim() {
        return Err(WeylError::Layout { expected: pair.dim(), found: v.len() });
    }
    Ok(())
}

fn normalize(plane: &AssembledPair, mut v: Vec<C64>, j: u32) -> Result<(Vec<C64>, f64), WeylError> {
    let mv = plane.m.matvec(&v).map_err(AssemblyError::from)?;
    let norm_sq = dot(&v, &mv).re;
    if !(norm_sq > 0.0) {
        return Err(WeylError::ZeroWindow(j));
    }
    let s = 1.0 / norm_sq.sqrt();
    v.iter_mut().for_each(|z| *z *= s);
    Ok((v, norm_sq))
}

fn plane_node(plane_mesh: &PlaneMesh, plane: &AssembledPair, b: usize) -> (usize, usize, Point) {
    let (ix, iy) = plane.dofs.node_of_block(b);
    (ix, iy, plane_mesh.grid.node_position(ix, iy))
}

/// Tiles a cell eigenvector at `η` over the box `[2^j, 2^{j+1}]²`.
pub fn build_bloch_weyl_element(
    plane_mesh: &PlaneMesh,
    plane: &AssembledPair,
    cell: &AssembledPair,
    cell_vec: &[C64],
    eta: [f64; 2],
    window: Plateau,
) -> Result<WeylElement, WeylError> {
    check_layout(cell, cell_vec)?;
    let n = plane_mesh.grid.n;
    if cell.dofs.n != n {
        return Err(WeylError::Subdivision(cell.dofs.n, n));
    }
    let l = plane_mesh.half_extent_l;
    if window.hi > l as f64 {
        return Err(WeylError::OutsideMesh { lo: window.lo, hi: window.hi, l });
    }
    if window.lo < plane_mesh.half_width_h as f64 {
        return Err(WeylError::HitsWaveguide(window.j));
    }
    let ncomp = plane.dofs.ncomp;
    let shift = (l * n) as i64;
    let mut v = vec![C64::new(0.0, 0.0); plane.dim()];
    for b in 0..plane.dofs.node_count() {
        let (ix, iy, p) = plane_node(plane_mesh, plane, b);
        let w = window.bloch(p);
        if w == 0.0 {
            continue;
        }
        let gx = ix as i64 - shift;
        let gy = iy as i64 - shift;
        let (a1, a2) = (gx.div_euclid(n as i64), gy.div_euclid(n as i64));
        let (cx, cy) = (gx.rem_euclid(n as i64) as usize, gy.rem_euclid(n as i64) as usize);
        let Some(cd) = cell.dofs.dof_at(cx, cy) else { continue };
        let phase = C64::from_polar(w, eta[0] * a1 as f64 + eta[1] * a2 as f64);
        for c in 0..ncomp {
            v[b * ncomp + c] = phase * cell_vec[cd + c];
        }
    }
    let (vector, norm_sq) = normalize(plane, v, window.j)?;
    Ok(WeylElement {
        kind: WeylKind::Bloch,
        window,
        support_lo: [window.lo, window.lo],
        support_hi: [window.hi, window.hi],
        vector,
        norm_sq,
    })
}

/// Tiles a strip eigenvector at `ζ` along `x1 ∈ [2^j, 2^{j+1}]`; the strip
/// vector is extended by zero beyond its truncation.
pub fn build_floquet_weyl_element(
    plane_mesh: &PlaneMesh,
    plane: &AssembledPair,
    strip: &AssembledPair,
    strip_vec: &[C64],
    zeta: f64,
    window: Plateau,
) -> Result<WeylElement, WeylError> {
    check_layout(strip, strip_vec)?;
    let n = plane_mesh.grid.n;
    if strip.dofs.n != n {
        return Err(WeylError::Subdivision(strip.dofs.n, n));
    }
    let l = plane_mesh.half_extent_l;
    if window.hi > l as f64 {
        return Err(WeylError::OutsideMesh { lo: window.lo, hi: window.hi, l });
    }
    if window.lo <= plane_mesh.transition_r as f64 {
        return Err(WeylError::HitsWaveguide(window.j));
    }
    let ncomp = plane.dofs.ncomp;
    let shift = (l * n) as i64;
    let strip_rows = strip.dofs.ny as i64;
    let strip_shift = (-strip.dofs.origin[1]).round() as i64 * n as i64;
    let mut v = vec![C64::new(0.0, 0.0); plane.dim()];
    for b in 0..plane.dofs.node_count() {
        let (ix, iy, p) = plane_node(plane_mesh, plane, b);
        let w = window.floquet(p);
        if w == 0.0 {
            continue;
        }
        let gx = ix as i64 - shift;
        let sy = iy as i64 - shift + strip_shift;
        if sy < 0 || sy > strip_rows {
            continue;
        }
        let a1 = gx.div_euclid(n as i64);
        let cx = gx.rem_euclid(n as i64) as usize;
        let Some(sd) = strip.dofs.dof_at(cx, sy as usize) else { continue };
        let phase = C64::from_polar(w, zeta * a1 as f64);
        for c in 0..ncomp {
            v[b * ncomp + c] = phase * strip_vec[sd + c];
        }
    }
    let (vector, norm_sq) = normalize(plane, v, window.j)?;
    Ok(WeylElement {
        kind: WeylKind::Floquet,
        window,
        support_lo: [window.lo, -window.hi],
        support_hi: [window.hi, window.hi],
        vector,
        norm_sq,
    })
}

/// Per-scale measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub j: u32,
    pub support_lo: Point,
    pub support_hi: Point,
    /// `‖X_j u‖²_M`.
    pub norm_sq: f64,
    /// `‖Kv - λMv‖` in the lumped-mass dual norm, for `‖v‖_M = 1`.
    pub residual: f64,
    /// Unnormalized residual on the frames crossing `x1 = const`.
    pub vertical_frame: f64,
    /// Unnormalized residual on the frames crossing `x2 = const`.
    pub horizontal_frame: f64,
    /// Unnormalized residual away from every frame.
    pub off_frame: f64,
}

/// Least-squares line with a 95% confidence interval on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let k = xs.len();
    if k < 2 || ys.len() != k || ys.iter().any(|y| !y.is_finite()) {
        return None;
    }
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let half = if k > 2 {
        let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (sse / (kf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, kf - 2.0).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
        t * se
    } else {
        f64::INFINITY
    };
    Some(SlopeFit { slope, intercept, ci_low: slope - half, ci_high: slope + half })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylRun {
    pub kind: WeylKind,
    pub lambda: f64,
    /// `η` for Bloch runs, `(ζ, 0)` for Floquet runs.
    pub momentum: [f64; 2],
    pub records: Vec<ScaleRecord>,
    /// Slope of `log₂ r_j` against `j`.
    pub residual_slope: SlopeFit,
    /// Slope of `log₂ ‖X_j u‖²_M` against `j`.
    pub norm_growth: SlopeFit,
    pub decay: Option<DecayFit>,
}

impl WeylRun {
    /// Whether the support boxes are pairwise disjoint up to boundaries.
    pub fn supports_disjoint(&self) -> bool {
        self.records.iter().enumerate().all(|(a, ra)| {
            self.records[a + 1..].iter().all(|rb| {
                ra.support_hi[0] <= rb.support_lo[0] || rb.support_hi[0] <= ra.support_lo[0]
            })
        })
    }
}

/// Residual measurements for each element; the pair is shared read-only.
pub fn residual_decay(
    plane_mesh: &PlaneMesh,
    plane: &AssembledPair,
    lambda: f64,
    elements: &[WeylElement],
    workers: usize,
) -> Result<(Vec<ScaleRecord>, SlopeFit, SlopeFit), WeylError> {
    if elements.len() < 3 {
        return Err(WeylError::InsufficientScales(elements.len()));
    }
    let reach = plane_mesh.grid.element_size();
    let weights = dual_weights(plane);
    let records: Vec<ScaleRecord> = map_indexed(elements.len(), workers, |e| {
        let el = &elements[e];
        let r = residual_vector(plane, lambda, &el.vector);
        let total: f64 = r.iter().zip(&weights).map(|(z, w)| z.norm_sqr() * w).sum();
        let scale = el.norm_sq.sqrt();
        let w = &el.window;
        let ncomp = plane.dofs.ncomp;
        let (mut vert, mut horiz, mut off) = (0.0, 0.0, 0.0);
        for b in 0..plane.dofs.node_count() {
            let p = plane.dofs.position_of_block(b);
            let e2: f64 = (0..ncomp).map(|c| r[b * ncomp + c].norm_sqr() * weights[b * ncomp + c]).sum();
            if e2 == 0.0 {
                continue;
            }
            let v = w.near_ramp(p[0], w.lo, reach) || w.near_ramp(p[0], w.hi, reach);
            let h = match el.kind {
                WeylKind::Bloch => w.near_ramp(p[1], w.lo, reach) || w.near_ramp(p[1], w.hi, reach),
                WeylKind::Floquet => w.near_ramp(p[1], -w.hi, reach) || w.near_ramp(p[1], w.hi, reach),
            };
            if v {
                vert += e2;
            }
            if h {
                horiz += e2;
            }
            if !v && !h {
                off += e2;
            }
        }
        ScaleRecord {
            j: w.j,
            support_lo: el.support_lo,
            support_hi: el.support_hi,
            norm_sq: el.norm_sq,
            residual: total.sqrt(),
            vertical_frame: vert.sqrt() * scale,
            horizontal_frame: horiz.sqrt() * scale,
            off_frame: off.sqrt() * scale,
        }
    });
    let js: Vec<f64> = records.iter().map(|r| r.j as f64).collect();
    let res: Vec<f64> = records.iter().map(|r| r.residual.log2()).collect();
    let nrm: Vec<f64> = records.iter().map(|r| r.norm_sq.log2()).collect();
    let residual_slope = fit_slope(&js, &res).ok_or(WeylError::InsufficientScales(records.len()))?;
    let norm_growth = fit_slope(&js, &nrm).ok_or(WeylError::InsufficientScales(records.len()))?;
    Ok((records, residual_slope, norm_growth))
}

/// Reciprocal lumped-mass diagonal.
fn dual_weights(plane: &AssembledPair) -> Vec<f64> {
    (0..plane.dim()).map(|i| 1.0 / plane.m.row(i).map(|(_, v)| v.re).sum::<f64>()).collect()
}

fn residual_vector(plane: &AssembledPair, lambda: f64, v: &[C64]) -> Vec<C64> {
    let mut kv = vec![C64::new(0.0, 0.0); v.len()];
    let mut mv = vec![C64::new(0.0, 0.0); v.len()];
    plane.k.matvec_into(v, &mut kv);
    plane.m.matvec_into(v, &mut mv);
    kv.iter().zip(&mv).map(|(a, b)| a - b * lambda).collect()
}

/// Scale range and discretization of a harness run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessParams {
    pub n: usize,
    pub j_min: u32,
    pub j_max: u32,
    /// Ramp width of the plateau.
    pub ramp: f64,
}

impl HarnessParams {
    fn check(&self) -> Result<(), WeylError> {
        let count = (self.j_max + 1).saturating_sub(self.j_min) as usize;
        if count < 3 {
            return Err(WeylError::InsufficientScales(count));
        }
        Ok(())
    }

    fn plane_extent(&self, setup: &Setup) -> usize {
        ((1usize << (self.j_max + 1)) + 1).max(min_plane_extent(&setup.waveguide))
    }
}

fn plane_for(setup: &Setup, params: &HarnessParams) -> Result<(PlaneMesh, AssembledPair), WeylError> {
    let mesh = build_truncated_plane_mesh(&setup.geometry, &setup.waveguide, params.plane_extent(setup), params.n)?;
    let pair = assemble_plane_pair(&mesh, &setup.symbol, &setup.field)?;
    Ok((mesh, pair))
}

/// Localized Bloch waves at `(η, Λ_band(η))`; `detune` shifts the tested
/// value away from the eigenvalue.
pub fn bloch_harness(
    setup: &Setup,
    params: &HarnessParams,
    eta: [f64; 2],
    band: usize,
    detune: f64,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<WeylRun, WeylError> {
    params.check()?;
    let cell_mesh = rasterize_cell(&setup.geometry, params.n)?;
    let cell = assemble_cell_pair(&cell_mesh, &setup.symbol, &setup.field, BlochMomentum::new(eta[0], eta[1]))?;
    let eig = lowest_eigenpairs(&cell, band + 1, cfg)?;
    let lambda = eig.eigenvalues[band] + detune;
    let (mesh, plane) = plane_for(setup, params)?;
    let elements: Vec<WeylElement> = (params.j_min..=params.j_max)
        .map(|j| {
            let w = plateau(PlateauSpec { j, d: params.ramp })?;
            build_bloch_weyl_element(&mesh, &plane, &cell, &eig.eigenvectors[band], cell.meta.momentum, w)
        })
        .collect::<Result<_, _>>()?;
    let (records, residual_slope, norm_growth) = residual_decay(&mesh, &plane, lambda, &elements, workers)?;
    Ok(WeylRun { kind: WeylKind::Bloch, lambda, momentum: eta, records, residual_slope, norm_growth, decay: None })
}

/// Localized Floquet waves built from the strip eigenvector closest to
/// `lambda_hint` at `ζ`, or the lowest decaying one without a hint.
#[allow(clippy::too_many_arguments)]
pub fn floquet_harness(
    setup: &Setup,
    params: &HarnessParams,
    zeta: f64,
    truncation_t: usize,
    strip_count: usize,
    lambda_hint: Option<f64>,
    beta_min: f64,
    fit_residual_max: f64,
    cfg: &EigenConfig,
    workers: usize,
) -> Result<WeylRun, WeylError> {
    params.check()?;
    let strip = strip_spectrum(setup, zeta, truncation_t, params.n, strip_count, CapBc::Dirichlet, cfg)?;
    let h = setup.waveguide.half_width_h;
    let fits: Vec<Option<DecayFit>> =
        strip.profiles.iter().map(|p| fit_decay_rate(p, h, truncation_t).ok()).collect();
    let pick = match lambda_hint {
        Some(target) => (0..strip.eigenvalues.len())
            .min_by(|&a, &b| (strip.eigenvalues[a] - target).abs().total_cmp(&(strip.eigenvalues[b] - target).abs())),
        None => (0..strip.eigenvalues.len()).find(|&a| fits[a].is_some_and(|f| f.accepts(beta_min, fit_residual_max))),
    };
    let Some(a) = pick else {
        return Err(WeylError::NotTrapped(f64::NAN));
    };
    let lambda = strip.eigenvalues[a];
    let decay = match fits[a] {
        Some(f) if f.accepts(beta_min, fit_residual_max) => f,
        _ => return Err(WeylError::NotTrapped(lambda)),
    };
    let (mesh, plane) = plane_for(setup, params)?;
    let zeta_c = strip.pair.meta.momentum[0];
    let elements: Vec<WeylElement> = (params.j_min..=params.j_max)
        .map(|j| {
            let w = plateau(PlateauSpec { j, d: params.ramp })?;
            build_floquet_weyl_element(&mesh, &plane, &strip.pair, &strip.eigenvectors[a], zeta_c, w)
        })
        .collect::<Result<_, _>>()?;
    let (records, residual_slope, norm_growth) = residual_decay(&mesh, &plane, lambda, &elements, workers)?;
    Ok(WeylRun {
        kind: WeylKind::Floquet,
        lambda,
        momentum: [zeta, 0.0],
        records,
        residual_slope,
        norm_growth,
        decay: Some(decay),
    })
}
