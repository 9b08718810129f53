//! Browser bindings: three JSON-in, JSON-out operations on the scalar
//! operator with unit coefficients.

use guidespec_core::assembly::{assemble_cell_pair, BlochMomentum};
use guidespec_core::eigensolve::{lowest_eigenpairs, EigenConfig};
use guidespec_core::geometry::{
    rasterize_cell, validate_cell, validate_waveguide, CapBc, Shape, UnitCellGeometry, WaveguideSpec, DEFAULT_MARGIN,
};
use guidespec_core::intervals::{Interval, IntervalSet};
use guidespec_core::operator::{scalar_symbol, CoefficientField, HoleBc};
use guidespec_core::spectra::{classify_strip_eigenvalues, fit_decay_rate, partial_bands, strip_spectrum, SampleClass, Setup};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use wasm_bindgen::prelude::*;

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRequest {
    pub holes: Vec<Shape>,
    #[serde(default = "default_margin")]
    pub margin_d: f64,
    pub hole_bc: HoleBc,
    pub n: usize,
    pub count: usize,
    /// Samples on each of the three legs of Γ-X-M-Γ.
    pub samples_per_leg: usize,
}

#[derive(Debug, Serialize)]
pub struct BandPath {
    /// Arc-length parameter of each sample, `0..3`.
    pub t: Vec<f64>,
    pub eta: Vec<[f64; 2]>,
    /// `bands[k][i]`.
    pub bands: Vec<Vec<f64>>,
    /// Gaps between the path extrema of consecutive bands.
    pub gaps: IntervalSet,
}

fn geometry(holes: &[Shape], margin_d: f64) -> UnitCellGeometry {
    UnitCellGeometry::new(holes.to_vec(), margin_d)
}

fn field(hole_bc: HoleBc) -> CoefficientField {
    CoefficientField::homogeneous(2, 1.0, 1.0, hole_bc)
}

fn path_point(t: f64) -> [f64; 2] {
    match t {
        t if t <= 1.0 => [PI * t, 0.0],
        t if t <= 2.0 => [PI, PI * (t - 1.0)],
        t => [PI * (3.0 - t), PI * (3.0 - t)],
    }
}

pub fn band_path_of(req: &CellRequest) -> Result<BandPath, String> {
    if req.samples_per_leg == 0 || req.samples_per_leg > 64 {
        return Err("samples_per_leg must lie in 1..=64".into());
    }
    if req.n > 24 {
        return Err("n above 24 is too slow for the browser".into());
    }
    let geom = geometry(&req.holes, req.margin_d);
    validate_cell(&geom).into_result().map_err(|e| e.to_string())?;
    let mesh = rasterize_cell(&geom, req.n).map_err(|e| e.to_string())?;
    let symbol = scalar_symbol();
    let field = field(req.hole_bc);
    let total = 3 * req.samples_per_leg;
    let t: Vec<f64> = (0..=total).map(|i| 3.0 * i as f64 / total as f64).collect();
    let eta: Vec<[f64; 2]> = t.iter().map(|&s| path_point(s)).collect();
    let mut bands = vec![Vec::with_capacity(eta.len()); req.count];
    for e in &eta {
        let pair = assemble_cell_pair(&mesh, &symbol, &field, BlochMomentum::new(e[0], e[1])).map_err(|e| e.to_string())?;
        let res = lowest_eigenpairs(&pair, req.count, &EigenConfig::default()).map_err(|e| e.to_string())?;
        for (k, v) in res.eigenvalues.into_iter().enumerate() {
            bands[k].push(v);
        }
    }
    let union = IntervalSet::from_intervals(bands.iter().map(|b| {
        let lo = b.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::closed(lo, hi)
    }));
    let ceiling = bands.last().map_or(0.0, |b| b.iter().cloned().fold(f64::INFINITY, f64::min));
    let gaps = union.complement_within(Interval::closed(0.0, ceiling));
    Ok(BandPath { t, eta, bands, gaps })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripRequest {
    pub holes: Vec<Shape>,
    #[serde(default = "default_margin")]
    pub margin_d: f64,
    pub hole_bc: HoleBc,
    pub waveguide: WaveguideSpec,
    pub zeta: f64,
    pub truncation_t: usize,
    pub n: usize,
    pub count: usize,
    pub m_line: usize,
    pub band_count: usize,
}

#[derive(Debug, Serialize)]
pub struct StripLevel {
    pub lambda: f64,
    pub class: SampleClass,
    /// Fitted decay rate of the row profile, when a fit was possible.
    pub beta: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct StripReport {
    pub zeta: f64,
    pub partial_bands: IntervalSet,
    pub ceiling: f64,
    pub levels: Vec<StripLevel>,
}

pub fn strip_levels_of(req: &StripRequest) -> Result<StripReport, String> {
    if req.n > 12 || req.truncation_t > 12 {
        return Err("n and truncation_t above 12 are too slow for the browser".into());
    }
    let setup = Setup {
        geometry: geometry(&req.holes, req.margin_d),
        waveguide: req.waveguide.clone(),
        symbol: scalar_symbol(),
        field: field(req.hole_bc),
    };
    validate_cell(&setup.geometry).into_result().map_err(|e| e.to_string())?;
    validate_waveguide(&setup.waveguide, req.margin_d).into_result().map_err(|e| e.to_string())?;
    let cfg = EigenConfig::default();
    let partial = partial_bands(&setup, req.n, req.zeta, req.m_line, req.band_count, &cfg, 1).map_err(|e| e.to_string())?;
    let strip = strip_spectrum(&setup, req.zeta, req.truncation_t, req.n, req.count, CapBc::Dirichlet, &cfg)
        .map_err(|e| e.to_string())?;
    let classes = classify_strip_eigenvalues(&strip.eigenvalues, &partial, 1e-3, partial.ceiling);
    let h = setup.waveguide.half_width_h;
    let levels = strip
        .eigenvalues
        .iter()
        .zip(&classes)
        .zip(&strip.profiles)
        .map(|((&lambda, &class), profile)| StripLevel {
            lambda,
            class,
            beta: fit_decay_rate(profile, h, req.truncation_t).ok().map(|f| f.beta),
        })
        .collect();
    Ok(StripReport { zeta: req.zeta, partial_bands: partial.union, ceiling: partial.ceiling, levels })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryRequest {
    pub holes: Vec<Shape>,
    #[serde(default = "default_margin")]
    pub margin_d: f64,
    #[serde(default)]
    pub waveguide: Option<WaveguideSpec>,
}

pub fn check_geometry_of(req: &GeometryRequest) -> Vec<String> {
    let geom = geometry(&req.holes, req.margin_d);
    let mut issues: Vec<String> = validate_cell(&geom).issues.iter().map(|i| format!("cell: {i}")).collect();
    if let Some(wg) = &req.waveguide {
        issues.extend(validate_waveguide(wg, req.margin_d).issues.iter().map(|i| format!("waveguide: {i}")));
    }
    issues
}

fn json_call<Req, Res>(input: &str, f: impl FnOnce(&Req) -> Result<Res, String>) -> Result<String, String>
where
    Req: for<'de> Deserialize<'de>,
    Res: Serialize,
{
    let req: Req = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let res = f(&req)?;
    serde_json::to_string(&res).map_err(|e| e.to_string())
}

pub fn band_path_json(input: &str) -> Result<String, String> {
    json_call(input, band_path_of)
}

pub fn strip_levels_json(input: &str) -> Result<String, String> {
    json_call(input, strip_levels_of)
}

pub fn check_geometry_json(input: &str) -> Result<String, String> {
    json_call(input, |r: &GeometryRequest| Ok(check_geometry_of(r)))
}

/// Band functions along Γ-X-M-Γ.
#[wasm_bindgen]
pub fn band_path(input: &str) -> Result<String, JsValue> {
    band_path_json(input).map_err(|e| JsValue::from_str(&e))
}

/// Strip eigenvalues at one ζ, classified against the partial bands.
#[wasm_bindgen]
pub fn strip_levels(input: &str) -> Result<String, JsValue> {
    strip_levels_json(input).map_err(|e| JsValue::from_str(&e))
}

/// Geometry issues as a JSON list of messages.
#[wasm_bindgen]
pub fn check_geometry(input: &str) -> Result<String, JsValue> {
    check_geometry_json(input).map_err(|e| JsValue::from_str(&e))
}
