//! Strict JSON run configuration.

use std::path::Path;

use guidespec_core::eigensolve::{EigenConfig, EigenMethod};
use guidespec_core::geometry::{
    validate_cell, validate_waveguide, Point, Shape, UnitCellGeometry, WaveguideSpec, MIN_SUBDIVISIONS,
};
use guidespec_core::operator::{
    sample_coefficients, BackgroundField, CoefficientField, CoefficientOverride, HermitianMatrix, HoleBc,
    OperatorSymbol, PatchTerm, Region, SymbolKind, TransitionCell, WaveguidePatch,
};
use guidespec_core::sparse::C64;
use guidespec_core::spectra::{Setup, SweepParams, Tolerances};
use guidespec_core::weyl::HarnessParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub operator: OperatorConfig,
    pub discretization: Discretization,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub eigensolver: SolverConfig,
    #[serde(default)]
    pub weyl: Option<WeylConfig>,
    #[serde(default)]
    pub outputs: Outputs,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub cell: UnitCellGeometry,
    /// Absent for a purely periodic run.
    #[serde(default)]
    pub waveguide: Option<WaveguideSpec>,
}

/// A coefficient matrix as written in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    ScaledIdentity(f64),
    Real(Vec<Vec<f64>>),
    Complex { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl MatrixSpec {
    pub fn build(&self, dim: usize) -> Result<HermitianMatrix, String> {
        let (re, im) = match self {
            MatrixSpec::ScaledIdentity(s) => return Ok(HermitianMatrix::scaled_identity(dim, *s)),
            MatrixSpec::Real(re) => (re, None),
            MatrixSpec::Complex { re, im } => (re, Some(im)),
        };
        let square = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
        if !square(re) || im.is_some_and(|im| !square(im)) {
            return Err(format!("matrix must be {dim}x{dim}"));
        }
        let data: Vec<C64> = (0..dim * dim)
            .map(|k| C64::new(re[k / dim][k % dim], im.map_or(0.0, |im| im[k / dim][k % dim])))
            .collect();
        let (m, dev) = HermitianMatrix::symmetrized(dim, data).map_err(|e| e.to_string())?;
        if dev != 0.0 {
            return Err(format!("matrix is not Hermitian (deviation {dev:e})"));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideConfig {
    pub shape: Shape,
    #[serde(default)]
    pub a: Option<MatrixSpec>,
    #[serde(default)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub shape: Shape,
    pub delta: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub a1: usize,
    pub terms: Vec<PatchConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguidePatchConfig {
    #[serde(default)]
    pub periodic: Vec<PatchConfig>,
    #[serde(default)]
    pub transition: Vec<TransitionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub symbol: SymbolKind,
    pub a: MatrixSpec,
    pub rho: f64,
    #[serde(default)]
    pub overrides: Vec<OverrideConfig>,
    #[serde(default)]
    pub waveguide_patch: WaveguidePatchConfig,
    pub hole_bc: HoleBc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n: usize,
    pub m_grid: usize,
    pub band_count: usize,
    pub m_line: usize,
    pub zeta_points: usize,
    pub t_list: Vec<usize>,
    pub strip_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: EigenMethod,
    pub dense_max_dim: usize,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = EigenConfig::default();
        SolverConfig { method: d.method, dense_max_dim: d.dense_max_dim, max_iterations: d.max_iterations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochTarget {
    pub eta: Point,
    /// Zero-based band index.
    pub band: usize,
    #[serde(default)]
    pub detune: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetTarget {
    pub zeta: f64,
    pub truncation_t: usize,
    pub strip_count: usize,
    #[serde(default)]
    pub lambda_hint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylConfig {
    /// Subdivisions of the plane mesh; usually coarser than the spectral runs.
    pub n: usize,
    pub j_min: u32,
    pub j_max: u32,
    pub ramp: f64,
    #[serde(default = "default_slope_window")]
    pub slope_window: [f64; 2],
    #[serde(default)]
    pub bloch: Option<BlochTarget>,
    #[serde(default)]
    pub floquet: Option<FloquetTarget>,
}

fn default_slope_window() -> [f64; 2] {
    [-0.8, -0.2]
}

impl WeylConfig {
    pub fn harness(&self) -> HarnessParams {
        HarnessParams { n: self.n, j_min: self.j_min, j_max: self.j_max, ramp: self.ramp }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub formats: Vec<Format>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { formats: vec![Format::Json, Format::Csv, Format::Svg] }
    }
}

impl Outputs {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    parse(&text).map_err(|source| ConfigError::Parse { path: path.display().to_string(), source })
}

pub fn parse(text: &str) -> Result<RunConfig, serde_json::Error> {
    serde_json::from_str(text)
}

/// One failed precondition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub key: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Validation {
    pub issues: Vec<Issue>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue { key: key.into(), message: message.into() });
    }
}

impl RunConfig {
    pub fn symbol(&self) -> OperatorSymbol {
        OperatorSymbol::of_kind(self.operator.symbol)
    }

    pub fn field(&self) -> Result<CoefficientField, String> {
        let dim = self.symbol().m;
        let op = &self.operator;
        let overrides = op
            .overrides
            .iter()
            .map(|o| {
                Ok(CoefficientOverride {
                    shape: o.shape.clone(),
                    a: o.a.as_ref().map(|a| a.build(dim)).transpose()?,
                    rho: o.rho,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let terms = |list: &[PatchConfig]| {
            list.iter()
                .map(|t| Ok(PatchTerm { shape: t.shape.clone(), delta: t.delta.build(dim)? }))
                .collect::<Result<Vec<_>, String>>()
        };
        let waveguide = WaveguidePatch {
            periodic: terms(&op.waveguide_patch.periodic)?,
            transition: op
                .waveguide_patch
                .transition
                .iter()
                .map(|t| Ok(TransitionCell { a1: t.a1, terms: terms(&t.terms)? }))
                .collect::<Result<Vec<_>, String>>()?,
        };
        Ok(CoefficientField {
            background: BackgroundField { a: op.a.build(dim)?, rho: op.rho, overrides },
            waveguide,
            hole_bc: op.hole_bc,
        })
    }

    pub fn has_waveguide(&self) -> bool {
        self.geometry.waveguide.is_some()
    }

    /// Operator setup; a run without waveguide gets a row that repeats the
    /// background.
    pub fn setup(&self) -> Result<Setup, String> {
        let waveguide = match &self.geometry.waveguide {
            Some(w) => w.clone(),
            None => WaveguideSpec::unperturbed(&self.geometry.cell, 1),
        };
        Ok(Setup { geometry: self.geometry.cell.clone(), waveguide, symbol: self.symbol(), field: self.field()? })
    }

    pub fn eigen(&self) -> EigenConfig {
        EigenConfig {
            tol: self.tolerances.eig_tol,
            method: self.eigensolver.method,
            dense_max_dim: self.eigensolver.dense_max_dim,
            max_iterations: self.eigensolver.max_iterations,
            seed: self.seed,
        }
    }

    pub fn sweep(&self) -> SweepParams {
        let d = &self.discretization;
        SweepParams {
            n: d.n,
            zeta_points: d.zeta_points,
            t_list: d.t_list.clone(),
            strip_count: d.strip_count,
            m_line: d.m_line,
            band_count: d.band_count,
        }
    }

    /// Every precondition that can be checked without a solve.
    pub fn validate(&self) -> Validation {
        let mut v = Validation::default();
        for issue in validate_cell(&self.geometry.cell).issues {
            v.push("geometry.cell", issue.to_string());
        }
        if let Some(wg) = &self.geometry.waveguide {
            for issue in validate_waveguide(wg, self.geometry.cell.margin_d).issues {
                v.push("geometry.waveguide", issue.to_string());
            }
        }
        self.validate_discretization(&mut v);
        self.validate_tolerances(&mut v);
        match self.field() {
            Err(e) => v.push("operator", e),
            Ok(field) if v.is_valid() => self.validate_coefficients(&field, &mut v),
            Ok(_) => {}
        }
        if let Some(w) = &self.weyl {
            self.validate_weyl(w, &mut v);
        }
        if self.outputs.formats.is_empty() {
            v.push("outputs.formats", "at least one format is required");
        }
        v
    }

    fn validate_discretization(&self, v: &mut Validation) {
        let d = &self.discretization;
        if d.n < MIN_SUBDIVISIONS {
            v.push("discretization.n", format!("must be at least {MIN_SUBDIVISIONS}"));
        }
        if d.m_grid != 1 && (d.m_grid < 5 || d.m_grid % 2 == 0) {
            v.push("discretization.m_grid", "must be 1, or odd and at least 5");
        }
        if d.band_count == 0 {
            v.push("discretization.band_count", "must be positive");
        }
        if d.m_line == 0 {
            v.push("discretization.m_line", "must be positive");
        }
        if d.strip_count == 0 {
            v.push("discretization.strip_count", "must be positive");
        }
        if let Some(wg) = &self.geometry.waveguide {
            if d.zeta_points < 9 {
                v.push("discretization.zeta_points", "must be at least 9");
            }
            let mut ts = d.t_list.clone();
            ts.sort_unstable();
            ts.dedup();
            if ts.len() < 2 {
                v.push("discretization.t_list", "needs at least two distinct truncations");
            }
            let h = wg.half_width_h;
            if ts.first().is_some_and(|&t| t < h + 2) {
                v.push("discretization.t_list", format!("every truncation must be at least h + 2 = {}", h + 2));
            }
            if ts.last().is_some_and(|&t| t < h + 4) {
                v.push("discretization.t_list", format!("largest truncation must be at least h + 4 = {}", h + 4));
            }
        }
    }

    fn validate_tolerances(&self, v: &mut Validation) {
        let t = &self.tolerances;
        for (key, value) in [
            ("eig_tol", t.eig_tol),
            ("tol_band", t.tol_band),
            ("tol_stab", t.tol_stab),
            ("fit_residual_max", t.fit_residual_max),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                v.push(format!("tolerances.{key}"), "must be positive and finite");
            }
        }
        if !(t.beta_min >= 0.0) {
            v.push("tolerances.beta_min", "must be non-negative");
        }
        if !(t.overlap_min > 0.0 && t.overlap_min <= 1.0) {
            v.push("tolerances.overlap_min", "must lie in (0, 1]");
        }
        if !(t.overlap_ambiguity >= 0.0 && t.overlap_ambiguity < 1.0) {
            v.push("tolerances.overlap_ambiguity", "must lie in [0, 1)");
        }
    }

    /// Samples the coefficients at every element centroid that any solve
    /// will visit.
    fn validate_coefficients(&self, field: &CoefficientField, v: &mut Validation) {
        let n = self.discretization.n.max(MIN_SUBDIVISIONS);
        let step = 1.0 / n as f64;
        let centroids = |rows: std::ops::Range<i64>| {
            rows.flat_map(move |a2| {
                (0..n * n).map(move |k| [((k % n) as f64 + 0.5) * step, a2 as f64 + ((k / n) as f64 + 0.5) * step])
            })
        };
        let mut seen = std::collections::BTreeSet::new();
        let mut report = |region: &str, p: Point, e: String| {
            if seen.insert(region.to_string()) {
                v.push("operator", format!("{region} at ({:.3}, {:.3}): {e}", p[0], p[1]));
            }
        };
        for p in centroids(0..1) {
            if let Err(e) = sample_coefficients(field, Region::Background, p) {
                report("background", p, e.to_string());
            }
        }
        if let Some(wg) = &self.geometry.waveguide {
            let h = wg.half_width_h as i64;
            for a1 in 0..=wg.transition_r as i64 {
                for p in centroids(-h..h) {
                    if let Err(e) = sample_coefficients(field, Region::Waveguide { a1 }, p) {
                        report(&format!("waveguide cell {a1}"), p, e.to_string());
                    }
                }
            }
        }
    }

    fn validate_weyl(&self, w: &WeylConfig, v: &mut Validation) {
        if w.n < MIN_SUBDIVISIONS {
            v.push("weyl.n", format!("must be at least {MIN_SUBDIVISIONS}"));
        }
        if w.j_max < w.j_min + 2 {
            v.push("weyl.j_max", "needs at least three scales");
        }
        if w.j_max > 12 {
            v.push("weyl.j_max", "plane mesh would exceed 2^13 cells per side");
        }
        if !(w.ramp > 0.0) || 2.0 * w.ramp >= (1u64 << w.j_min.min(40)) as f64 {
            v.push("weyl.ramp", "must be positive and below half the smallest box side");
        }
        if !(w.slope_window[0] < w.slope_window[1]) {
            v.push("weyl.slope_window", "lower bound must be below the upper bound");
        }
        if w.bloch.is_none() && w.floquet.is_none() {
            v.push("weyl", "needs a bloch or floquet target");
        }
        if let Some(f) = &w.floquet {
            match &self.geometry.waveguide {
                None => v.push("weyl.floquet", "requires a waveguide"),
                Some(wg) if f.truncation_t < wg.half_width_h + 4 => {
                    v.push("weyl.floquet.truncation_t", format!("must be at least h + 4 = {}", wg.half_width_h + 4))
                }
                Some(wg) if (1u64 << w.j_min.min(40)) as f64 <= wg.transition_r as f64 => {
                    v.push("weyl.j_min", "smallest box must lie beyond the transition cells")
                }
                _ => {}
            }
            if f.strip_count == 0 {
                v.push("weyl.floquet.strip_count", "must be positive");
            }
        }
        if let (Some(_), Some(wg)) = (&w.bloch, &self.geometry.waveguide) {
            if ((1u64 << w.j_min.min(40)) as f64) < wg.half_width_h as f64 {
                v.push("weyl.j_min", "smallest box touches the waveguide");
            }
        }
    }
}
