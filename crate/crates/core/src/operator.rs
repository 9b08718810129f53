//! First-order symbol `D(∇)`, coefficient matrices and density.
//!
//! The sesquilinear form is `a(u, v) = ∫ (A D(∇)u) · conj(D(∇)v)` with mass
//! `∫ ρ u · conj(v)`. Coefficients are piecewise constant: a default value
//! overridden on listed shapes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("coefficient matrix is not positive definite at ({}, {})", .point[0], .point[1])]
    NotPositiveDefinite { point: Point },
    #[error("density {rho} is not positive at ({}, {})", .point[0], .point[1])]
    NonPositiveDensity { rho: f64, point: Point },
    #[error("matrix has dimension {found}, operator needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian")]
    NotHermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Scalar,
    Elasticity,
}

/// `D(ξ)` as an `m x n` array of linear forms `c1 ξ1 + c2 ξ2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSymbol {
    pub kind: SymbolKind,
    /// Number of solution components.
    pub n: usize,
    /// Number of form components.
    pub m: usize,
    /// Row-major `m x n` coefficient pairs `[c1, c2]`.
    pub forms: Vec<[Complex64; 2]>,
}

impl OperatorSymbol {
    pub fn of_kind(kind: SymbolKind) -> Self {
        match kind {
            SymbolKind::Scalar => scalar_symbol(),
            SymbolKind::Elasticity => elasticity_symbol(),
        }
    }

    /// Linear form in row `r`, column `c`.
    pub fn form(&self, r: usize, c: usize) -> [Complex64; 2] {
        self.forms[r * self.n + c]
    }

    /// Evaluates `D(ξ)` as a row-major `m x n` matrix.
    pub fn eval(&self, xi: [f64; 2]) -> Vec<Complex64> {
        self.forms.iter().map(|f| f[0] * xi[0] + f[1] * xi[1]).collect()
    }

    /// `D(ξ) u` for a constant vector `u`.
    pub fn apply(&self, xi: [f64; 2], u: &[Complex64]) -> Vec<Complex64> {
        let d = self.eval(xi);
        (0..self.m)
            .map(|r| (0..self.n).map(|c| d[r * self.n + c] * u[c]).sum())
            .collect()
    }

    /// `D(∇)u` for an affine field `u(x) = u0 + G x`, with `grad[c] = ∇u_c`.
    pub fn apply_gradient(&self, grad: &[[f64; 2]]) -> Vec<Complex64> {
        (0..self.m)
            .map(|r| {
                (0..self.n)
                    .map(|c| {
                        let f = self.form(r, c);
                        f[0] * grad[c][0] + f[1] * grad[c][1]
                    })
                    .sum()
            })
            .collect()
    }
}

/// The gradient symbol `D(ξ) = (ξ1, ξ2)ᵀ`.
pub fn scalar_symbol() -> OperatorSymbol {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    OperatorSymbol {
        kind: SymbolKind::Scalar,
        n: 1,
        m: 2,
        forms: vec![[one, zero], [zero, one]],
    }
}

/// Plane strain in Voigt-Mandel form: rows `ε11`, `ε22`, `√2 ε12`.
pub fn elasticity_symbol() -> OperatorSymbol {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    OperatorSymbol {
        kind: SymbolKind::Elasticity,
        n: 2,
        m: 3,
        forms: vec![
            [one, zero],
            [zero, zero],
            [zero, zero],
            [zero, one],
            [zero, s],
            [s, zero],
        ],
    }
}

/// Small dense Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(s, 0.0);
        }
        HermitianMatrix { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    /// Accepts a row-major matrix, returning `(A + A*)/2` together with the
    /// largest entrywise deviation from Hermiticity.
    pub fn symmetrized(dim: usize, data: Vec<Complex64>) -> Result<(Self, f64), OperatorError> {
        if data.len() != dim * dim {
            return Err(OperatorError::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut dev: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let a = data[i * dim + j];
                let b = data[j * dim + i].conj();
                dev = dev.max((a - b).norm());
                out[i * dim + j] = (a + b) * 0.5;
            }
        }
        Ok((HermitianMatrix { dim, data: out }, dev))
    }

    pub fn from_real_symmetric(dim: usize, rows: &[f64]) -> Self {
        let data = rows.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::symmetrized(dim, data).expect("square input").0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.get(i, j) == self.get(j, i).conj()))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Cholesky test with a relative pivot floor.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.dim;
        let scale = (0..n).map(|i| self.get(i, i).re.abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return false;
        }
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d <= 1e-12 * scale {
                return false;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        true
    }

    /// `xᴴ A y`.
    pub fn form(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..self.dim {
                row += self.get(i, j) * y[j];
            }
            acc += x[i].conj() * row;
        }
        acc
    }
}

/// Replaces the coefficient on `shape`; later overrides win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientOverride {
    pub shape: Shape,
    pub a: Option<HermitianMatrix>,
    pub rho: Option<f64>,
}

/// Adds `delta` to the background matrix on `shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchTerm {
    pub shape: Shape,
    pub delta: HermitianMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundField {
    pub a: HermitianMatrix,
    pub rho: f64,
    pub overrides: Vec<CoefficientOverride>,
}

/// The waveguide perturbation `A¹` on the row cell `(0,1) x (-h,h)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveguidePatch {
    /// Terms of the periodic regime `x1 > R`.
    pub periodic: Vec<PatchTerm>,
    /// Terms for specific leading cells `a1 < R`, replacing `periodic`.
    pub transition: Vec<TransitionCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCell {
    pub a1: usize,
    pub terms: Vec<PatchTerm>,
}

impl WaveguidePatch {
    pub fn terms_for_cell(&self, a1: i64) -> &[PatchTerm] {
        self.transition
            .iter()
            .find(|t| t.a1 as i64 == a1)
            .map(|t| t.terms.as_slice())
            .unwrap_or(&self.periodic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleBc {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub background: BackgroundField,
    pub waveguide: WaveguidePatch,
    pub hole_bc: HoleBc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Background,
    /// Waveguide row cell with index `a1` along the row.
    Waveguide { a1: i64 },
}

impl CoefficientField {
    /// Homogeneous field `A = s I`, `ρ = rho`, no waveguide patch.
    pub fn homogeneous(m: usize, s: f64, rho: f64, hole_bc: HoleBc) -> Self {
        CoefficientField {
            background: BackgroundField { a: HermitianMatrix::scaled_identity(m, s), rho, overrides: Vec::new() },
            waveguide: WaveguidePatch::default(),
            hole_bc,
        }
    }

    pub fn form_dim(&self) -> usize {
        self.background.a.dim
    }

    /// Background value at a point given in cell coordinates, reduced mod 1.
    fn background_at(&self, p: Point) -> (HermitianMatrix, f64) {
        let local = [p[0] - p[0].floor(), p[1] - p[1].floor()];
        let mut a = &self.background.a;
        let mut rho = self.background.rho;
        for o in &self.background.overrides {
            if o.shape.contains(local) {
                if let Some(m) = &o.a {
                    a = m;
                }
                if let Some(r) = o.rho {
                    rho = r;
                }
            }
        }
        (a.clone(), rho)
    }

    /// Unchecked sample; `p` uses absolute `x2` and `x1` local to the row cell
    /// in the waveguide region.
    pub fn raw_sample(&self, region: Region, p: Point) -> (HermitianMatrix, f64) {
        let (mut a, rho) = self.background_at(p);
        if let Region::Waveguide { a1 } = region {
            let local = [p[0] - p[0].floor(), p[1]];
            for t in self.waveguide.terms_for_cell(a1) {
                if t.shape.contains(local) {
                    a = a.add(&t.delta);
                }
            }
        }
        (a, rho)
    }

    pub fn is_real(&self) -> bool {
        self.background.a.is_real()
            && self.background.overrides.iter().all(|o| o.a.as_ref().is_none_or(|a| a.is_real()))
            && self
                .waveguide
                .periodic
                .iter()
                .chain(self.waveguide.transition.iter().flat_map(|t| t.terms.iter()))
                .all(|t| t.delta.is_real())
    }
}

/// Samples `(A, ρ)` with the positivity checks.
pub fn sample_coefficients(
    field: &CoefficientField,
    region: Region,
    point: Point,
) -> Result<(HermitianMatrix, f64), OperatorError> {
    let (a, rho) = field.raw_sample(region, point);
    if !a.is_positive_definite() {
        return Err(OperatorError::NotPositiveDefinite { point });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(OperatorError::NonPositiveDensity { rho, point });
    }
    Ok((a, rho))
}
