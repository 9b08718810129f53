//! Lowest eigenpairs of a Hermitian pencil `K v = λ M v` with `M` positive
//! definite.
//!
//! Two backends share one contract. Small problems go through a dense
//! reduction (Cholesky of `M`, then a Hermitian eigensolve of
//! `L⁻¹ K L⁻ᴴ`). Large ones use block shift-invert Krylov iteration with
//! Rayleigh-Ritz extraction: the shift sits below the spectrum, so
//! `K - σM` is positive definite and factors as a banded `LDLᴴ`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::AssembledPair;
use crate::sparse::{dot, norm, BandedLdl, CsrMatrix, SparseError, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("requested {count} eigenpairs from a problem of dimension {dim}")]
    CountExceedsDim { count: usize, dim: usize },
    #[error("requested zero eigenpairs")]
    ZeroCount,
    #[error("mass matrix is not positive definite")]
    MassNotPositive,
    #[error("no convergence after {iterations} iterations (worst relative residual {worst:e})")]
    NotConverged { iterations: usize, worst: f64, residuals: Vec<f64> },
    #[error("vector length {found} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero vector has no residual")]
    ZeroVector,
    #[error(transparent)]
    Factorization(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Relative residual target, `‖Kv-λMv‖ / (‖Mv‖ max(1,|λ|))`.
    pub tol: f64,
    pub method: EigenMethod,
    /// Largest dimension handled by the dense backend under `Auto`.
    pub dense_max_dim: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { tol: 1e-8, method: EigenMethod::Auto, dense_max_dim: 2000, max_iterations: 60, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal, phase-fixed so the first largest entry is real positive.
    pub eigenvectors: Vec<Vec<C64>>,
    /// Relative residuals as defined by [`EigenConfig::tol`].
    pub residuals: Vec<f64>,
    pub method: EigenMethod,
    pub iterations: usize,
}

/// `‖Kv - λMv‖₂ / ‖Mv‖₂`; invariant under scaling of `v`.
pub fn residual_norm(pair: &AssembledPair, lambda: f64, v: &[C64]) -> Result<f64, EigenError> {
    residual_of(&pair.k, &pair.m, lambda, v)
}

fn residual_of(k: &CsrMatrix, m: &CsrMatrix, lambda: f64, v: &[C64]) -> Result<f64, EigenError> {
    if v.len() != k.dim {
        return Err(EigenError::DimensionMismatch { expected: k.dim, found: v.len() });
    }
    let kv = k.matvec(v)?;
    let mv = m.matvec(v)?;
    let mn = norm(&mv);
    if mn == 0.0 {
        return Err(EigenError::ZeroVector);
    }
    let r: Vec<C64> = kv.iter().zip(&mv).map(|(a, b)| a - b * lambda).collect();
    Ok(norm(&r) / mn)
}

fn relative(res: f64, lambda: f64) -> f64 {
    res / lambda.abs().max(1.0)
}

pub fn lowest_eigenpairs(pair: &AssembledPair, count: usize, cfg: &EigenConfig) -> Result<EigenResult, EigenError> {
    lowest_eigenpairs_of(&pair.k, &pair.m, count, cfg)
}

pub fn lowest_eigenpairs_of(k: &CsrMatrix, m: &CsrMatrix, count: usize, cfg: &EigenConfig) -> Result<EigenResult, EigenError> {
    let dim = k.dim;
    if count == 0 {
        return Err(EigenError::ZeroCount);
    }
    if count > dim {
        return Err(EigenError::CountExceedsDim { count, dim });
    }
    let dense = match cfg.method {
        EigenMethod::Dense => true,
        EigenMethod::ShiftInvert => false,
        EigenMethod::Auto => dim <= cfg.dense_max_dim,
    };
    let mut result = if dense { dense_solve(k, m, count)? } else { shift_invert(k, m, count, cfg)? };
    for v in &mut result.eigenvectors {
        fix_phase(v);
    }
    let worst = result.residuals.iter().cloned().fold(0.0, f64::max);
    if worst > cfg.tol {
        return Err(EigenError::NotConverged { iterations: result.iterations, worst, residuals: result.residuals });
    }
    Ok(result)
}

/// Rotates `v` so its first entry of maximal modulus is real and positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).expect("pivot exists");
    let rot = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= rot;
    }
}

fn to_nalgebra(a: &CsrMatrix) -> DMatrix<C64> {
    let n = a.dim;
    let mut d = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

fn hermitian_eigen(mut c: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = c.nrows();
    for i in 0..n {
        c[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (c[(i, j)] + c[(j, i)].conj()) * 0.5;
            c[(i, j)] = avg;
            c[(j, i)] = avg.conj();
        }
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_solve(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<EigenResult, EigenError> {
    let kd = to_nalgebra(k);
    let md = to_nalgebra(m);
    let chol = nalgebra::Cholesky::new(md).ok_or(EigenError::MassNotPositive)?;
    let l = chol.l();
    let y = l.solve_lower_triangular(&kd).ok_or(EigenError::MassNotPositive)?;
    let c = l.solve_lower_triangular(&y.adjoint()).ok_or(EigenError::MassNotPositive)?;
    let (values, vecs) = hermitian_eigen(c);
    let lt = l.adjoint();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenvectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for j in 0..count {
        let yj = vecs.column(j).into_owned();
        let x = lt.solve_upper_triangular(&yj).ok_or(EigenError::MassNotPositive)?;
        let v: Vec<C64> = x.iter().copied().collect();
        let res = residual_of(k, m, values[j], &v)?;
        residuals.push(relative(res, values[j]));
        eigenvalues.push(values[j]);
        eigenvectors.push(v);
    }
    Ok(EigenResult { eigenvalues, eigenvectors, residuals, method: EigenMethod::Dense, iterations: 1 })
}

/// M-orthonormal basis with cached products `M v`.
struct MBasis<'a> {
    m: &'a CsrMatrix,
    v: Vec<Vec<C64>>,
    mv: Vec<Vec<C64>>,
}

impl<'a> MBasis<'a> {
    fn new(m: &'a CsrMatrix) -> Self {
        MBasis { m, v: Vec::new(), mv: Vec::new() }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// Classical Gram-Schmidt, applied twice; drops nearly dependent input.
    fn push(&mut self, mut w: Vec<C64>) -> bool {
        let mut mw = self.m.matvec(&w).expect("basis dimension");
        let before = dot(&w, &mw).re.max(0.0).sqrt();
        if before == 0.0 {
            return false;
        }
        for _ in 0..2 {
            let coeffs: Vec<C64> = self.mv.iter().map(|mvi| dot(mvi, &w)).collect();
            for (vi, c) in self.v.iter().zip(&coeffs) {
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= c * vk;
                }
            }
        }
        self.m.matvec_into(&w, &mut mw);
        let after = dot(&w, &mw).re.max(0.0).sqrt();
        if after <= 1e-10 * before {
            return false;
        }
        let s = 1.0 / after;
        w.iter_mut().for_each(|z| *z *= s);
        mw.iter_mut().for_each(|z| *z *= s);
        self.v.push(w);
        self.mv.push(mw);
        true
    }
}

/// Iterations without halving the worst residual before the block grows.
const STALL_WINDOW: usize = 3;

/// Factor of `K - σM` with `σ` just below the spectrum, so the pencil stays
/// positive definite.
fn shifted_factor(k: &CsrMatrix, m: &CsrMatrix) -> Result<BandedLdl, EigenError> {
    let tr_k: f64 = k.diagonal().iter().sum();
    let tr_m: f64 = m.diagonal().iter().sum();
    if !(tr_m > 0.0) {
        return Err(EigenError::MassNotPositive);
    }
    let sigma = if tr_k > 0.0 { -1e-3 * tr_k / tr_m } else { -1.0 };
    Ok(BandedLdl::factor(&k.add_scaled(-sigma, m))?)
}

/// Subspace-iteration sweeps on a converged block followed by Rayleigh-Ritz.
/// Damps the high-frequency part of the eigenvector error, which matters
/// when small entries far from the peak are inspected. The result is kept
/// only if no residual grows past `tol`.
pub fn polish_eigenpairs(k: &CsrMatrix, m: &CsrMatrix, result: &mut EigenResult, steps: usize, tol: f64) -> Result<(), EigenError> {
    let count = result.eigenvectors.len();
    if count == 0 || steps == 0 {
        return Ok(());
    }
    let ldl = shifted_factor(k, m)?;
    let mut vectors = result.eigenvectors.clone();
    let mut values = result.eigenvalues.clone();
    for _ in 0..steps {
        let mut basis = MBasis::new(m);
        for v in &vectors {
            let mv = m.matvec(v)?;
            basis.push(ldl.solve(&mv));
        }
        if basis.len() < count {
            return Ok(());
        }
        let kv: Vec<Vec<C64>> = basis.v.iter().map(|v| k.matvec(v).expect("dimension")).collect();
        let h = DMatrix::from_fn(count, count, |i, j| dot(&basis.v[i], &kv[j]));
        let (theta, y) = hermitian_eigen(h);
        vectors = (0..count)
            .map(|j| {
                let mut out = vec![ZERO; k.dim];
                for (i, col) in basis.v.iter().enumerate() {
                    let c = y[(i, j)];
                    for (o, x) in out.iter_mut().zip(col) {
                        *o += c * x;
                    }
                }
                out
            })
            .collect();
        values = theta;
    }
    let mut residuals = Vec::with_capacity(count);
    for (v, &l) in vectors.iter_mut().zip(&values) {
        fix_phase(v);
        residuals.push(relative(residual_of(k, m, l, v)?, l));
    }
    if residuals.iter().all(|r| *r <= tol) {
        result.eigenvalues = values;
        result.eigenvectors = vectors;
        result.residuals = residuals;
    }
    Ok(())
}

fn shift_invert(k: &CsrMatrix, m: &CsrMatrix, count: usize, cfg: &EigenConfig) -> Result<EigenResult, EigenError> {
    let n = k.dim;
    let ldl = shifted_factor(k, m)?;
    let guard = (count / 2).max(8);
    let mut block = (count + guard).min(n);
    let depth = 4;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<Vec<C64>> = (0..block)
        .map(|_| (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();

    let mut last_residuals = vec![f64::INFINITY; count];
    let mut history: Vec<f64> = Vec::new();
    let mut last_growth = 0;
    for iteration in 1..=cfg.max_iterations {
        let mut basis = MBasis::new(m);
        let mut frontier = Vec::new();
        // Converged wanted vectors are kept but not expanded.
        for (j, w) in start.drain(..).enumerate() {
            let locked = j < last_residuals.len() && last_residuals[j] <= cfg.tol;
            if basis.push(w) && !locked {
                frontier.push(basis.len() - 1);
            }
        }
        for _ in 1..depth {
            if basis.len() >= n {
                break;
            }
            let mut next = Vec::new();
            for &idx in &frontier {
                let w = ldl.solve(&basis.mv[idx]);
                if basis.push(w) {
                    next.push(basis.len() - 1);
                }
                if basis.len() >= n {
                    break;
                }
            }
            frontier = next;
        }
        let size = basis.len();
        let kv: Vec<Vec<C64>> = basis.v.iter().map(|v| k.matvec(v).expect("dimension")).collect();
        let mut h = DMatrix::from_element(size, size, ZERO);
        for j in 0..size {
            for i in 0..=j {
                h[(i, j)] = dot(&basis.v[i], &kv[j]);
                h[(j, i)] = h[(i, j)].conj();
            }
        }
        let (theta, y) = hermitian_eigen(h);
        let keep = block.min(size);
        let combine = |cols: &[Vec<C64>], j: usize| -> Vec<C64> {
            let mut out = vec![ZERO; n];
            for (i, col) in cols.iter().enumerate() {
                let c = y[(i, j)];
                if c == ZERO {
                    continue;
                }
                for (o, x) in out.iter_mut().zip(col) {
                    *o += c * x;
                }
            }
            out
        };
        let ritz: Vec<Vec<C64>> = (0..keep).map(|j| combine(&basis.v, j)).collect();
        let mut residuals = Vec::with_capacity(count);
        for (j, x) in ritz.iter().enumerate().take(count.min(keep)) {
            let kx = combine(&kv, j);
            let mx = combine(&basis.mv, j);
            let r: Vec<C64> = kx.iter().zip(&mx).map(|(a, b)| a - b * theta[j]).collect();
            let _ = x;
            residuals.push(relative(norm(&r) / norm(&mx), theta[j]));
        }
        let converged = keep >= count && residuals.iter().all(|r| *r <= cfg.tol);
        if converged || iteration == cfg.max_iterations || size >= n {
            let mut eigenvectors = ritz;
            eigenvectors.truncate(count);
            return Ok(EigenResult {
                eigenvalues: theta[..count].to_vec(),
                eigenvectors,
                residuals,
                method: EigenMethod::ShiftInvert,
                iterations: iteration,
            });
        }
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        history.push(worst);
        last_residuals = residuals;
        start = ritz;
        // A cluster straddling the cut-off stalls the tail; widen the block.
        let stalled = history.len() > STALL_WINDOW
            && worst > 0.5 * history[history.len() - 1 - STALL_WINDOW]
            && iteration >= last_growth + STALL_WINDOW;
        if stalled && block < n {
            last_growth = iteration;
            block = (block + guard).min(n);
            while start.len() < block {
                start.push((0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
            }
        }
    }
    let worst = last_residuals.iter().cloned().fold(0.0, f64::max);
    Err(EigenError::NotConverged { iterations: cfg.max_iterations, worst, residuals: last_residuals })
}
