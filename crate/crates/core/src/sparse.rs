//! Compressed-row complex matrices and a banded Hermitian factorization.

use num_complex::Complex64;
use std::collections::VecDeque;
use thiserror::Error;

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("vector length {found} does not match matrix dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
}

/// Upper-triangle accumulator producing an exactly Hermitian CSR matrix.
#[derive(Debug, Clone)]
pub struct HermitianBuilder {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl HermitianBuilder {
    pub fn new(dim: usize) -> Self {
        HermitianBuilder { dim, entries: Vec::new() }
    }

    /// Adds `v` at `(i, j)` and, implicitly, `conj(v)` at `(j, i)`. Pairs
    /// with `i > j` are stored conjugated in the upper triangle; diagonal
    /// pairs keep their real part at finalization.
    pub fn add_pair(&mut self, i: usize, j: usize, v: C64) {
        if i < j {
            self.entries.push((i, j, v));
        } else if i > j {
            self.entries.push((j, i, v.conj()));
        } else {
            self.entries.push((i, i, C64::new(v.re, 0.0)));
        }
    }

    /// Sums duplicates in insertion order and mirrors the upper triangle.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut upper: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for (i, j, v) in self.entries {
            match upper.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => upper.push((i, j, v)),
            }
        }
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for &(i, j, v) in &upper {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v.conj()));
            }
        }
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, v) in r {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { dim: self.dim, row_ptr, col_idx, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut b = HermitianBuilder::new(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            b.add_pair(i, i, C64::new(d, 0.0));
        }
        b.build()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|e| e.0 == j).map(|e| e.1).unwrap_or(ZERO)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>, SparseError> {
        if x.len() != self.dim {
            return Err(SparseError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut y = vec![ZERO; self.dim];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// Exact check `A = Aᴴ`, entry by entry.
    pub fn is_hermitian(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v.conj()))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn conj(&self) -> CsrMatrix {
        CsrMatrix {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut d = vec![ZERO; self.dim * self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                d[i * self.dim + j] = v;
            }
        }
        d
    }

    /// `A + s B` on the union pattern.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.dim {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                let next = match (a.peek(), b.peek()) {
                    (None, None) => break,
                    (Some(&(ca, va)), None) => {
                        a.next();
                        (ca, va)
                    }
                    (None, Some(&(cb, vb))) => {
                        b.next();
                        (cb, vb * s)
                    }
                    (Some(&(ca, va)), Some(&(cb, vb))) => {
                        if ca == cb {
                            a.next();
                            b.next();
                            (ca, va + vb * s)
                        } else if ca < cb {
                            a.next();
                            (ca, va)
                        } else {
                            b.next();
                            (cb, vb * s)
                        }
                    }
                };
                col_idx.push(next.0);
                values.push(next.1);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { dim: self.dim, row_ptr, col_idx, values }
    }

    /// Half bandwidth under the permutation `perm[new] = old`.
    pub fn bandwidth_under(&self, perm: &[usize]) -> usize {
        let mut inv = vec![0; self.dim];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        (0..self.dim)
            .flat_map(|i| self.row(i).map(move |(j, _)| (i, j)))
            .map(|(i, j)| inv[i].abs_diff(inv[j]))
            .max()
            .unwrap_or(0)
    }
}

/// Reverse Cuthill-McKee ordering, `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node");
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Banded `LDLᴴ` factorization of a Hermitian positive definite matrix in a
/// bandwidth-reducing ordering. No pivoting: the caller guarantees
/// definiteness (shift below the spectrum).
#[derive(Debug, Clone)]
pub struct BandedLdl {
    dim: usize,
    band: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// Row `i` stores `L[i, i-band..i]` (unit diagonal implicit).
    lower: Vec<C64>,
    diag: Vec<f64>,
}

impl BandedLdl {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SparseError> {
        let n = a.dim;
        let natural: Vec<usize> = (0..n).collect();
        let rcm = reverse_cuthill_mckee(a);
        let (perm, band) = {
            let bn = a.bandwidth_under(&natural);
            let br = a.bandwidth_under(&rcm);
            if br < bn { (rcm, br) } else { (natural, bn) }
        };
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // Lower band of the permuted matrix: row i, offsets 0..band (col i-band+k).
        let w = band;
        let mut lower = vec![ZERO; n * w.max(1)];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j < i {
                    lower[i * w + (j + w - i)] = v;
                } else if j == i {
                    diag[i] = v.re;
                }
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for j in 0..n {
            // finalize column j: d_j already reduced; compute L[i,j] for i in j+1..=j+w
            let dj = diag[j];
            if !(dj > 1e-14 * scale) {
                return Err(SparseError::NotPositiveDefinite { row: perm[j], pivot: dj });
            }
            let imax = (j + w).min(n - 1);
            for i in (j + 1)..=imax {
                let lij = lower[i * w + (j + w - i)] / dj;
                lower[i * w + (j + w - i)] = lij;
            }
            // rank-1 update of the trailing band: A[i,k] -= L[i,j] d_j conj(L[k,j]) for k <= i
            for i in (j + 1)..=imax {
                let lij = lower[i * w + (j + w - i)];
                if lij == ZERO {
                    continue;
                }
                diag[i] -= dj * lij.norm_sqr();
                let s = lij * dj;
                for k in (j + 1)..i {
                    let lkj = lower[k * w + (j + w - k)];
                    lower[i * w + (k + w - i)] -= s * lkj.conj();
                }
            }
        }
        Ok(BandedLdl { dim: n, band, perm, lower, diag })
    }

    pub fn bandwidth(&self) -> usize {
        self.band
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim;
        let w = self.band;
        let mut y: Vec<C64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let j0 = i.saturating_sub(w);
            let mut acc = y[i];
            for j in j0..i {
                acc -= self.lower[i * w + (j + w - i)] * y[j];
            }
            y[i] = acc;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= *d;
        }
        for i in (0..n).rev() {
            let kmax = (i + w).min(n - 1);
            let mut acc = y[i];
            for k in (i + 1)..=kmax {
                acc -= self.lower[k * w + (i + w - k)].conj() * y[k];
            }
            y[i] = acc;
        }
        let mut x = vec![ZERO; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// `xᴴ y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    // Four independent accumulators keep the loop from serializing on one sum.
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            re[l] += a[l].re * b[l].re + a[l].im * b[l].im;
            im[l] += a[l].re * b[l].im - a[l].im * b[l].re;
        }
    }
    let mut out = C64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]));
    for (a, b) in xr.iter().zip(yr) {
        out += a.conj() * b;
    }
    out
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hpd(n: usize, links: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = HermitianBuilder::new(n);
        for i in 0..n {
            b.add_pair(i, i, C64::new(4.0 + links as f64 * 2.0, 0.0));
            for _ in 0..links {
                let j = (i + rng.random_range(1..6)) % n;
                b.add_pair(i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        b.build()
    }

    #[test]
    fn builder_is_exactly_hermitian() {
        let a = random_hpd(40, 3, 1);
        assert!(a.is_hermitian());
        assert!(a.diagonal().iter().all(|d| *d > 0.0));
    }

    #[test]
    fn ldl_solves() {
        let a = random_hpd(60, 3, 7);
        let f = BandedLdl::factor(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<C64> = (0..60).map(|_| C64::new(rng.random(), rng.random())).collect();
        let b = a.matvec(&x).unwrap();
        let y = f.solve(&b);
        let err: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn ldl_rejects_indefinite() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0, 2.0]);
        assert!(matches!(BandedLdl::factor(&a), Err(SparseError::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn matvec_checks_dimension() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0]);
        assert!(a.matvec(&[C64::new(1.0, 0.0)]).is_err());
        let s = a.add_scaled(-1.0, &a);
        assert!(s.values.iter().all(|v| *v == ZERO));
    }
}
