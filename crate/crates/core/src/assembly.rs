//! Bilinear quadrilateral (Q1) assembly of the stiffness/mass pair `(K, M)`
//! for the quasi-periodic cell, the ζ-strip and the truncated plane.
//!
//! Quasi-periodicity is imposed by merging wrap-around nodes onto their
//! partners with a phase factor, `u(x + e_p) = e^{iθ_p} u(x)`. This is the
//! gauge `u = e^{iη·x} U` of the shifted-symbol formulation and yields the
//! same spectrum.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

use crate::geometry::{CapBc, CellMesh, ElementGrid, PlaneMesh, Point, StripMesh};
use crate::operator::{sample_coefficients, CoefficientField, HermitianMatrix, HoleBc, OperatorError, OperatorSymbol, Region};
use crate::sparse::{CsrMatrix, HermitianBuilder, SparseError, C64};

/// Angles within this distance of `2π` reduce to `0`.
pub const ANGLE_SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("mesh has no active elements")]
    EmptyActiveSet,
    #[error("all degrees of freedom were eliminated")]
    NoDofs,
    #[error("symbol has {symbol} form components but the coefficient matrix is {field}x{field}")]
    FormDimension { symbol: usize, field: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Angles are quantized to multiples of this step after reduction, so
/// `θ` and `θ + 2πk` give bit-identical phases.
const ANGLE_QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

/// Reduces an angle into `[0, 2π)`, snapping values just below `2π` to `0`.
pub fn canonical_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = x.rem_euclid(two_pi);
    if two_pi - r < ANGLE_SNAP {
        0.0
    } else {
        (r / ANGLE_QUANTUM).round() * ANGLE_QUANTUM
    }
}

/// Quasi-momentum `η ∈ [0, 2π)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochMomentum([f64; 2]);

impl BlochMomentum {
    pub fn new(eta1: f64, eta2: f64) -> Self {
        BlochMomentum([canonical_angle(eta1), canonical_angle(eta2)])
    }

    pub fn components(&self) -> [f64; 2] {
        self.0
    }

    /// `-η` reduced.
    pub fn negated(&self) -> Self {
        BlochMomentum::new(-self.0[0], -self.0[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Cell,
    Strip,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub domain: DomainKind,
    /// `η` for the cell, `(ζ, 0)` for the strip, zero for the plane.
    pub momentum: [f64; 2],
    pub cap_bc: Option<CapBc>,
}

/// Node-to-dof bookkeeping on a structured element grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub periodic: [bool; 2],
    pub ncomp: usize,
    /// Canonical node → first dof index.
    node_dof: Vec<Option<usize>>,
    /// Dof block → canonical node.
    dof_node: Vec<usize>,
}

impl DofMap {
    /// Canonical node counts along each axis.
    pub fn canonical_extent(&self) -> (usize, usize) {
        (
            if self.periodic[0] { self.nx } else { self.nx + 1 },
            if self.periodic[1] { self.ny } else { self.ny + 1 },
        )
    }

    pub fn dim(&self) -> usize {
        self.dof_node.len() * self.ncomp
    }

    pub fn node_count(&self) -> usize {
        self.dof_node.len()
    }

    /// Dof of component 0 at canonical node `(cx, cy)`.
    pub fn dof_at(&self, cx: usize, cy: usize) -> Option<usize> {
        let (ex, _) = self.canonical_extent();
        self.node_dof[cy * ex + cx]
    }

    /// Canonical grid coordinates of the node carrying dof block `b`.
    pub fn node_of_block(&self, b: usize) -> (usize, usize) {
        let (ex, _) = self.canonical_extent();
        let c = self.dof_node[b];
        (c % ex, c / ex)
    }

    pub fn position_of_block(&self, b: usize) -> Point {
        let (cx, cy) = self.node_of_block(b);
        let h = 1.0 / self.n as f64;
        [self.origin[0] + cx as f64 * h, self.origin[1] + cy as f64 * h]
    }
}

#[derive(Debug, Clone)]
pub struct AssembledPair {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub dofs: DofMap,
    pub meta: PairMeta,
}

impl AssembledPair {
    pub fn dim(&self) -> usize {
        self.k.dim
    }

    /// Writes `K` and `M` as sorted coordinate triplets `row col re im`.
    pub fn dump_triplets(&self) -> (String, String) {
        (triplets(&self.k), triplets(&self.m))
    }
}

fn triplets(a: &CsrMatrix) -> String {
    let mut s = String::new();
    for i in 0..a.dim {
        for (j, v) in a.row(i) {
            writeln!(s, "{i} {j} {:e} {:e}", v.re, v.im).expect("write to string");
        }
    }
    s
}

/// Computes `(Kv, Mv)` by sparse products.
pub fn apply_operator(pair: &AssembledPair, v: &[C64]) -> Result<(Vec<C64>, Vec<C64>), AssemblyError> {
    Ok((pair.k.matvec(v)?, pair.m.matvec(v)?))
}

const GAUSS: [f64; 2] = [0.5 - 0.5 / 1.732_050_807_568_877_2, 0.5 + 0.5 / 1.732_050_807_568_877_2];

/// Q1 shape values and reference gradients at `(s, t) ∈ [0,1]²`, nodes in
/// counterclockwise order from the lower-left corner.
fn q1_shape(s: f64, t: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let n = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
    let g = [[-(1.0 - t), -(1.0 - s)], [1.0 - t, -s], [t, s], [-t, 1.0 - s]];
    (n, g)
}

/// Element matrices on a square of side `h`, local dof `a * ncomp + c`.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub size: usize,
    pub stiffness: Vec<C64>,
    pub mass: Vec<f64>,
}

pub fn element_matrices(sym: &OperatorSymbol, a: &HermitianMatrix, rho: f64, h: f64) -> ElementMatrices {
    let nc = sym.n;
    let size = 4 * nc;
    let mut stiffness = vec![C64::new(0.0, 0.0); size * size];
    let mut mass = vec![0.0; size * size];
    let weight = 0.25 * h * h;
    for &s in &GAUSS {
        for &t in &GAUSS {
            let (phi, dref) = q1_shape(s, t);
            // B[:, (a, c)] = D(∇)(φ_a e_c)
            let mut b = vec![C64::new(0.0, 0.0); sym.m * size];
            for node in 0..4 {
                let grad = [dref[node][0] / h, dref[node][1] / h];
                for c in 0..nc {
                    let col = node * nc + c;
                    for r in 0..sym.m {
                        let f = sym.form(r, c);
                        b[r * size + col] = f[0] * grad[0] + f[1] * grad[1];
                    }
                }
            }
            let mut ab = vec![C64::new(0.0, 0.0); sym.m * size];
            for r in 0..sym.m {
                for col in 0..size {
                    let mut acc = C64::new(0.0, 0.0);
                    for q in 0..sym.m {
                        acc += a.get(r, q) * b[q * size + col];
                    }
                    ab[r * size + col] = acc;
                }
            }
            for i in 0..size {
                for j in i..size {
                    let mut acc = C64::new(0.0, 0.0);
                    for r in 0..sym.m {
                        acc += b[r * size + i].conj() * ab[r * size + j];
                    }
                    stiffness[i * size + j] += acc * weight;
                }
            }
            for na in 0..4 {
                for nb in 0..4 {
                    let v = rho * phi[na] * phi[nb] * weight;
                    for c in 0..nc {
                        mass[(na * nc + c) * size + nb * nc + c] += v;
                    }
                }
            }
        }
    }
    for i in 0..size {
        stiffness[i * size + i].im = 0.0;
        for j in (i + 1)..size {
            stiffness[j * size + i] = stiffness[i * size + j].conj();
        }
    }
    ElementMatrices { size, stiffness, mass }
}

struct GridProblem<'a> {
    grid: &'a ElementGrid,
    periodic: [bool; 2],
    phases: [C64; 2],
    hole_bc: HoleBc,
    /// Extra Dirichlet rows on canonical node rows `iy`.
    dirichlet_rows: Vec<usize>,
}

impl GridProblem<'_> {
    fn extent(&self) -> (usize, usize) {
        (
            if self.periodic[0] { self.grid.nx } else { self.grid.nx + 1 },
            if self.periodic[1] { self.grid.ny } else { self.grid.ny + 1 },
        )
    }

    /// Canonical node index and phase of grid node `(ix, iy)`.
    fn canonical(&self, ix: usize, iy: usize) -> (usize, C64) {
        let (ex, _) = self.extent();
        let mut phase = C64::new(1.0, 0.0);
        let mut cx = ix;
        let mut cy = iy;
        if self.periodic[0] && ix == self.grid.nx {
            cx = 0;
            phase *= self.phases[0];
        }
        if self.periodic[1] && iy == self.grid.ny {
            cy = 0;
            phase *= self.phases[1];
        }
        (cy * ex + cx, phase)
    }

    fn element_nodes(&self, ex: usize, ey: usize) -> [(usize, C64); 4] {
        [
            self.canonical(ex, ey),
            self.canonical(ex + 1, ey),
            self.canonical(ex + 1, ey + 1),
            self.canonical(ex, ey + 1),
        ]
    }
}

fn assemble_grid<F>(
    problem: &GridProblem<'_>,
    sym: &OperatorSymbol,
    field: &CoefficientField,
    meta: PairMeta,
    mut coefficient: F,
) -> Result<AssembledPair, AssemblyError>
where
    F: FnMut(usize, usize) -> Result<(HermitianMatrix, f64), OperatorError>,
{
    if sym.m != field.form_dim() {
        return Err(AssemblyError::FormDimension { symbol: sym.m, field: field.form_dim() });
    }
    let grid = problem.grid;
    if grid.active_count() == 0 {
        return Err(AssemblyError::EmptyActiveSet);
    }
    let (ex_n, ey_n) = problem.extent();
    let ncanon = ex_n * ey_n;
    let mut touched_active = vec![false; ncanon];
    let mut touched_hole = vec![false; ncanon];
    for ey in 0..grid.ny {
        for ex in 0..grid.nx {
            let flags = if grid.is_active(ex, ey) { &mut touched_active } else { &mut touched_hole };
            for (c, _) in problem.element_nodes(ex, ey) {
                flags[c] = true;
            }
        }
    }
    let mut node_dof = vec![None; ncanon];
    let mut dof_node = Vec::new();
    let nc = sym.n;
    for cy in 0..ey_n {
        let capped = problem.dirichlet_rows.contains(&cy);
        for cx in 0..ex_n {
            let c = cy * ex_n + cx;
            let keep = touched_active[c]
                && !capped
                && !(problem.hole_bc == HoleBc::Dirichlet && touched_hole[c]);
            if keep {
                node_dof[c] = Some(dof_node.len() * nc);
                dof_node.push(c);
            }
        }
    }
    if dof_node.is_empty() {
        return Err(AssemblyError::NoDofs);
    }
    let dim = dof_node.len() * nc;
    let mut kb = HermitianBuilder::new(dim);
    let mut mb = HermitianBuilder::new(dim);
    let h = grid.element_size();
    // Coefficients repeat across elements; reuse element matrices per value.
    let mut cache: Vec<(HermitianMatrix, f64, ElementMatrices)> = Vec::new();
    for ey in 0..grid.ny {
        for ex in 0..grid.nx {
            if !grid.is_active(ex, ey) {
                continue;
            }
            let (a, rho) = coefficient(ex, ey)?;
            let pos = match cache.iter().position(|(ca, cr, _)| *ca == a && *cr == rho) {
                Some(p) => p,
                None => {
                    let em = element_matrices(sym, &a, rho, h);
                    cache.push((a, rho, em));
                    cache.len() - 1
                }
            };
            let em = &cache[pos].2;
            let nodes = problem.element_nodes(ex, ey);
            let size = em.size;
            for p in 0..size {
                let (cp, php) = nodes[p / nc];
                let Some(bp) = node_dof[cp] else { continue };
                let gp = bp + p % nc;
                for q in p..size {
                    let (cq, phq) = nodes[q / nc];
                    let Some(bq) = node_dof[cq] else { continue };
                    let gq = bq + q % nc;
                    let kv = php.conj() * em.stiffness[p * size + q] * phq;
                    let mv = php.conj() * C64::new(em.mass[p * size + q], 0.0) * phq;
                    if gp == gq && p != q {
                        kb.add_pair(gp, gq, C64::new(2.0 * kv.re, 0.0));
                        mb.add_pair(gp, gq, C64::new(2.0 * mv.re, 0.0));
                    } else {
                        kb.add_pair(gp, gq, kv);
                        mb.add_pair(gp, gq, mv);
                    }
                }
            }
        }
    }
    let dofs = DofMap {
        n: grid.n,
        nx: grid.nx,
        ny: grid.ny,
        origin: grid.origin,
        periodic: problem.periodic,
        ncomp: nc,
        node_dof,
        dof_node,
    };
    Ok(AssembledPair { k: kb.build(), m: mb.build(), dofs, meta })
}

fn phase(theta: f64) -> C64 {
    if theta == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        C64::from_polar(1.0, theta)
    }
}

pub fn assemble_cell_pair(
    mesh: &CellMesh,
    sym: &OperatorSymbol,
    field: &CoefficientField,
    eta: BlochMomentum,
) -> Result<AssembledPair, AssemblyError> {
    let [e1, e2] = eta.components();
    let problem = GridProblem {
        grid: &mesh.grid,
        periodic: [true, true],
        phases: [phase(e1), phase(e2)],
        hole_bc: field.hole_bc,
        dirichlet_rows: Vec::new(),
    };
    let meta = PairMeta { domain: DomainKind::Cell, momentum: [e1, e2], cap_bc: None };
    let grid = &mesh.grid;
    assemble_grid(&problem, sym, field, meta, |ex, ey| {
        sample_coefficients(field, Region::Background, grid.centroid(ex, ey))
    })
}

pub fn assemble_strip_pair(
    mesh: &StripMesh,
    sym: &OperatorSymbol,
    field: &CoefficientField,
    zeta: f64,
) -> Result<AssembledPair, AssemblyError> {
    let zeta = canonical_angle(zeta);
    let dirichlet_rows = match mesh.cap_bc {
        CapBc::Dirichlet => vec![0, mesh.grid.ny],
        CapBc::Neumann => Vec::new(),
    };
    let problem = GridProblem {
        grid: &mesh.grid,
        periodic: [true, false],
        phases: [phase(zeta), C64::new(1.0, 0.0)],
        hole_bc: field.hole_bc,
        dirichlet_rows,
    };
    let meta = PairMeta { domain: DomainKind::Strip, momentum: [zeta, 0.0], cap_bc: Some(mesh.cap_bc) };
    assemble_grid(&problem, sym, field, meta, |ex, ey| {
        let c = mesh.grid.centroid(ex, ey);
        let region = if mesh.is_waveguide_row(ey) { Region::Waveguide { a1: i64::MAX } } else { Region::Background };
        sample_coefficients(field, region, c)
    })
}

pub fn assemble_plane_pair(
    mesh: &PlaneMesh,
    sym: &OperatorSymbol,
    field: &CoefficientField,
) -> Result<AssembledPair, AssemblyError> {
    let problem = GridProblem {
        grid: &mesh.grid,
        periodic: [false, false],
        phases: [C64::new(1.0, 0.0); 2],
        hole_bc: field.hole_bc,
        dirichlet_rows: Vec::new(),
    };
    let meta = PairMeta { domain: DomainKind::Plane, momentum: [0.0, 0.0], cap_bc: None };
    let grid = &mesh.grid;
    assemble_grid(&problem, sym, field, meta, |ex, ey| {
        let c = grid.centroid(ex, ey);
        let region = if mesh.waveguide[grid.index(ex, ey)] {
            Region::Waveguide { a1: grid.cell_of(ex, ey).0 }
        } else {
            Region::Background
        };
        sample_coefficients(field, region, c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_strip_mesh, build_truncated_plane_mesh, rasterize_cell, Shape, UnitCellGeometry, WaveguideSpec};
    use crate::operator::{elasticity_symbol, scalar_symbol};
    use crate::sparse::{dot, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn free_cell(n: usize) -> CellMesh {
        rasterize_cell(&UnitCellGeometry::default(), n).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn canonical_reduction() {
        assert_eq!(canonical_angle(2.0 * PI - 1e-12), 0.0);
        assert_eq!(canonical_angle(2.0 * PI), 0.0);
        assert!((canonical_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(BlochMomentum::new(PI + 2.0 * PI, -0.5), BlochMomentum::new(PI, 2.0 * PI - 0.5));
        assert_eq!(canonical_angle(0.7 + 2.0 * PI), canonical_angle(0.7));
    }

    #[test]
    fn free_cell_zero_mode() {
        let sym = scalar_symbol();
        let field = CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Neumann);
        let pair = assemble_cell_pair(&free_cell(8), &sym, &field, BlochMomentum::new(0.0, 0.0)).unwrap();
        assert_eq!(pair.dim(), 64);
        let ones = vec![C64::new(1.0, 0.0); 64];
        let (kv, mv) = apply_operator(&pair, &ones).unwrap();
        assert!(norm(&kv) < 1e-12);
        // total mass of the unit cell
        let total: C64 = mv.iter().sum();
        assert!((total.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_and_positive_on_random_vectors() {
        let sym = scalar_symbol();
        let g = UnitCellGeometry::new(vec![Shape::disk([0.5, 0.5], 0.3)], 0.05);
        let mesh = rasterize_cell(&g, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for bc in [HoleBc::Neumann, HoleBc::Dirichlet] {
            let field = CoefficientField::homogeneous(2, 1.0, 1.0, bc);
            let pair = assemble_cell_pair(&mesh, &sym, &field, BlochMomentum::new(1.1, 2.3)).unwrap();
            assert!(pair.k.is_hermitian());
            assert!(pair.m.is_hermitian());
            let knorm = pair.k.norm_inf();
            for _ in 0..100 {
                let v = random_vec(pair.dim(), &mut rng);
                let (kv, mv) = apply_operator(&pair, &v).unwrap();
                let q = dot(&v, &kv);
                let m = dot(&v, &mv);
                assert!(q.im.abs() <= 1e-12 * knorm * norm(&v).powi(2));
                assert!(q.re >= -1e-12 * knorm * norm(&v).powi(2));
                assert!(m.re > 0.0);
            }
        }
    }

    #[test]
    fn shift_and_conjugation_identities() {
        let sym = elasticity_symbol();
        let field = CoefficientField::homogeneous(3, 1.0, 1.0, HoleBc::Neumann);
        let mesh = free_cell(4);
        let eta = BlochMomentum::new(0.7, 4.0);
        let a = assemble_cell_pair(&mesh, &sym, &field, eta).unwrap();
        let shifted = assemble_cell_pair(&mesh, &sym, &field, BlochMomentum::new(0.7 + 2.0 * PI, 4.0 - 2.0 * PI)).unwrap();
        assert_eq!(a.k, shifted.k);
        assert_eq!(a.m, shifted.m);
        let neg = assemble_cell_pair(&mesh, &sym, &field, eta.negated()).unwrap();
        let conj = a.k.conj();
        for i in 0..a.dim() {
            for (j, v) in neg.k.row(i) {
                assert!((v - conj.get(i, j)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn strip_canonical_zeta() {
        let g = UnitCellGeometry::default();
        let mesh = build_strip_mesh(&g, &WaveguideSpec::filled(1), 4, 4, CapBc::Dirichlet).unwrap();
        let sym = scalar_symbol();
        let field = CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Neumann);
        let a = assemble_strip_pair(&mesh, &sym, &field, 0.0).unwrap();
        let b = assemble_strip_pair(&mesh, &sym, &field, 2.0 * PI - 1e-12).unwrap();
        assert_eq!(a.k, b.k);
        // Dirichlet caps remove two node rows
        assert_eq!(a.dim(), 4 * (2 * 4 * 4 - 1));
        let neumann = assemble_strip_pair(&mesh.clone().with_cap(CapBc::Neumann), &sym, &field, 0.0).unwrap();
        assert_eq!(neumann.dim(), 4 * (2 * 4 * 4 + 1));
        let ones = vec![C64::new(1.0, 0.0); neumann.dim()];
        assert!(norm(&neumann.k.matvec(&ones).unwrap()) < 1e-12);
    }

    #[test]
    fn plane_bookkeeping() {
        let g = UnitCellGeometry::default();
        let mesh = build_truncated_plane_mesh(&g, &WaveguideSpec::filled(1), 2, 4).unwrap();
        let field = CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Neumann);
        let pair = assemble_plane_pair(&mesh, &scalar_symbol(), &field).unwrap();
        assert_eq!(pair.dim(), 17 * 17);
        let ones = vec![C64::new(1.0, 0.0); pair.dim()];
        assert!(norm(&pair.k.matvec(&ones).unwrap()) < 1e-12);
        let el = assemble_plane_pair(&mesh, &elasticity_symbol(), &CoefficientField::homogeneous(3, 1.0, 1.0, HoleBc::Neumann)).unwrap();
        assert_eq!(el.dim(), 2 * 17 * 17);
    }

    #[test]
    fn apply_operator_unit_vectors() {
        let field = CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Neumann);
        let pair = assemble_cell_pair(&free_cell(4), &scalar_symbol(), &field, BlochMomentum::new(0.3, 0.2)).unwrap();
        let zero = vec![C64::new(0.0, 0.0); pair.dim()];
        let (kv, mv) = apply_operator(&pair, &zero).unwrap();
        assert!(kv.iter().chain(&mv).all(|z| *z == C64::new(0.0, 0.0)));
        let mut e = zero.clone();
        e[5] = C64::new(1.0, 0.0);
        let (kv, _) = apply_operator(&pair, &e).unwrap();
        for (i, v) in kv.iter().enumerate() {
            assert_eq!(*v, pair.k.get(i, 5));
        }
        assert!(apply_operator(&pair, &zero[1..]).is_err());
    }

    #[test]
    fn dirichlet_holes_drop_touching_nodes() {
        let g = UnitCellGeometry::new(vec![Shape::rect([0.25, 0.25], [0.75, 0.75])], 0.05);
        let mesh = rasterize_cell(&g, 8).unwrap();
        let sym = scalar_symbol();
        let neu = assemble_cell_pair(&mesh, &sym, &CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Neumann), BlochMomentum::new(0.0, 0.0)).unwrap();
        let dir = assemble_cell_pair(&mesh, &sym, &CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Dirichlet), BlochMomentum::new(0.0, 0.0)).unwrap();
        // 4x4 hole: 3x3 interior nodes vanish under Neumann, 5x5 under Dirichlet
        assert_eq!(neu.dim(), 64 - 9);
        assert_eq!(dir.dim(), 64 - 25);
    }
}
