//! Periodic cell, waveguide row, and the rasterized meshes for the three
//! computational domains: the unit cell, the lateral strip, and the
//! truncated plane.
//!
//! Holes are rasterized by centroid membership: an element of side `1/n` is
//! inactive iff its centroid lies inside some hole. Boundaries are therefore
//! staircase approximations with first-order geometric accuracy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default width of the hole-free frame along the cell boundary.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Smallest admissible number of element subdivisions per unit cell.
pub const MIN_SUBDIVISIONS: usize = 4;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("subdivisions n = {0} is below the minimum of {MIN_SUBDIVISIONS}")]
    TooCoarse(usize),
    #[error("strip truncation T = {t} must be at least h + 2 = {}", h + 2)]
    StripTooShort { t: usize, h: usize },
    #[error("plane half-extent L = {l} is below the required minimum {min}")]
    PlaneTooSmall { l: usize, min: usize },
}

/// A closed hole shape given in cell (or waveguide-row) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    AxisRect { lo: Point, hi: Point },
    /// Counterclockwise vertex list.
    Polygon { vertices: Vec<Point> },
}

impl Shape {
    pub fn disk(center: Point, radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn rect(lo: Point, hi: Point) -> Self {
        Shape::AxisRect { lo, hi }
    }

    pub fn polygon(vertices: Vec<Point>) -> Self {
        Shape::Polygon { vertices }
    }

    /// Open-set membership; points on the boundary are outside.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy < radius * radius
            }
            Shape::AxisRect { lo, hi } => {
                p[0] > lo[0] && p[0] < hi[0] && p[1] > lo[1] && p[1] < hi[1]
            }
            Shape::Polygon { vertices } => {
                point_in_polygon(vertices, p) && boundary_distance(vertices, p) > 0.0
            }
        }
    }

    /// Closed bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::AxisRect { lo, hi } => (*lo, *hi),
            Shape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for c in 0..2 {
                        lo[c] = lo[c].min(v[c]);
                        hi[c] = hi[c].max(v[c]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Checks the intrinsic invariants of the shape itself.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Shape::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(format!("disk radius {radius} must be positive"));
                }
                if !center.iter().all(|c| c.is_finite()) {
                    return Err("disk center must be finite".into());
                }
            }
            Shape::AxisRect { lo, hi } => {
                if !(lo[0] < hi[0] && lo[1] < hi[1]) {
                    return Err(format!("rectangle corners {lo:?} < {hi:?} violated"));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(format!("polygon has {} vertices, need at least 3", vertices.len()));
                }
                if signed_area(vertices) <= 0.0 {
                    return Err("polygon vertices must be counterclockwise".into());
                }
                if !is_simple(vertices) {
                    return Err("polygon is self-intersecting".into());
                }
            }
        }
        Ok(())
    }

    fn as_polygon(&self) -> Option<Vec<Point>> {
        match self {
            Shape::Disk { .. } => None,
            Shape::AxisRect { lo, hi } => {
                Some(vec![*lo, [hi[0], lo[1]], *hi, [lo[0], hi[1]]])
            }
            Shape::Polygon { vertices } => Some(vertices.clone()),
        }
    }

    /// True when the closures of the two shapes intersect.
    pub fn closures_intersect(&self, other: &Shape) -> bool {
        match (self, other) {
            (
                Shape::Disk { center: c1, radius: r1 },
                Shape::Disk { center: c2, radius: r2 },
            ) => dist(*c1, *c2) <= r1 + r2,
            (Shape::Disk { center, radius }, poly) | (poly, Shape::Disk { center, radius }) => {
                let verts = poly.as_polygon().expect("non-disk shape has a polygon form");
                point_in_polygon(&verts, *center) || boundary_distance(&verts, *center) <= *radius
            }
            (a, b) => {
                let pa = a.as_polygon().expect("polygon form");
                let pb = b.as_polygon().expect("polygon form");
                polygons_intersect(&pa, &pb)
            }
        }
    }

    /// Same shape translated by `offset`.
    pub fn translated(&self, offset: Point) -> Shape {
        let t = |p: &Point| [p[0] + offset[0], p[1] + offset[1]];
        match self {
            Shape::Disk { center, radius } => Shape::Disk { center: t(center), radius: *radius },
            Shape::AxisRect { lo, hi } => Shape::AxisRect { lo: t(lo), hi: t(hi) },
            Shape::Polygon { vertices } => Shape::Polygon { vertices: vertices.iter().map(t).collect() },
        }
    }
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn point_in_polygon(v: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn boundary_distance(v: &[Point], p: Point) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| segment_distance(p, v[i], v[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Closed-segment intersection, including touching and collinear overlap.
fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, c: Point| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

fn is_simple(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn polygons_intersect(a: &[Point], b: &[Point]) -> bool {
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segments_intersect(a[i], a[(i + 1) % a.len()], b[j], b[(j + 1) % b.len()]) {
                return true;
            }
        }
    }
    point_in_polygon(a, b[0]) || point_in_polygon(b, a[0])
}

/// The periodic perforation of the unit cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitCellGeometry {
    #[serde(default)]
    pub holes: Vec<Shape>,
    #[serde(default = "default_margin")]
    pub margin_d: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

impl Default for UnitCellGeometry {
    fn default() -> Self {
        UnitCellGeometry { holes: Vec::new(), margin_d: DEFAULT_MARGIN }
    }
}

impl UnitCellGeometry {
    pub fn new(holes: Vec<Shape>, margin_d: f64) -> Self {
        UnitCellGeometry { holes, margin_d }
    }

    pub fn in_hole(&self, p: Point) -> bool {
        self.holes.iter().any(|s| s.contains(p))
    }
}

/// The semi-infinite row of foreign holes occupying `x1 > 0, |x2| < h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideSpec {
    pub half_width_h: usize,
    /// Holes in the row cell `(0,1) x (-h,h)`, in absolute `x2`.
    #[serde(default)]
    pub holes: Vec<Shape>,
    /// Number of leading cells `0 <= a1 < R` whose coefficient patch may
    /// differ from the periodic one.
    #[serde(default)]
    pub transition_r: usize,
}

impl WaveguideSpec {
    pub fn filled(half_width_h: usize) -> Self {
        WaveguideSpec { half_width_h, holes: Vec::new(), transition_r: 0 }
    }

    /// A row that repeats the background perforation, i.e. no waveguide.
    pub fn unperturbed(geom: &UnitCellGeometry, half_width_h: usize) -> Self {
        let h = half_width_h as i64;
        let holes = (-h..h)
            .flat_map(|a2| geom.holes.iter().map(move |s| s.translated([0.0, a2 as f64])))
            .collect();
        WaveguideSpec { half_width_h, holes, transition_r: 0 }
    }

    pub fn in_hole(&self, p: Point) -> bool {
        self.holes.iter().any(|s| s.contains(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryIssue {
    InvalidShape { hole: usize, reason: String },
    MarginViolation { hole: usize },
    Overlap { first: usize, second: usize },
    BadMargin { margin_d: f64 },
    BadHalfWidth,
}

impl std::fmt::Display for GeometryIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeometryIssue::InvalidShape { hole, reason } => write!(f, "hole #{hole}: {reason}"),
            GeometryIssue::MarginViolation { hole } => {
                write!(f, "hole #{hole} reaches into the boundary margin")
            }
            GeometryIssue::Overlap { first, second } => {
                write!(f, "holes #{first} and #{second} overlap")
            }
            GeometryIssue::BadMargin { margin_d } => {
                write!(f, "margin_d = {margin_d} must lie in (0, 0.5)")
            }
            GeometryIssue::BadHalfWidth => write!(f, "waveguide half width h must be at least 1"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<GeometryIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn into_result(self) -> Result<(), GeometryError> {
        if self.is_valid() {
            Ok(())
        } else {
            let msg: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
            Err(GeometryError::Invalid(msg.join("; ")))
        }
    }
}

fn check_holes(holes: &[Shape], lo: Point, hi: Point, report: &mut ValidationReport) {
    for (i, s) in holes.iter().enumerate() {
        if let Err(reason) = s.check() {
            report.issues.push(GeometryIssue::InvalidShape { hole: i, reason });
            continue;
        }
        let (blo, bhi) = s.bounding_box();
        if !(blo[0] > lo[0] && blo[1] > lo[1] && bhi[0] < hi[0] && bhi[1] < hi[1]) {
            report.issues.push(GeometryIssue::MarginViolation { hole: i });
        }
    }
    for i in 0..holes.len() {
        for j in (i + 1)..holes.len() {
            if holes[i].check().is_ok()
                && holes[j].check().is_ok()
                && holes[i].closures_intersect(&holes[j])
            {
                report.issues.push(GeometryIssue::Overlap { first: i, second: j });
            }
        }
    }
}

fn margin_ok(d: f64) -> bool {
    d > 0.0 && d < 0.5
}

/// Lists every violated cell invariant; an empty report means valid.
pub fn validate_cell(geom: &UnitCellGeometry) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = geom.margin_d;
    if !margin_ok(d) {
        report.issues.push(GeometryIssue::BadMargin { margin_d: d });
        return report;
    }
    check_holes(&geom.holes, [d, d], [1.0 - d, 1.0 - d], &mut report);
    report
}

pub fn validate_waveguide(wg: &WaveguideSpec, margin_d: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    if wg.half_width_h == 0 {
        report.issues.push(GeometryIssue::BadHalfWidth);
        return report;
    }
    if !margin_ok(margin_d) {
        report.issues.push(GeometryIssue::BadMargin { margin_d });
        return report;
    }
    let h = wg.half_width_h as f64;
    check_holes(&wg.holes, [margin_d, -h + margin_d], [1.0 - margin_d, h - margin_d], &mut report);
    report
}

/// Element activity on a uniform `n`-per-unit grid of `nx x ny` squares
/// whose lower-left corner sits at `origin`. Elements are stored row-major
/// with `x1` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGrid {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub active: Vec<bool>,
}

impl ElementGrid {
    pub fn element_size(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn index(&self, ex: usize, ey: usize) -> usize {
        ey * self.nx + ex
    }

    pub fn is_active(&self, ex: usize, ey: usize) -> bool {
        self.active[self.index(ex, ey)]
    }

    pub fn centroid(&self, ex: usize, ey: usize) -> Point {
        let h = self.element_size();
        [
            self.origin[0] + (ex as f64 + 0.5) * h,
            self.origin[1] + (ey as f64 + 0.5) * h,
        ]
    }

    /// Integer cell index `(a1, a2)` containing element `(ex, ey)`.
    pub fn cell_of(&self, ex: usize, ey: usize) -> (i64, i64) {
        (
            self.origin[0].round() as i64 + (ex / self.n) as i64,
            self.origin[1].round() as i64 + (ey / self.n) as i64,
        )
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn inactive_count(&self) -> usize {
        self.active.len() - self.active_count()
    }

    /// Node position for grid node `(ix, iy)`, `0 <= ix <= nx`.
    pub fn node_position(&self, ix: usize, iy: usize) -> Point {
        let h = self.element_size();
        [self.origin[0] + ix as f64 * h, self.origin[1] + iy as f64 * h]
    }
}

fn cell_local(p: Point) -> Point {
    [p[0] - p[0].floor(), p[1] - p[1].floor()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapBc {
    Dirichlet,
    Neumann,
}

impl std::fmt::Display for CapBc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CapBc::Dirichlet => "dirichlet",
            CapBc::Neumann => "neumann",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMesh {
    pub grid: ElementGrid,
}

/// The strip `(0,1) x (-T,T)`; element rows with `|x2| < h` belong to the
/// waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct StripMesh {
    pub grid: ElementGrid,
    pub truncation_t: usize,
    pub half_width_h: usize,
    pub cap_bc: CapBc,
}

impl StripMesh {
    pub fn with_cap(mut self, cap_bc: CapBc) -> Self {
        self.cap_bc = cap_bc;
        self
    }

    /// Whether element row `ey` lies inside the waveguide rows.
    pub fn is_waveguide_row(&self, ey: usize) -> bool {
        let (_, a2) = self.grid.cell_of(0, ey);
        let h = self.half_width_h as i64;
        a2 >= -h && a2 < h
    }
}

/// The box `(-L,L)^2` with waveguide cells where `a1 >= 0`, `-h <= a2 < h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMesh {
    pub grid: ElementGrid,
    pub half_extent_l: usize,
    pub half_width_h: usize,
    pub transition_r: usize,
    /// Per-element waveguide flag.
    pub waveguide: Vec<bool>,
}

impl PlaneMesh {
    /// Number of unit cells carrying the waveguide flag.
    pub fn waveguide_cell_count(&self) -> usize {
        let l = self.half_extent_l as i64;
        let h = self.half_width_h as i64;
        (-l..l)
            .flat_map(|a1| (-l..l).map(move |a2| (a1, a2)))
            .filter(|&(a1, a2)| is_waveguide_cell(a1, a2, h))
            .count()
    }
}

fn is_waveguide_cell(a1: i64, a2: i64, h: i64) -> bool {
    a1 >= 0 && a2 >= -h && a2 < h
}

pub fn rasterize_cell(geom: &UnitCellGeometry, n: usize) -> Result<CellMesh, GeometryError> {
    if n < MIN_SUBDIVISIONS {
        return Err(GeometryError::TooCoarse(n));
    }
    validate_cell(geom).into_result()?;
    let mut grid = ElementGrid { n, nx: n, ny: n, origin: [0.0, 0.0], active: vec![true; n * n] };
    for ey in 0..n {
        for ex in 0..n {
            let c = grid.centroid(ex, ey);
            let idx = grid.index(ex, ey);
            grid.active[idx] = !geom.in_hole(c);
        }
    }
    Ok(CellMesh { grid })
}

pub fn build_strip_mesh(
    geom: &UnitCellGeometry,
    wg: &WaveguideSpec,
    truncation_t: usize,
    n: usize,
    cap_bc: CapBc,
) -> Result<StripMesh, GeometryError> {
    if n < MIN_SUBDIVISIONS {
        return Err(GeometryError::TooCoarse(n));
    }
    let h = wg.half_width_h;
    if truncation_t < h + 2 {
        return Err(GeometryError::StripTooShort { t: truncation_t, h });
    }
    validate_cell(geom).into_result()?;
    validate_waveguide(wg, geom.margin_d).into_result()?;
    let ny = 2 * truncation_t * n;
    let mut grid = ElementGrid {
        n,
        nx: n,
        ny,
        origin: [0.0, -(truncation_t as f64)],
        active: vec![true; n * ny],
    };
    let hi = h as i64;
    for ey in 0..ny {
        for ex in 0..n {
            let c = grid.centroid(ex, ey);
            let (_, a2) = grid.cell_of(ex, ey);
            let in_hole = if a2 >= -hi && a2 < hi { wg.in_hole(c) } else { geom.in_hole(cell_local(c)) };
            let idx = grid.index(ex, ey);
            grid.active[idx] = !in_hole;
        }
    }
    Ok(StripMesh { grid, truncation_t, half_width_h: h, cap_bc })
}

/// Minimal plane half-extent accepted for a waveguide.
pub fn min_plane_extent(wg: &WaveguideSpec) -> usize {
    (2 * wg.half_width_h).max(wg.transition_r + 2)
}

pub fn build_truncated_plane_mesh(
    geom: &UnitCellGeometry,
    wg: &WaveguideSpec,
    half_extent_l: usize,
    n: usize,
) -> Result<PlaneMesh, GeometryError> {
    if n < MIN_SUBDIVISIONS {
        return Err(GeometryError::TooCoarse(n));
    }
    let min = min_plane_extent(wg);
    if half_extent_l < min {
        return Err(GeometryError::PlaneTooSmall { l: half_extent_l, min });
    }
    validate_cell(geom).into_result()?;
    validate_waveguide(wg, geom.margin_d).into_result()?;
    let side = 2 * half_extent_l * n;
    let l = half_extent_l as f64;
    let mut grid = ElementGrid {
        n,
        nx: side,
        ny: side,
        origin: [-l, -l],
        active: vec![true; side * side],
    };
    let mut waveguide = vec![false; side * side];
    let h = wg.half_width_h as i64;
    for ey in 0..side {
        for ex in 0..side {
            let c = grid.centroid(ex, ey);
            let (a1, a2) = grid.cell_of(ex, ey);
            let idx = grid.index(ex, ey);
            if is_waveguide_cell(a1, a2, h) {
                waveguide[idx] = true;
                grid.active[idx] = !wg.in_hole([c[0] - a1 as f64, c[1]]);
            } else {
                grid.active[idx] = !geom.in_hole(cell_local(c));
            }
        }
    }
    Ok(PlaneMesh {
        grid,
        half_extent_l,
        half_width_h: wg.half_width_h,
        transition_r: wg.transition_r,
        waveguide,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn centered_disk(r: f64) -> UnitCellGeometry {
        UnitCellGeometry::new(vec![Shape::disk([0.5, 0.5], r)], 0.1)
    }

    #[test]
    fn validate_examples() {
        assert!(validate_cell(&UnitCellGeometry::new(vec![], 0.1)).is_valid());
        assert!(validate_cell(&centered_disk(0.3)).is_valid());
        let bad = validate_cell(&centered_disk(0.45));
        assert_eq!(bad.issues, vec![GeometryIssue::MarginViolation { hole: 0 }]);
    }

    #[test]
    fn overlapping_holes_are_named() {
        let g = UnitCellGeometry::new(
            vec![Shape::disk([0.35, 0.5], 0.15), Shape::rect([0.45, 0.4], [0.7, 0.6])],
            0.05,
        );
        assert_eq!(validate_cell(&g).issues, vec![GeometryIssue::Overlap { first: 0, second: 1 }]);
        let g = UnitCellGeometry::new(
            vec![Shape::disk([0.25, 0.5], 0.1), Shape::disk([0.75, 0.5], 0.1)],
            0.05,
        );
        assert!(validate_cell(&g).is_valid());
    }

    #[test]
    fn polygon_checks() {
        let cw = Shape::polygon(vec![[0.2, 0.2], [0.2, 0.8], [0.8, 0.8]]);
        assert!(cw.check().is_err());
        let bowtie = Shape::polygon(vec![[0.2, 0.2], [0.8, 0.8], [0.8, 0.2], [0.2, 0.8]]);
        assert!(bowtie.check().is_err());
        let tri = Shape::polygon(vec![[0.2, 0.2], [0.8, 0.2], [0.5, 0.8]]);
        assert!(tri.check().is_ok());
        assert!(tri.contains([0.5, 0.4]));
        assert!(!tri.contains([0.1, 0.1]));
        let far_disk = Shape::disk([0.5, 0.9], 0.05);
        assert!(!tri.closures_intersect(&far_disk));
        assert!(tri.closures_intersect(&Shape::disk([0.5, 0.85], 0.06)));
    }

    #[test]
    fn rasterize_counts() {
        let m = rasterize_cell(&UnitCellGeometry::default(), 8).unwrap();
        assert_eq!(m.grid.active_count(), 64);

        let g = UnitCellGeometry::new(vec![Shape::rect([0.25, 0.25], [0.75, 0.75])], 0.05);
        let m = rasterize_cell(&g, 8).unwrap();
        assert_eq!(m.grid.inactive_count(), 16);

        assert_eq!(rasterize_cell(&UnitCellGeometry::default(), 3), Err(GeometryError::TooCoarse(3)));
    }

    #[test]
    fn rasterized_disk_matches_enumeration() {
        let m = rasterize_cell(&centered_disk(0.3), 16).unwrap();
        // independent enumeration of centroids
        let mut inside = 0;
        for i in 0..16 {
            for j in 0..16 {
                let x = (i as f64 + 0.5) / 16.0 - 0.5;
                let y = (j as f64 + 0.5) / 16.0 - 0.5;
                if x * x + y * y < 0.09 {
                    inside += 1;
                }
            }
        }
        assert_eq!(m.grid.inactive_count(), inside);
        assert_eq!(m.grid.active_count(), 256 - inside);
        let area = std::f64::consts::PI * 0.09 * 256.0;
        let slack = 2.0 * 2.0 * std::f64::consts::PI * 0.3 * 16.0;
        assert!((inside as f64 - area).abs() <= slack);
    }

    #[test]
    fn strip_rows() {
        let empty = UnitCellGeometry::default();
        let s = build_strip_mesh(&empty, &WaveguideSpec::filled(1), 4, 8, CapBc::Dirichlet).unwrap();
        assert_eq!(s.grid.active_count(), 8 * 64);

        let g = centered_disk(0.3);
        let s = build_strip_mesh(&g, &WaveguideSpec::filled(1), 4, 8, CapBc::Dirichlet).unwrap();
        let cell = rasterize_cell(&g, 8).unwrap();
        for a2 in -4i64..4 {
            let row0 = ((a2 + 4) as usize) * 8;
            let perforated = (0..8).any(|j| (0..8).any(|i| !s.grid.is_active(i, row0 + j)));
            assert_eq!(perforated, !(a2 == -1 || a2 == 0), "cell row {a2}");
            if perforated {
                for j in 0..8 {
                    for i in 0..8 {
                        assert_eq!(s.grid.is_active(i, row0 + j), cell.grid.is_active(i, j));
                    }
                }
            }
        }
        assert_eq!(
            build_strip_mesh(&g, &WaveguideSpec::filled(1), 1, 8, CapBc::Dirichlet),
            Err(GeometryError::StripTooShort { t: 1, h: 1 })
        );
    }

    #[test]
    fn plane_waveguide_flags() {
        let empty = UnitCellGeometry::default();
        let wg = WaveguideSpec::filled(1);
        let p = build_truncated_plane_mesh(&empty, &wg, 4, 4).unwrap();
        assert_eq!(p.waveguide_cell_count(), 8);
        assert_eq!(p.waveguide.iter().filter(|w| **w).count(), 8 * 16);
        assert!(build_truncated_plane_mesh(&empty, &wg, 2, 4).is_ok());
        assert_eq!(
            build_truncated_plane_mesh(&empty, &wg, 1, 4),
            Err(GeometryError::PlaneTooSmall { l: 1, min: 2 })
        );
    }

    #[test]
    fn plane_left_half_tiles_cell() {
        let g = centered_disk(0.3);
        let wg = WaveguideSpec { half_width_h: 1, holes: vec![Shape::disk([0.5, 0.0], 0.2)], transition_r: 0 };
        let p = build_truncated_plane_mesh(&g, &wg, 3, 8).unwrap();
        let cell = rasterize_cell(&g, 8).unwrap();
        for ey in 0..p.grid.ny {
            for ex in 0..p.grid.nx {
                let c = p.grid.centroid(ex, ey);
                if c[0] < -1.0 {
                    assert_eq!(p.grid.is_active(ex, ey), cell.grid.is_active(ex % 8, ey % 8));
                }
            }
        }
    }
}
