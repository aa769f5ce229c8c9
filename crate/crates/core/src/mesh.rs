//! Admissible cell-centered meshes for two-point flux discretizations.
//!
//! A [`Mesh`] stores control volumes (center, measure, diameter) and interior
//! edges carrying the geometry of the two-point flux: the edge measure `m_σ`
//! and the distance `d` between the two adjacent centers. The flux coefficient
//! between neighbors is `m_σ / d` (the transmissibility). Boundary edges are
//! never stored: under homogeneous Neumann conditions the scheme only sums
//! over interior edges.
//!
//! Meshes are immutable once built and can be shared freely across workers.
//! The only shipped builders produce uniform rectangular grids; the data
//! model itself does not care where cells and edges came from.

use crate::error::{Error, Result};
use crate::math;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Axis-aligned bounding box. Only the first `dim` coordinates are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl BoundingBox {
    /// A 2-d box `[x0, x1] × [y0, y1]`.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        BoundingBox {
            min: [x0, y0, 0.0],
            max: [x1, y1, 0.0],
        }
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    /// Relative coincidence test, tolerant to formatting round-trips.
    pub fn approx_eq(&self, other: &BoundingBox, dim: usize) -> bool {
        (0..dim).all(|a| {
            let scale = math::abs(self.side(a)).max(1.0);
            math::abs(self.min[a] - other.min[a]) <= 1e-12 * scale
                && math::abs(self.max[a] - other.max[a]) <= 1e-12 * scale
        })
    }
}

/// One interior edge `σ = K|L` with its flux geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorEdge {
    /// Indices of the two adjacent cells. The pair is unordered; all derived
    /// quantities are symmetric in it.
    pub cells: (usize, usize),
    /// (d-1)-dimensional measure `m_σ` of the edge.
    pub measure: f64,
    /// Euclidean distance between the two cell centers.
    pub center_distance: f64,
}

impl InteriorEdge {
    /// Flux coefficient `m_σ / d` of the edge.
    #[inline]
    pub fn transmissibility(&self) -> f64 {
        self.measure / self.center_distance
    }
}

/// Shape tag for meshes built as uniform rectangular grids, row-major with
/// `x` fastest: cell `(ix, iy)` has index `iy * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
}

/// A cell-centered finite volume mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    centers: Vec<[f64; 3]>,
    measures: Vec<f64>,
    diameters: Vec<f64>,
    edges: Vec<InteriorEdge>,
    domain_measure: f64,
    bbox: BoundingBox,
    grid: Option<GridShape>,
}

impl Mesh {
    /// Assembles a mesh from raw parts without checking anything;
    /// run [`validate_mesh`] to report violations as data.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim: usize,
        centers: Vec<[f64; 3]>,
        measures: Vec<f64>,
        diameters: Vec<f64>,
        edges: Vec<InteriorEdge>,
        domain_measure: f64,
        bbox: BoundingBox,
        grid: Option<GridShape>,
    ) -> Self {
        Mesh {
            dim,
            centers,
            measures,
            diameters,
            edges,
            domain_measure,
            bbox,
            grid,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.measures.len()
    }

    pub fn center(&self, cell: usize) -> [f64; 3] {
        self.centers[cell]
    }

    pub fn measure(&self, cell: usize) -> f64 {
        self.measures[cell]
    }

    /// All cell measures, indexed by cell.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn diameter(&self, cell: usize) -> f64 {
        self.diameters[cell]
    }

    pub fn edges(&self) -> &[InteriorEdge] {
        &self.edges
    }

    /// Total measure of the domain, `|Λ|`.
    pub fn domain_measure(&self) -> f64 {
        self.domain_measure
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// `Some` iff the mesh is a uniform rectangular grid built by this crate.
    pub fn grid(&self) -> Option<GridShape> {
        self.grid
    }

    /// Plain-text dump, one line per cell and per edge, for debugging and
    /// cross-implementation diffing.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, c) in self.centers.iter().enumerate() {
            out.push_str(&format!(
                "cell {} {} {} {}\n",
                k, c[0], c[1], self.measures[k]
            ));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "edge {} {} {} {}\n",
                e.cells.0, e.cells.1, e.measure, e.center_distance
            ));
        }
        out
    }
}

/// Builds the uniform `l_per_axis × l_per_axis` grid over `bbox`.
pub fn build_rect_mesh(l_per_axis: usize, bbox: &BoundingBox) -> Result<Mesh> {
    build_grid_mesh(l_per_axis, l_per_axis, bbox)
}

/// Builds a uniform `nx × ny` rectangular grid over `bbox`. Cells are
/// congruent rectangles; interior edges connect axis-adjacent cells with
/// `m_σ` the shared side length and `d` the center distance, both exact
/// by construction.
pub fn build_grid_mesh(nx: usize, ny: usize, bbox: &BoundingBox) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid must have at least one cell per axis, got {nx} x {ny}"
        )));
    }
    let (sx, sy) = (bbox.side(0), bbox.side(1));
    if !(sx > 0.0 && sy > 0.0) || !sx.is_finite() || !sy.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "degenerate bounding box with sides {sx} x {sy}"
        )));
    }
    let dx = sx / nx as f64;
    let dy = sy / ny as f64;
    let m_cell = dx * dy;
    let diam = math::sqrt(dx * dx + dy * dy);
    let n = nx * ny;

    let mut centers = Vec::with_capacity(n);
    for iy in 0..ny {
        for ix in 0..nx {
            centers.push([
                bbox.min[0] + (ix as f64 + 0.5) * dx,
                bbox.min[1] + (iy as f64 + 0.5) * dy,
                0.0,
            ]);
        }
    }

    let mut edges = Vec::with_capacity(2 * n);
    for iy in 0..ny {
        for ix in 0..nx {
            let k = iy * nx + ix;
            if ix + 1 < nx {
                edges.push(InteriorEdge {
                    cells: (k, k + 1),
                    measure: dy,
                    center_distance: dx,
                });
            }
            if iy + 1 < ny {
                edges.push(InteriorEdge {
                    cells: (k, k + nx),
                    measure: dx,
                    center_distance: dy,
                });
            }
        }
    }

    Ok(Mesh {
        dim: 2,
        centers,
        measures: alloc::vec![m_cell; n],
        diameters: alloc::vec![diam; n],
        edges,
        domain_measure: m_cell * n as f64,
        bbox: *bbox,
        grid: Some(GridShape { nx, ny }),
    })
}

/// Mesh size and regularity numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshRegularity {
    /// Mesh size: the largest cell diameter.
    pub h: f64,
    /// Regularity number: max of the vertex valence bound and of
    /// `diam(K) / d(x_K, σ)` over all cell/edge incidences. Zero for
    /// degenerate meshes without interior structure.
    pub reg: f64,
    /// Largest number of interior edges incident to a single cell.
    pub edge_count_max: usize,
    /// True when the mesh has no interior edges, so `reg` is meaningless.
    pub degenerate: bool,
}

/// Computes the mesh size and regularity number.
///
/// The center-to-edge distance `d(x_K, σ)` is taken as half the center
/// distance, which is exact for the uniform grids this crate builds. The
/// vertex valence bound is 4 for proper 2-d grids, 3 for single-row or
/// single-column strips, and for general meshes falls back to the maximal
/// edge count per cell.
pub fn mesh_regularity(mesh: &Mesh) -> MeshRegularity {
    let h = mesh
        .diameters
        .iter()
        .copied()
        .fold(0.0_f64, |a, b| a.max(b));
    let mut counts = alloc::vec![0usize; mesh.n_cells()];
    for e in mesh.edges() {
        counts[e.cells.0] += 1;
        counts[e.cells.1] += 1;
    }
    let edge_count_max = counts.iter().copied().max().unwrap_or(0);
    if mesh.edges().is_empty() {
        return MeshRegularity {
            h,
            reg: 0.0,
            edge_count_max,
            degenerate: true,
        };
    }
    let vertex_valence = match mesh.grid {
        Some(GridShape { nx, ny }) if nx >= 2 && ny >= 2 => 4.0,
        Some(_) => 3.0,
        None => edge_count_max as f64,
    };
    let mut ratio_max = 0.0_f64;
    for e in mesh.edges() {
        let d_center_to_edge = 0.5 * e.center_distance;
        let diam = mesh.diameters[e.cells.0].max(mesh.diameters[e.cells.1]);
        ratio_max = ratio_max.max(diam / d_center_to_edge);
    }
    MeshRegularity {
        h,
        reg: vertex_valence.max(ratio_max),
        edge_count_max,
        degenerate: false,
    }
}

/// Checks the mesh axioms that the data model can express and returns one
/// description per violation; an empty list means the mesh is valid.
pub fn validate_mesh(mesh: &Mesh) -> Vec<String> {
    let mut violations = Vec::new();
    let n = mesh.n_cells();
    for k in 0..n {
        let m = mesh.measures[k];
        if !(m > 0.0) || !m.is_finite() {
            violations.push(format!("cell {k}: measure {m} is not strictly positive"));
        }
        if !mesh.diameters[k].is_finite() || !(mesh.diameters[k] > 0.0) {
            violations.push(format!(
                "cell {k}: diameter {} is not strictly positive",
                mesh.diameters[k]
            ));
        }
    }
    let mut seen: Vec<(usize, usize)> = Vec::with_capacity(mesh.edges.len());
    for (i, e) in mesh.edges.iter().enumerate() {
        let (k, l) = e.cells;
        if k == l {
            violations.push(format!("edge {i}: connects cell {k} to itself"));
        }
        if k >= n || l >= n {
            violations.push(format!("edge {i}: cell index out of range ({k}, {l})"));
            continue;
        }
        if !(e.measure > 0.0) || !e.measure.is_finite() {
            violations.push(format!(
                "edge {i} ({k}, {l}): measure {} is not strictly positive",
                e.measure
            ));
        }
        if !(e.center_distance > 0.0) || !e.center_distance.is_finite() {
            violations.push(format!(
                "edge {i} ({k}, {l}): center distance {} is not strictly positive",
                e.center_distance
            ));
        }
        seen.push((k.min(l), k.max(l)));
    }
    seen.sort_unstable();
    for w in seen.windows(2) {
        if w[0] == w[1] {
            violations.push(format!(
                "duplicate interior edge between cells {} and {}",
                w[0].0, w[0].1
            ));
        }
    }
    let total: f64 = mesh.measures.iter().sum();
    let scale = math::abs(mesh.domain_measure).max(1e-300);
    if math::abs(total - mesh.domain_measure) > 1e-12 * scale {
        violations.push(format!(
            "cell measures sum to {total}, domain measure is {}",
            mesh.domain_measure
        ));
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_cell_grid_geometry() {
        // 40 cells per axis on (-1,1)^2: 1600 cells of measure 2.5e-3,
        // mesh size sqrt(8)/40.
        let mesh = build_rect_mesh(40, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert_eq!(mesh.n_cells(), 1600);
        for k in 0..mesh.n_cells() {
            assert!((mesh.measure(k) - 2.5e-3).abs() < 1e-18);
        }
        let r = mesh_regularity(&mesh);
        assert!((r.h - 8.0_f64.sqrt() / 40.0).abs() < 1e-15);
        assert!((mesh.domain_measure() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_cell_mesh() {
        let mesh = build_rect_mesh(1, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.edges().len(), 0);
        assert!((mesh.measure(0) - 4.0).abs() < 1e-15);
        let r = mesh_regularity(&mesh);
        assert!(r.degenerate);
        assert_eq!(r.reg, 0.0);
        assert_eq!(r.edge_count_max, 0);
    }

    #[test]
    fn two_by_two_unit_square() {
        let mesh = build_rect_mesh(2, &BoundingBox::rect(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!(mesh.n_cells(), 4);
        assert_eq!(mesh.edges().len(), 4);
        for e in mesh.edges() {
            assert!((e.measure - 0.5).abs() < 1e-15);
            assert!((e.center_distance - 0.5).abs() < 1e-15);
        }
        // centers row-major: (0.25,0.25), (0.75,0.25), (0.25,0.75), (0.75,0.75)
        assert_eq!(mesh.center(1)[0], 0.75);
        assert_eq!(mesh.center(2)[1], 0.75);
    }

    #[test]
    fn square_cell_regularity_ratio() {
        // For square cells diam/d(x_K, σ) = s*sqrt(2)/(s/2) = 2*sqrt(2);
        // the vertex valence 4 dominates.
        let mesh = build_rect_mesh(8, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
        let r = mesh_regularity(&mesh);
        assert!((r.reg - 4.0).abs() < 1e-15);
        assert_eq!(r.edge_count_max, 4);
        // regularity dominates h/d on every edge
        for e in mesh.edges() {
            assert!(r.h / e.center_distance <= r.reg + 1e-15);
        }
    }

    #[test]
    fn anisotropic_cells_expose_the_diameter_ratio() {
        // 4x1 strip of 0.25 x 1 cells: the x-edges have d = 0.25, so
        // diam/d(x_K, σ) = 2*hypot(0.25, 1)/0.25, far above the valence bound
        let mesh = build_grid_mesh(4, 1, &BoundingBox::rect(0.0, 1.0, 0.0, 1.0)).unwrap();
        let r = mesh_regularity(&mesh);
        let diam = (0.25f64 * 0.25 + 1.0).sqrt();
        assert!((r.h - diam).abs() < 1e-15);
        assert!((r.reg - 2.0 * diam / 0.25).abs() < 1e-12);
        for e in mesh.edges() {
            assert!(r.h / e.center_distance <= r.reg + 1e-12);
        }
    }

    #[test]
    fn builder_rejects_degenerate_input() {
        assert!(build_rect_mesh(0, &BoundingBox::rect(0.0, 1.0, 0.0, 1.0)).is_err());
        assert!(build_rect_mesh(4, &BoundingBox::rect(0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(build_rect_mesh(4, &BoundingBox::rect(1.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn builder_output_validates_clean() {
        let mesh = build_rect_mesh(8, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert!(validate_mesh(&mesh).is_empty());
    }

    #[test]
    fn validation_flags_zero_measure_and_duplicate_edge() {
        let mesh = build_rect_mesh(2, &BoundingBox::rect(0.0, 1.0, 0.0, 1.0)).unwrap();
        let mut measures = mesh.measures().to_vec();
        measures[1] = 0.0;
        let bad = Mesh::from_parts(
            2,
            (0..4).map(|k| mesh.center(k)).collect(),
            measures,
            (0..4).map(|k| mesh.diameter(k)).collect(),
            mesh.edges().to_vec(),
            mesh.domain_measure(),
            *mesh.bbox(),
            mesh.grid(),
        );
        let v = validate_mesh(&bad);
        assert!(v.iter().any(|s| s.contains("cell 1")), "{v:?}");

        let mut edges = mesh.edges().to_vec();
        let first = edges[0];
        edges.push(InteriorEdge {
            cells: (first.cells.1, first.cells.0),
            ..first
        });
        let dup = Mesh::from_parts(
            2,
            (0..4).map(|k| mesh.center(k)).collect(),
            mesh.measures().to_vec(),
            (0..4).map(|k| mesh.diameter(k)).collect(),
            edges,
            mesh.domain_measure(),
            *mesh.bbox(),
            mesh.grid(),
        );
        let v = validate_mesh(&dup);
        assert!(v.iter().any(|s| s.contains("duplicate interior edge")), "{v:?}");
    }

    #[test]
    fn refinement_halves_h_exactly() {
        let bbox = BoundingBox::rect(-1.0, 1.0, -0.5, 1.5);
        for l in [3usize, 5, 8] {
            let coarse = mesh_regularity(&build_rect_mesh(l, &bbox).unwrap());
            let fine = mesh_regularity(&build_rect_mesh(2 * l, &bbox).unwrap());
            assert_eq!(fine.h, coarse.h / 2.0);
            let c = build_rect_mesh(l, &bbox).unwrap();
            let f = build_rect_mesh(2 * l, &bbox).unwrap();
            assert_eq!(f.n_cells(), 4 * c.n_cells());
        }
    }

    #[test]
    fn partition_sums_to_box_area() {
        for l in [1usize, 3, 7, 40] {
            let mesh = build_rect_mesh(l, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
            let total: f64 = mesh.measures().iter().sum();
            assert!((total - 4.0).abs() <= 1e-12 * 4.0);
        }
    }

    #[test]
    fn dump_round_trip_format() {
        let mesh = build_rect_mesh(2, &BoundingBox::rect(0.0, 1.0, 0.0, 1.0)).unwrap();
        let text = mesh.dump();
        assert!(text.lines().filter(|l| l.starts_with("cell ")).count() == 4);
        assert!(text.lines().filter(|l| l.starts_with("edge ")).count() == 4);
        assert!(text.contains("cell 0 0.25 0.25 0.25"));
    }
}
