//! Piecewise-constant fields on a mesh and their discrete norms.
//!
//! A [`Field`] is one real value per control volume; all geometry is looked
//! up through the mesh passed alongside it, so a field can never drift out
//! of sync with cell measures. The discrete L² norm weights squares by cell
//! measure; the H¹ seminorm is the edge-difference energy
//! `Σ_σ (m_σ/d) (w_K - w_L)²`.

use crate::error::{Error, Result};
use crate::math;
use crate::mesh::Mesh;
use alloc::vec::Vec;

/// One value per control volume of some mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn zeros(n: usize) -> Self {
        Field {
            values: alloc::vec![0.0; n],
        }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Field {
            values: alloc::vec![value; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn check_len(w: &Field, mesh: &Mesh) -> Result<()> {
    if w.len() != mesh.n_cells() {
        return Err(Error::SizeMismatch {
            expected: mesh.n_cells(),
            found: w.len(),
        });
    }
    Ok(())
}

/// Projects `f` onto the mesh by cell averages, `w_K = (1/m_K) ∫_K f`,
/// using a tensor Gauss–Legendre rule with `order` points per axis.
/// Only uniform rectangular grids carry the cell geometry this needs.
pub fn cell_average_project<F>(f: F, mesh: &Mesh, order: usize) -> Result<Field>
where
    F: Fn(f64, f64) -> f64,
{
    if order == 0 {
        return Err(Error::InvalidArgument(
            "quadrature order must be at least 1".into(),
        ));
    }
    if mesh.grid().is_none() {
        return Err(Error::NotRectGrid);
    }
    let (nodes, weights) = math::gauss_legendre(order);
    let grid = mesh.grid().unwrap();
    let dx = mesh.bbox().side(0) / grid.nx as f64;
    let dy = mesh.bbox().side(1) / grid.ny as f64;
    let mut values = Vec::with_capacity(mesh.n_cells());
    for k in 0..mesh.n_cells() {
        let c = mesh.center(k);
        let mut acc = 0.0;
        for (xi, wx) in nodes.iter().zip(&weights) {
            let x = c[0] + 0.5 * dx * xi;
            for (eta, wy) in nodes.iter().zip(&weights) {
                let y = c[1] + 0.5 * dy * eta;
                acc += wx * wy * f(x, y);
            }
        }
        // weights sum to 2 per axis, so acc/4 is the cell mean
        values.push(0.25 * acc);
    }
    Ok(Field::new(values))
}

/// Projects `f` onto the mesh by sampling at cell centers, `w_K = f(x_K)`.
pub fn centered_project<F>(f: F, mesh: &Mesh) -> Field
where
    F: Fn(f64, f64) -> f64,
{
    Field::new(
        (0..mesh.n_cells())
            .map(|k| {
                let c = mesh.center(k);
                f(c[0], c[1])
            })
            .collect(),
    )
}

/// Discrete L² norm, `sqrt(Σ_K m_K w_K²)`.
pub fn discrete_l2_norm(w: &Field, mesh: &Mesh) -> f64 {
    assert_eq!(w.len(), mesh.n_cells(), "field does not live on this mesh");
    let mut acc = 0.0;
    for (v, m) in w.values().iter().zip(mesh.measures()) {
        acc += m * v * v;
    }
    math::sqrt(acc)
}

/// Discrete H¹ seminorm, `sqrt(Σ_σ (m_σ/d)(w_K - w_L)²)`.
pub fn discrete_h1_seminorm(w: &Field, mesh: &Mesh) -> f64 {
    assert_eq!(w.len(), mesh.n_cells(), "field does not live on this mesh");
    let v = w.values();
    let mut acc = 0.0;
    for e in mesh.edges() {
        let d = v[e.cells.0] - v[e.cells.1];
        acc += e.transmissibility() * d * d;
    }
    math::sqrt(acc)
}

/// Measure-weighted mean, `(1/|Λ|) Σ_K m_K w_K`.
pub fn mean_value(w: &Field, mesh: &Mesh) -> f64 {
    assert_eq!(w.len(), mesh.n_cells(), "field does not live on this mesh");
    let mut acc = 0.0;
    for (v, m) in w.values().iter().zip(mesh.measures()) {
        acc += m * v;
    }
    acc / mesh.domain_measure()
}

/// Merged axis breakpoints of two 1-d uniform partitions of `[lo, hi]`.
/// Returns segments as (length, coarse index into grid 1, index into grid 2),
/// dropping slivers below `tol`.
fn merged_segments(lo: f64, hi: f64, n1: usize, n2: usize, tol: f64) -> Vec<(f64, usize, usize)> {
    let d1 = (hi - lo) / n1 as f64;
    let d2 = (hi - lo) / n2 as f64;
    let mut breaks: Vec<f64> = Vec::with_capacity(n1 + n2 + 2);
    for i in 0..=n1 {
        breaks.push(lo + i as f64 * d1);
    }
    for j in 0..=n2 {
        breaks.push(lo + j as f64 * d2);
    }
    breaks.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut segs = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= tol {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let i1 = (math::floor((mid - lo) / d1) as usize).min(n1 - 1);
        let i2 = (math::floor((mid - lo) / d2) as usize).min(n2 - 1);
        segs.push((len, i1, i2));
    }
    segs
}

/// Exact squared L² distance between two piecewise-constant fields living on
/// uniform rectangular grids over the same box, by integrating over the
/// intersection grid. Works for non-nested resolutions.
pub fn cross_mesh_l2_error(w1: &Field, m1: &Mesh, w2: &Field, m2: &Mesh) -> Result<f64> {
    check_len(w1, m1)?;
    check_len(w2, m2)?;
    let (g1, g2) = match (m1.grid(), m2.grid()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::NotRectGrid),
    };
    if !m1.bbox().approx_eq(m2.bbox(), 2) {
        return Err(Error::BboxMismatch);
    }
    let bb = m1.bbox();
    // Slivers thinner than 1e-14 of a cell side carry no real area.
    let tol_x = 1e-14 * (bb.side(0) / g1.nx.max(g2.nx) as f64);
    let tol_y = 1e-14 * (bb.side(1) / g1.ny.max(g2.ny) as f64);
    let segs_x = merged_segments(bb.min[0], bb.max[0], g1.nx, g2.nx, tol_x);
    let segs_y = merged_segments(bb.min[1], bb.max[1], g1.ny, g2.ny, tol_y);
    let v1 = w1.values();
    let v2 = w2.values();
    let mut acc = 0.0;
    for &(ly, j1, j2) in &segs_y {
        let row1 = j1 * g1.nx;
        let row2 = j2 * g2.nx;
        for &(lx, i1, i2) in &segs_x {
            let d = v1[row1 + i1] - v2[row2 + i2];
            acc += lx * ly * d * d;
        }
    }
    Ok(acc)
}
