//! The TPFA stiffness operator and the linear solves built on it.
//!
//! `assemble_stiffness` turns interior-edge geometry into the symmetric
//! operator with `A[K][K] = Σ m_σ/d` over the edges of `K` and
//! `A[K][L] = -m_σ/d` for each neighbor; rows of isolated cells are zero.
//! The implicit step system `(M + τA) u = rhs` is SPD for any positive cell
//! masses and is solved either by conjugate gradients (warm-startable) or by
//! a dense Cholesky factorization for small meshes and cross-checks.

use crate::error::{Error, Result};
use crate::field::{cell_average_project, Field};
use crate::math;
use crate::mesh::Mesh;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Symmetric sparse operator in compressed row form with a dense diagonal
/// view. Immutable after assembly and safe to share across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseOperator {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// All stored entries as `(row, col, value)` triplets, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }

    /// Coordinate-format text dump (`i j value` per line) for cross-checking.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.triplets() {
            out.push_str(&format!("{i} {j} {v}\n"));
        }
        out
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            y[i] = acc;
        }
    }

    /// Mat-vec as a field operation.
    pub fn apply(&self, w: &Field) -> Result<Field> {
        if w.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: w.len(),
            });
        }
        let mut out = alloc::vec![0.0; self.n];
        self.apply_into(w.values(), &mut out);
        Ok(Field::new(out))
    }
}

/// Assembles the stiffness operator of a mesh from its interior edges.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseOperator {
    let n = mesh.n_cells();
    let mut diag = alloc::vec![0.0; n];
    let mut adj: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); n];
    for e in mesh.edges() {
        let t = e.transmissibility();
        let (k, l) = e.cells;
        diag[k] += t;
        diag[l] += t;
        adj[k].push((l, -t));
        adj[l].push((k, -t));
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for (i, row) in adj.iter_mut().enumerate() {
        row.push((i, diag[i]));
        row.sort_unstable_by_key(|&(c, _)| c);
        for &(c, v) in row.iter() {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    SparseOperator {
        n,
        row_ptr,
        cols,
        vals,
        diag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    ConjugateGradient,
    Cholesky,
}

impl SolverMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolverMethod::ConjugateGradient => "cg",
            SolverMethod::Cholesky => "cholesky",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(SolverMethod::ConjugateGradient),
            "cholesky" => Ok(SolverMethod::Cholesky),
            _ => Err(Error::InvalidArgument(format!(
                "unknown solver `{s}` (expected `cg` or `cholesky`)"
            ))),
        }
    }
}

/// Linear solver settings for the per-step SPD systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub rel_tolerance: f64,
    pub max_iterations: usize,
}

impl SolverConfig {
    pub fn cg(rel_tolerance: f64, max_iterations: usize) -> Self {
        SolverConfig {
            method: SolverMethod::ConjugateGradient,
            rel_tolerance,
            max_iterations,
        }
    }

    /// The default iteration budget for an `n`-cell system.
    pub fn default_max_iterations(n: usize) -> usize {
        (10 * n).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_tolerance must lie in (0, 1), got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// Conjugate gradients on an abstract SPD operator. `post_iterate` runs after
/// every solution update, e.g. to project away a known kernel component.
/// Convergence is accepted only once the true residual meets the target.
fn conjugate_gradient<A, P>(
    mut apply: A,
    b: &[f64],
    mut x: Vec<f64>,
    rtol: f64,
    max_iterations: usize,
    mut post_iterate: P,
) -> Result<(Vec<f64>, usize, f64)>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&mut [f64]),
{
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((alloc::vec![0.0; n], 0, 0.0));
    }
    let target = rtol * b_norm;
    let mut r = alloc::vec![0.0; n];
    let mut ap = alloc::vec![0.0; n];

    let mut iterations = 0usize;
    loop {
        // (re)compute the true residual; restart the Krylov recursion from it
        apply(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut rs = dot(&r, &r);
        if math::sqrt(rs) <= target {
            return Ok((x, iterations, math::sqrt(rs)));
        }
        let mut p = r.clone();
        while iterations < max_iterations {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SolverFailure {
                    iterations,
                    residual: math::sqrt(rs),
                    target,
                });
            }
            let alpha = rs / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            post_iterate(&mut x);
            for i in 0..n {
                r[i] -= alpha * ap[i];
            }
            let rs_new = dot(&r, &r);
            iterations += 1;
            if math::sqrt(rs_new) <= target {
                // accept only if the true residual agrees
                apply(&x, &mut ap);
                let mut true_rs = 0.0;
                for i in 0..n {
                    let d = b[i] - ap[i];
                    true_rs += d * d;
                }
                if math::sqrt(true_rs) <= target {
                    return Ok((x, iterations, math::sqrt(true_rs)));
                }
                break; // restart from the true residual
            }
            let beta = rs_new / rs;
            rs = rs_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if iterations >= max_iterations {
            apply(&x, &mut ap);
            let mut true_rs = 0.0;
            for i in 0..n {
                let d = b[i] - ap[i];
                true_rs += d * d;
            }
            return Err(Error::SolverFailure {
                iterations,
                residual: math::sqrt(true_rs),
                target,
            });
        }
    }
}

/// Largest system the dense Cholesky path will accept.
pub const CHOLESKY_MAX_CELLS: usize = 4096;

fn dense_cholesky_solve(masses: &[f64], tau: f64, a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>> {
    let n = masses.len();
    if n > CHOLESKY_MAX_CELLS {
        return Err(Error::InvalidArgument(format!(
            "direct Cholesky is limited to {CHOLESKY_MAX_CELLS} cells, got {n}"
        )));
    }
    // dense M + tau*A, lower triangle used
    let mut mat = alloc::vec![0.0; n * n];
    for i in 0..n {
        mat[i * n + i] = masses[i];
    }
    for (i, j, v) in a.triplets() {
        mat[i * n + j] += tau * v;
    }
    for j in 0..n {
        let mut d = mat[j * n + j];
        for k in 0..j {
            d -= mat[j * n + k] * mat[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::InvalidArgument(
                "matrix is not positive definite (Cholesky pivot <= 0)".into(),
            ));
        }
        let d = math::sqrt(d);
        mat[j * n + j] = d;
        for i in j + 1..n {
            let mut s = mat[i * n + j];
            for k in 0..j {
                s -= mat[i * n + k] * mat[j * n + k];
            }
            mat[i * n + j] = s / d;
        }
    }
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= mat[i * n + k] * x[k];
        }
        x[i] = s / mat[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= mat[k * n + i] * x[k];
        }
        x[i] = s / mat[i * n + i];
    }
    Ok(x)
}

/// Solves the implicit step system `(M + τA) u = rhs`, with `M = diag(m_K)`.
///
/// Conjugate gradients stop once the Euclidean residual drops below
/// `rel_tolerance · ‖rhs‖₂` and use `warm_start` when given; failure to
/// converge within the iteration budget reports the residual reached.
pub fn solve_spd(
    masses: &[f64],
    tau: f64,
    a: &SparseOperator,
    rhs: &Field,
    cfg: &SolverConfig,
    warm_start: Option<&Field>,
) -> Result<Field> {
    cfg.validate()?;
    let n = a.dimension();
    if masses.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: masses.len(),
        });
    }
    if rhs.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive and finite, got {tau}"
        )));
    }
    if masses.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidArgument(
            "all cell masses must be strictly positive".into(),
        ));
    }

    let values = match cfg.method {
        SolverMethod::Cholesky => dense_cholesky_solve(masses, tau, a, rhs.values())?,
        SolverMethod::ConjugateGradient => {
            let x0 = match warm_start {
                Some(w) if w.len() == n => w.values().to_vec(),
                Some(w) => {
                    return Err(Error::SizeMismatch {
                        expected: n,
                        found: w.len(),
                    })
                }
                None => alloc::vec![0.0; n],
            };
            let apply = |x: &[f64], y: &mut [f64]| {
                a.apply_into(x, y);
                for i in 0..n {
                    y[i] = masses[i] * x[i] + tau * y[i];
                }
            };
            conjugate_gradient(
                apply,
                rhs.values(),
                x0,
                cfg.rel_tolerance,
                cfg.max_iterations,
                |_| {},
            )?
            .0
        }
    };
    let out = Field::new(values);
    if !out.all_finite() {
        return Err(Error::NonFinite("solve_spd"));
    }
    Ok(out)
}

/// Net-source tolerance of the pure Neumann problem, relative to `‖b‖₂`.
const COMPATIBILITY_TOL: f64 = 1e-8;

/// Quadrature order used for the projection right-hand side and the mean.
const PROJECTION_QUAD_ORDER: usize = 4;

/// Computes the elliptic projection of a smooth function `w`: the unique
/// piecewise-constant field matching the cell integrals of `-Δw` under the
/// stiffness operator and carrying the same domain mean as `w`.
///
/// The singular Neumann system is solved by conjugate gradients kept on the
/// mean-zero complement (right-hand side and iterates are projected against
/// the measure-weighted constant), then shifted so the mean condition holds
/// exactly. Rejects data whose Laplacian has a nonzero net integral, since
/// no solution exists then.
pub fn elliptic_project<F, G>(w: F, laplacian: G, mesh: &Mesh, cfg: &SolverConfig) -> Result<Field>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    cfg.validate()?;
    let n = mesh.n_cells();
    let a = assemble_stiffness(mesh);

    // b_K = -∫_K Δw
    let lap_avg = cell_average_project(&laplacian, mesh, PROJECTION_QUAD_ORDER)?;
    let mut b: Vec<f64> = (0..n)
        .map(|k| -mesh.measure(k) * lap_avg.values()[k])
        .collect();
    let net: f64 = b.iter().sum();
    let b_norm = norm2(&b);
    if math::abs(net) > COMPATIBILITY_TOL * b_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::IncompatibleRhs {
            net,
            norm: b_norm,
        });
    }
    let volume = mesh.domain_measure();
    let shift = net / volume;
    for (bk, m) in b.iter_mut().zip(mesh.measures()) {
        *bk -= shift * m;
    }

    let masses = mesh.measures().to_vec();
    let apply = |x: &[f64], y: &mut [f64]| a.apply_into(x, y);
    let project = |x: &mut [f64]| {
        let mut mean = 0.0;
        for (v, m) in x.iter().zip(&masses) {
            mean += v * m;
        }
        mean /= volume;
        for v in x.iter_mut() {
            *v -= mean;
        }
    };
    let (mut values, _, _) = conjugate_gradient(
        apply,
        &b,
        alloc::vec![0.0; n],
        cfg.rel_tolerance,
        cfg.max_iterations,
        project,
    )?;

    // mean condition: Σ m_K w̃_K = ∫ w
    let w_avg = cell_average_project(&w, mesh, PROJECTION_QUAD_ORDER)?;
    let integral: f64 = w_avg
        .values()
        .iter()
        .zip(mesh.measures())
        .map(|(v, m)| v * m)
        .sum();
    let mut mean = 0.0;
    for (v, m) in values.iter().zip(mesh.measures()) {
        mean += v * m;
    }
    let correction = (integral - mean) / volume;
    for v in values.iter_mut() {
        *v += correction;
    }

    let out = Field::new(values);
    if !out.all_finite() {
        return Err(Error::NonFinite("elliptic_project"));
    }
    Ok(out)
}
