//! Fast invariant suite behind `fvshe selftest`.
//!
//! Five structural checks that a broken build cannot pass: the discrete
//! integration-by-parts identity, the per-step mass identity, noise-free
//! energy decay, manufactured-solution recovery, and cross-grid/discrete
//! norm consistency. A debug fault hook can flip one transmissibility sign
//! to prove the identity check actually bites.

use fvshe_core::{
    aggregate_increments, assemble_stiffness, build_rect_mesh, cell_average_project,
    cross_mesh_l2_error, discrete_l2_norm, fvs_step, sample_increments, simulate,
    simulate_observed, BoundingBox, Field, InitialData, InteriorEdge, Mesh, NoiseModel,
    SolverConfig, SparseOperator,
};

/// Debug fault injection for verifying the suite catches real breakage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negate the flux coefficient of the first interior edge before the
    /// integration-by-parts check.
    FlipTransmissibility,
}

impl Fault {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Fault::None),
            "flip-transmissibility" => Ok(Fault::FlipTransmissibility),
            _ => Err(format!(
                "unknown fault `{s}` (expected `none` or `flip-transmissibility`)"
            )),
        }
    }
}

fn splitmix_field(seed: u64, n: usize) -> Field {
    let mut s = seed;
    let mut next = move || {
        s = s.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    Field::new(
        (0..n)
            .map(|_| (next() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
            .collect(),
    )
}

fn assemble_with_fault(mesh: &Mesh, fault: Fault) -> SparseOperator {
    match fault {
        Fault::None => assemble_stiffness(mesh),
        Fault::FlipTransmissibility => {
            let mut edges: Vec<InteriorEdge> = mesh.edges().to_vec();
            if let Some(first) = edges.first_mut() {
                first.measure = -first.measure;
            }
            let tampered = Mesh::from_parts(
                mesh.dim(),
                (0..mesh.n_cells()).map(|k| mesh.center(k)).collect(),
                mesh.measures().to_vec(),
                (0..mesh.n_cells()).map(|k| mesh.diameter(k)).collect(),
                edges,
                mesh.domain_measure(),
                *mesh.bbox(),
                mesh.grid(),
            );
            assemble_stiffness(&tampered)
        }
    }
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check_integration_by_parts(fault: Fault) -> Check {
    let mesh = build_rect_mesh(16, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let a = assemble_with_fault(&mesh, fault);
    let mut worst = 0.0f64;
    for seed in 0..25u64 {
        let w = splitmix_field(2 * seed + 1, mesh.n_cells());
        let v = splitmix_field(2 * seed + 2, mesh.n_cells());
        let aw = a.apply(&w).unwrap();
        let lhs: f64 = aw.values().iter().zip(v.values()).map(|(x, y)| x * y).sum();
        // edge form from the true, untampered geometry
        let mut rhs = 0.0;
        for e in mesh.edges() {
            rhs += e.transmissibility()
                * (w.values()[e.cells.0] - w.values()[e.cells.1])
                * (v.values()[e.cells.0] - v.values()[e.cells.1]);
        }
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-12));
    }
    Check {
        name: "integration-by-parts identity",
        passed: worst <= 1e-12,
        detail: format!("max relative defect {worst:.3e}"),
    }
}

fn check_mass_identity() -> Check {
    let bb = BoundingBox::rect(-1.0, 1.0, -1.0, 1.0);
    let mesh = build_rect_mesh(16, &bb).unwrap();
    let a = assemble_stiffness(&mesh);
    let cfg = SolverConfig::cg(1e-12, SolverConfig::default_max_iterations(mesh.n_cells()));
    let u0 = InitialData::PaperPoly;
    let mut u = cell_average_project(|x, y| u0.eval(&bb, x, y), &mesh, 4).unwrap();
    let inc = sample_increments(2024, 0, 64, 1.0).unwrap();
    let volume = mesh.domain_measure();
    let mass = |f: &Field| -> f64 {
        f.values()
            .iter()
            .zip(mesh.measures())
            .map(|(v, m)| v * m)
            .sum()
    };
    let mut worst = 0.0f64;
    for d_w in inc.values() {
        let before = mass(&u);
        let g_mass: f64 = u
            .values()
            .iter()
            .zip(mesh.measures())
            .map(|(v, m)| m * NoiseModel::SqrtOnePlusSq.eval(*v))
            .sum();
        u = fvs_step(
            &u,
            *d_w,
            inc.tau(),
            &mesh,
            &a,
            NoiseModel::SqrtOnePlusSq,
            &cfg,
            None,
        )
        .unwrap();
        worst = worst.max((mass(&u) - before - g_mass * d_w).abs() / volume);
    }
    Check {
        name: "per-step mass identity",
        passed: worst <= 1e-9,
        detail: format!("max defect per unit mass {worst:.3e}"),
    }
}

fn check_energy_decay() -> Check {
    let bb = BoundingBox::rect(-1.0, 1.0, -1.0, 1.0);
    let mesh = build_rect_mesh(16, &bb).unwrap();
    let a = assemble_stiffness(&mesh);
    let cfg = SolverConfig::cg(1e-12, SolverConfig::default_max_iterations(mesh.n_cells()));
    let u0 = InitialData::PaperPoly;
    let init = cell_average_project(|x, y| u0.eval(&bb, x, y), &mesh, 4).unwrap();
    let inc = fvshe_core::BrownianIncrements::zero(64, 1.0);
    let mut prev = discrete_l2_norm(&init, &mesh);
    let mut worst = f64::MIN;
    simulate_observed(&init, &inc, &mesh, &a, NoiseModel::Zero, &cfg, |_, u| {
        let norm = discrete_l2_norm(u, &mesh);
        worst = worst.max(norm - prev);
        prev = norm;
    })
    .unwrap();
    Check {
        name: "noise-free energy decay",
        passed: worst <= 1e-10,
        detail: format!("max norm increase {worst:.3e}"),
    }
}

fn check_manufactured_solution() -> Check {
    let mesh = build_rect_mesh(32, &BoundingBox::rect(-1.0, 1.0, -1.0, 1.0)).unwrap();
    let a = assemble_stiffness(&mesh);
    let w = splitmix_field(99, mesh.n_cells());
    let tau = 0.01;
    let mut rhs = a.apply(&w).unwrap();
    for (i, r) in rhs.values_mut().iter_mut().enumerate() {
        *r = mesh.measure(i) * w.values()[i] + tau * *r;
    }
    let rtol = 1e-12;
    let cfg = SolverConfig::cg(rtol, SolverConfig::default_max_iterations(mesh.n_cells()));
    let u = fvshe_core::solve_spd(mesh.measures(), tau, &a, &rhs, &cfg, None).unwrap();
    let diff = Field::new(
        u.values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a - b)
            .collect(),
    );
    let rel = discrete_l2_norm(&diff, &mesh) / discrete_l2_norm(&w, &mesh);
    Check {
        name: "manufactured-solution recovery",
        passed: rel <= 10.0 * rtol,
        detail: format!("relative error {rel:.3e}"),
    }
}

fn check_cross_mesh_consistency() -> Check {
    let bb = BoundingBox::rect(-1.0, 1.0, -1.0, 1.0);
    let m1 = build_rect_mesh(12, &bb).unwrap();
    let w1 = splitmix_field(5, m1.n_cells());
    let w2 = splitmix_field(6, m1.n_cells());
    let diff = Field::new(
        w1.values()
            .iter()
            .zip(w2.values())
            .map(|(a, b)| a - b)
            .collect(),
    );
    let direct = discrete_l2_norm(&diff, &m1).powi(2);
    let overlap = cross_mesh_l2_error(&w1, &m1, &w2, &m1).unwrap();
    let same_grid_defect = (direct - overlap).abs() / direct.max(1e-300);

    // coupling sanity on top: a coarse aggregated path reproduces the fine
    // total displacement
    let fine = sample_increments(7, 3, 64, 1.0).unwrap();
    let coarse = aggregate_increments(&fine, 16).unwrap();
    let mesh1 = build_rect_mesh(1, &bb).unwrap();
    let a1 = assemble_stiffness(&mesh1);
    let cfg = SolverConfig::cg(1e-12, 100);
    let z = Field::zeros(1);
    let uf = simulate(&z, &fine, &mesh1, &a1, NoiseModel::Zero, &cfg).unwrap();
    let uc = simulate(&z, &coarse, &mesh1, &a1, NoiseModel::Zero, &cfg).unwrap();
    let coupling_defect = (uf.values()[0] - uc.values()[0]).abs();

    Check {
        name: "cross-grid norm consistency",
        passed: same_grid_defect <= 1e-12 && coupling_defect <= 1e-12,
        detail: format!(
            "same-grid defect {same_grid_defect:.3e}, coupling defect {coupling_defect:.3e}"
        ),
    }
}

/// Runs the suite, printing one PASS/FAIL line per check via `sink`.
/// Returns true iff everything passed.
pub fn run_selftest(fault: Fault, mut sink: impl FnMut(&str)) -> bool {
    let checks = [
        check_integration_by_parts(fault),
        check_mass_identity(),
        check_energy_decay(),
        check_manufactured_solution(),
        check_cross_mesh_consistency(),
    ];
    let mut all = true;
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        sink(&format!("{status} {} ({})", c.name, c.detail));
        all &= c.passed;
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let mut lines = Vec::new();
        assert!(run_selftest(Fault::None, |l| lines.push(l.to_string())));
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().all(|l| l.starts_with("PASS")));
    }

    #[test]
    fn flipped_transmissibility_is_caught() {
        let mut lines = Vec::new();
        assert!(!run_selftest(Fault::FlipTransmissibility, |l| lines
            .push(l.to_string())));
        assert!(lines[0].starts_with("FAIL"), "{}", lines[0]);
    }

    #[test]
    fn output_is_deterministic() {
        let mut a = String::new();
        run_selftest(Fault::None, |l| {
            a.push_str(l);
            a.push('\n');
        });
        let mut b = String::new();
        run_selftest(Fault::None, |l| {
            b.push_str(l);
            b.push('\n');
        });
        assert_eq!(a, b);
    }
}
