mod common;

use fs_ddrom::fs_models::{check_axioms, make_adr_system, BcKind, BoundaryTags, Kappa, Velocity};
use fs_ddrom::mesh::{build_cartesian_mesh, Bounds};

#[test]
fn random_systems_satisfy_axioms() {
    for seed in [1, 2] {
        for row in common::axiom_suite(seed, 120) {
            assert!(row.passed, "{}", row.name);
            assert!(row.boundary_points >= 100);
            assert!(row.max_asymmetry <= 1e-12, "{}", row.name);
            assert!(row.mu0_gap <= 1e-10, "{}: gap {}", row.name, row.mu0_gap);
        }
    }
}

#[test]
fn maxwell_mu0_is_min_of_coefficients() {
    assert_eq!(common::maxwell_mu0_mismatch(3, 10), 0.0);
}

#[test]
fn mesh_sampled_axioms_hold_for_variable_coefficients() {
    let mesh = build_cartesian_mesh(4, 4, Bounds::unit_square()).unwrap();
    let beta = Velocity::Poiseuille { vmax: 1.0, y0: 0.0, y1: 1.0 };
    let tags = BoundaryTags { left: BcKind::Dirichlet, right: BcKind::Neumann, bottom: BcKind::Dirichlet, top: BcKind::Dirichlet };
    let sys = make_adr_system(Kappa::PiecewiseX { split: 0.5, left: 0.1, right: 1.0 }, beta, 1.0, tags, None, None).unwrap();
    assert!(check_axioms(&sys, &mesh).unwrap().all_passed());
}

#[test]
fn transformed_solution_maps_back() {
    let err = common::transform_mismatch(6);
    assert!(err <= 1e-8, "{err:e}");
}
