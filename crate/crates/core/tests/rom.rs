mod common;

use fs_ddrom::dg::{assemble_monolithic, solve};
use fs_ddrom::fs_models::ReactionSystem;
use fs_ddrom::mesh::Bounds;
use fs_ddrom::rom::{
    estimate, generate_snapshots, online_solve, pod, project, reconstruction_error, Estimator, ReducedBasis, SnapshotSet, Truncation,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_space() -> fs_ddrom::dg::DGSpace {
    common::space_on(8, 8, Bounds::unit_square(), 1, 3)
}

#[test]
fn snapshot_file_roundtrip() {
    let sp = small_space();
    let family = |p: &[f64]| common::kappa_system(p[0]);
    let snaps = generate_snapshots(&family, &sp, &common::kappa_params(3)).unwrap();
    let path = std::env::temp_dir().join(format!("fs-ddrom-roundtrip-{}.bin", std::process::id()));
    snaps.save(&path).unwrap();
    let back = SnapshotSet::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(back, snaps);
}

/// Tail energy from the eigenvalues of `X^t X`, independent of the SVD used by `pod`.
fn tail_from_gram(x: &DMatrix<f64>, r: usize) -> f64 {
    let mut ev: Vec<f64> = (x.transpose() * x).symmetric_eigenvalues().iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.iter().skip(r).sum::<f64>().sqrt()
}

#[test]
fn reconstruction_error_is_tail_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..20 {
        let x = DMatrix::from_fn(50, 10, |_, j| rng.gen_range(-1.0..1.0) * 0.6f64.powi(j as i32));
        let r = rng.gen_range(1..10);
        let b = pod(&x, Truncation::Rank(r)).unwrap();
        let err = reconstruction_error(&x, &b.v);
        let tail = tail_from_gram(&x, r);
        assert!((err - tail).abs() <= 1e-10 * tail, "{err} vs {tail}");
        assert!((err - b.tail_energy()).abs() <= 1e-10 * tail);
    }
}

#[test]
fn projection_with_identity_and_unit_vector() {
    let sp = common::space_on(2, 2, Bounds::unit_square(), 1, 3);
    let asm = assemble_monolithic(common::kappa_system(0.3).unwrap().as_ref(), &sp).unwrap();
    let n = sp.num_dofs();
    let id = ReducedBasis::from_columns(DMatrix::identity(n, n));
    let rs = project(&asm, &id).unwrap();
    assert_eq!(rs.b, asm.a.to_dense());
    let (_, z) = online_solve(&rs, &id).unwrap();
    let zh = solve(&asm).unwrap();
    assert!(z.iter().zip(&zh).all(|(a, b)| (a - b).abs() <= 1e-10));
    let e1 = ReducedBasis::from_columns(DMatrix::from_fn(n, 1, |i, _| (i == 0) as u8 as f64));
    assert_eq!(project(&asm, &e1).unwrap().b[(0, 0)], asm.a.get(0, 0));
    let empty = ReducedBasis::from_columns(DMatrix::zeros(n, 0));
    assert!(online_solve(&project(&asm, &empty).unwrap(), &empty).is_err());
    let wrong = ReducedBasis::from_columns(DMatrix::zeros(n + 1, 1));
    assert!(project(&asm, &wrong).is_err());
}

#[test]
fn training_snapshots_are_reproduced() {
    let sp = small_space();
    let family = |p: &[f64]| common::kappa_system(p[0]);
    let params = common::kappa_params(4);
    let snaps = generate_snapshots(&family, &sp, &params).unwrap();
    let basis = pod(&snaps.matrix, Truncation::Rank(4)).unwrap();
    for (j, p) in params.iter().enumerate() {
        let asm = assemble_monolithic(family(p).unwrap().as_ref(), &sp).unwrap();
        let (_, z) = online_solve(&project(&asm, &basis).unwrap(), &basis).unwrap();
        let zh: Vec<f64> = snaps.matrix.column(j).iter().copied().collect();
        let e: Vec<f64> = z.iter().zip(&zh).map(|(a, b)| a - b).collect();
        assert!((asm.mass.quad_form(&e) / asm.mass.quad_form(&zh)).sqrt() <= 1e-8);
    }
}

#[test]
fn exact_reduced_solution_has_zero_estimators() {
    let sp = small_space();
    let asm = assemble_monolithic(common::kappa_system(0.2).unwrap().as_ref(), &sp).unwrap();
    let zh = solve(&asm).unwrap();
    let e = estimate(&asm, &zh, Some(&zh)).unwrap();
    for v in [e.eta_r, e.eta_l, e.eta_r_energy, e.eta_l_energy, e.err_l2.unwrap(), e.err_r.unwrap()] {
        assert!(v <= 1e-8, "{v}");
    }
    let deployed = estimate(&asm, &zh, None).unwrap();
    assert!(!deployed.fom_denominators && deployed.err_l2.is_none());
}

#[test]
fn reaction_estimator_is_exact_in_l2() {
    let sp = common::space_on(4, 4, Bounds::unit_square(), 2, 1);
    let sys = ReactionSystem::new(1.0, 1.0).unwrap();
    let asm = assemble_monolithic(&sys, &sp).unwrap();
    let zh = solve(&asm).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z: Vec<f64> = zh.iter().map(|v| v + 0.1 * rng.gen_range(-1.0..1.0)).collect();
    let e = estimate(&asm, &z, Some(&zh)).unwrap();
    assert!((e.eta_l - e.err_l2.unwrap()).abs() <= 1e-10);
}

#[test]
fn estimators_bound_errors_on_parametric_family() {
    let sp = small_space();
    let family = |p: &[f64]| common::kappa_system(p[0]);
    let reports = common::rom_sweep(&family, &sp, &common::kappa_params(20), 5, &[1, 2, 3]);
    let mut prev = f64::INFINITY;
    for rep in &reports {
        assert_eq!(rep.violations(), 0);
        for row in &rep.rows {
            let e = row.estimate;
            assert!(e.eta_l >= e.err_l2.unwrap());
            assert!(e.err_energy.unwrap() <= e.eta_r_energy + 1e-10);
            assert!(e.err_energy.unwrap() <= e.eta_l_energy + 1e-10);
        }
        let train = rep.mean_l2(true).unwrap();
        assert!(train <= prev);
        prev = train;
    }
}

#[test]
fn cached_estimator_matches_one_shot() {
    let sp = small_space();
    let asm = assemble_monolithic(common::kappa_system(0.4).unwrap().as_ref(), &sp).unwrap();
    let zh = solve(&asm).unwrap();
    let z: Vec<f64> = zh.iter().map(|v| v * 0.9).collect();
    assert_eq!(Estimator::new(&asm).unwrap().estimate(&z, Some(&zh)).unwrap(), estimate(&asm, &z, Some(&zh)).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pod_modes_are_orthonormal_and_errors_decrease(seed in 0u64..1000, rows in 5usize..30, cols in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
        let avail = rows.min(cols);
        let mut prev = f64::INFINITY;
        for r in 1..=avail {
            let b = pod(&x, Truncation::Rank(r)).unwrap();
            prop_assert!((b.v.transpose() * &b.v - DMatrix::identity(r, r)).amax() <= 1e-10);
            prop_assert!(b.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let err = reconstruction_error(&x, &b.v);
            prop_assert!(err <= prev + 1e-12);
            prev = err;
        }
    }
}
