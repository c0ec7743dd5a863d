#![allow(dead_code)]

use std::sync::Arc;

use fs_ddrom::dg::{assemble_monolithic, solve, DGSpace};
use fs_ddrom::fs_models::{dissipative_transform, make_adr_system, AdvectionReaction, BcKind, BoundaryTags, Field, FriedrichsSystem, Kappa, Velocity};
use fs_ddrom::mesh::{build_cartesian_mesh, Bounds};
use fs_ddrom::rom::{generate_snapshots, online_solve, pod, project, EstimatorReport, EstimatorRow, Estimator, ReducedBasis, SnapshotSet, Truncation};
use fs_ddrom::Result;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn space_on(nx: usize, ny: usize, bounds: Bounds, k: usize, m: usize) -> DGSpace {
    DGSpace::new(Arc::new(build_cartesian_mesh(nx, ny, bounds).unwrap()), k, m).unwrap()
}

/// Smooth one-parameter ADR family: diffusivity kappa, beta = (1, 0.5), mu = 1,
/// homogeneous Dirichlet data.
pub fn kappa_system(kappa: f64) -> Result<Box<dyn FriedrichsSystem>> {
    let f: Field = Arc::new(|x: [f64; 2]| DVector::from_vec(vec![0.0, 0.0, 1.0 + (2.0 * std::f64::consts::PI * x[0]).sin() * x[1]]));
    Ok(Box::new(make_adr_system(
        Kappa::Constant(kappa),
        Velocity::Constant([1.0, 0.5]),
        1.0,
        BoundaryTags::all(BcKind::Dirichlet),
        Some(f),
        None,
    )?))
}

/// `n` equispaced diffusivities in `[0.05, 0.5]`.
pub fn kappa_params(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![0.05 + 0.45 * i as f64 / (n - 1) as f64]).collect()
}

pub fn kappa_space() -> DGSpace {
    space_on(16, 16, Bounds::unit_square(), 1, 3)
}

/// Two-regime ADR on `[-1, 1] x [0, 1]`: fixed diffusivity 0.1 for `x < 0`,
/// the parameter for `x >= 0`; flow from left to right.
pub fn two_regime_system(kappa_right: f64) -> Result<Box<dyn FriedrichsSystem>> {
    let f: Field = Arc::new(|x: [f64; 2]| DVector::from_vec(vec![0.0, 0.0, 1.0 + x[1]]));
    Ok(Box::new(make_adr_system(
        Kappa::PiecewiseX { split: 0.0, left: 0.1, right: kappa_right },
        Velocity::Constant([1.0, 0.0]),
        1.0,
        BoundaryTags::all(BcKind::Dirichlet),
        Some(f),
        None,
    )?))
}

/// `n` geometrically spaced right diffusivities in `[0.05, 1]`.
pub fn two_regime_params(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![0.05 * 20f64.powf(i as f64 / (n - 1) as f64)]).collect()
}

/// Columns of cells are thin (hy < hx / 3) so that the three nearest
/// neighbours of every cell lie in its own column.
pub fn two_regime_space() -> DGSpace {
    space_on(8, 16, Bounds::new(-1.0, 1.0, 0.0, 1.0), 1, 3)
}

pub fn two_regime_snapshots(n: usize) -> (DGSpace, SnapshotSet) {
    let sp = two_regime_space();
    let family = |p: &[f64]| two_regime_system(p[0]);
    let snaps = generate_snapshots(&family, &sp, &two_regime_params(n)).unwrap();
    (sp, snaps)
}

/// Scalar snapshots on `[0, 1]^2` (4 x 16 cells): for `x < 1/2` every snapshot is a
/// multiple of the nonconstant field `1 + x + y^2` with large amplitude; for
/// `x >= 1/2` they are small random combinations of `1, x, y`.
pub fn rank_one_synthetic(seed: u64) -> (DGSpace, SnapshotSet) {
    let sp = space_on(4, 16, Bounds::unit_square(), 1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = 12;
    let coeffs: Vec<[f64; 3]> = (0..ns).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let nloc = sp.nloc();
    let x = DMatrix::from_fn(sp.num_dofs(), ns, |dof, s| {
        let (cell, node) = (dof / nloc, dof % nloc);
        let p = sp.node_point(cell, node);
        if sp.mesh.cells[cell].barycenter[0] < 0.5 {
            (1.0 + s as f64) * (1.0 + p[0] + p[1] * p[1])
        } else {
            let c = coeffs[s];
            0.1 * (c[0] + c[1] * p[0] + c[2] * p[1])
        }
    });
    let params = (0..ns).map(|s| vec![s as f64]).collect();
    (sp, SnapshotSet::new(x, params).unwrap())
}

/// Labels 0 for cells with barycenter left of `split`, 1 otherwise.
pub fn sign_labels(sp: &DGSpace, split: f64) -> Vec<usize> {
    sp.mesh.cells.iter().map(|c| usize::from(c.barycenter[0] >= split)).collect()
}

/// Monodomain ROM over `params`: POD of the training columns (every
/// `stride`-th parameter), then for each rank the estimator report over all
/// parameters.
pub fn rom_sweep(
    family: &(dyn Fn(&[f64]) -> Result<Box<dyn FriedrichsSystem>> + Sync),
    sp: &DGSpace,
    params: &[Vec<f64>],
    stride: usize,
    ranks: &[usize],
) -> Vec<EstimatorReport> {
    let (train, _) = fs_ddrom::rom::train_test_split(params.len(), stride);
    let train_params: Vec<Vec<f64>> = train.iter().map(|&i| params[i].clone()).collect();
    let snaps = generate_snapshots(family, sp, &train_params).unwrap();
    let rmax = *ranks.iter().max().unwrap();
    let full = pod(&snaps.matrix, Truncation::Rank(rmax)).unwrap();
    let bases: Vec<ReducedBasis> = ranks.iter().map(|&r| ReducedBasis::from_columns(full.v.columns(0, r).into_owned())).collect();
    let mut reports = vec![EstimatorReport::default(); ranks.len()];
    for (i, p) in params.iter().enumerate() {
        let asm = assemble_monolithic(family(p).unwrap().as_ref(), sp).unwrap();
        let zh = solve(&asm).unwrap();
        let est = Estimator::new(&asm).unwrap();
        for (basis, report) in bases.iter().zip(reports.iter_mut()) {
            let (_, z) = online_solve(&project(&asm, basis).unwrap(), basis).unwrap();
            let estimate = est.estimate(&z, Some(&zh)).unwrap();
            report.rows.push(EstimatorRow { param_index: i, is_train: i % stride == 0, estimate });
        }
    }
    reports
}

/// Outcome of the axiom checks for one randomly drawn system.
pub struct AxiomRow {
    pub name: String,
    pub passed: bool,
    pub boundary_points: usize,
    pub max_asymmetry: f64,
    /// `|lambda_min(1/2 (A0 + A0^t - X)) - mu0|`.
    pub mu0_gap: f64,
}

fn random_tags(rng: &mut ChaCha8Rng) -> BoundaryTags {
    let mut pick = || if rng.gen_bool(0.5) { BcKind::Dirichlet } else { BcKind::Neumann };
    BoundaryTags { left: pick(), right: pick(), bottom: pick(), top: pick() }
}

fn random_boundary_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<([f64; 2], [f64; 2], fs_ddrom::mesh::Side)> {
    use fs_ddrom::mesh::Side;
    (0..n)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..1.0);
            let side = [Side::Left, Side::Right, Side::Bottom, Side::Top][rng.gen_range(0..4)];
            let x = match side {
                Side::Left => [0.0, t],
                Side::Right => [1.0, t],
                Side::Bottom => [t, 0.0],
                Side::Top => [t, 1.0],
            };
            (x, side.outward_normal(), side)
        })
        .collect()
}

/// ADR, elasticity and Maxwell systems with random coefficients, each checked
/// at `npoints` random boundary points (random unit normals for Maxwell).
pub fn axiom_suite(seed: u64, npoints: usize) -> Vec<AxiomRow> {
    use fs_ddrom::fs_models::{check_axioms_at, make_elasticity_system_2d, make_maxwell_matrices};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for trial in 0..3 {
        let interior: Vec<[f64; 2]> = (0..50).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let boundary = random_boundary_points(&mut rng, npoints);
        let kappa = rng.gen_range(0.1..2.0);
        let beta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let mu = rng.gen_range(0.5..2.0);
        let adr = make_adr_system(Kappa::Constant(kappa), Velocity::Constant(beta), mu, random_tags(&mut rng), None, None).unwrap();
        let res = check_axioms_at(&adr, &interior, &boundary).unwrap();
        rows.push(AxiomRow {
            name: format!("adr #{trial}"),
            passed: res.all_passed(),
            boundary_points: res.points.len(),
            max_asymmetry: res.max_asymmetry,
            mu0_gap: (res.min_positivity_eigenvalue - adr.mu0()).abs(),
        });

        let (m1, m2, m3) = (rng.gen_range(0.0..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let el = make_elasticity_system_2d(m1, m2, m3, random_tags(&mut rng), None, None).unwrap();
        let res = check_axioms_at(&el, &interior, &boundary).unwrap();
        rows.push(AxiomRow {
            name: format!("elasticity #{trial}"),
            passed: res.all_passed(),
            boundary_points: res.points.len(),
            max_asymmetry: res.max_asymmetry,
            mu0_gap: (res.min_positivity_eigenvalue - el.mu0()).abs(),
        });

        let mx = make_maxwell_matrices(rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)).unwrap();
        let normals: Vec<[f64; 3]> = (0..npoints)
            .map(|_| loop {
                let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0f64..1.0)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n > 0.1 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            })
            .collect();
        let res = mx.check(&normals);
        rows.push(AxiomRow {
            name: format!("maxwell #{trial}"),
            passed: res.all_passed(),
            boundary_points: res.points.len(),
            max_asymmetry: res.max_asymmetry,
            mu0_gap: (res.min_positivity_eigenvalue - mx.mu0()).abs(),
        });
    }
    rows
}

/// Largest `|mu0 - min(mu, sigma)|` over `n` random Maxwell coefficient pairs.
pub fn maxwell_mu0_mismatch(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (mu, sigma) = (rng.gen_range(0.01..10.0), rng.gen_range(0.01..10.0));
            let mx = fs_ddrom::fs_models::make_maxwell_matrices(mu, sigma).unwrap();
            (mx.mu0() - mu.min(sigma)).abs().max((fs_ddrom::linalg::min_sym_eigenvalue(&mx.a0()) - mu.min(sigma)).abs())
        })
        .fold(0.0, f64::max)
}

/// `8 x 1` cells on `[0, 1] x [0, 1/8]`, scalar.
fn strip_space(k: usize) -> DGSpace {
    DGSpace::new(Arc::new(build_cartesian_mesh(8, 1, Bounds::new(0.0, 1.0, 0.0, 0.125)).unwrap()), k, 1).unwrap()
}

fn pure_advection() -> AdvectionReaction {
    let f: Field = Arc::new(|x: [f64; 2]| DVector::from_element(1, 1.0 + x[0].sin()));
    let g: Field = Arc::new(|_| DVector::from_element(1, 0.5));
    AdvectionReaction::new([1.0, 0.0], 0.0, f, g).unwrap()
}

/// Largest nodal difference between the direct solution and the transformed
/// solution multiplied back by the exponential weight.
pub fn transform_mismatch(k: usize) -> f64 {
    let sp = strip_space(k);
    let sys = pure_advection();
    let direct = solve(&assemble_monolithic(&sys, &sp).unwrap()).unwrap();
    let tr = dissipative_transform(sys, [1.0, 0.0], 2.0, &sp.mesh).unwrap();
    assert!(tr.mu0() > 0.0);
    let w = solve(&assemble_monolithic(&tr, &sp).unwrap()).unwrap();
    (0..sp.num_dofs())
        .map(|d| {
            let nloc = sp.nloc();
            let x = sp.node_point(d / nloc, d % nloc);
            (direct[d] - tr.weight(x) * w[d]).abs()
        })
        .fold(0.0, f64::max)
}

