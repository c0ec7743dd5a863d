//! Compressible linear elasticity in stress-displacement form, `d = 2`.
//!
//! Unknowns `z = (sigma_11, sigma_12, sigma_21, sigma_22, u_1, u_2)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{BcKind, BoundaryTags, Field, FriedrichsSystem, Point};
use crate::error::{invalid, Result};
use crate::linalg::min_sym_eigenvalue;
use crate::mesh::Side;

const D: usize = 2;
const NS: usize = D * D;
const M: usize = NS + D;

#[derive(Clone)]
pub struct ElasticitySystem {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub tags: BoundaryTags,
    a0: DMatrix<f64>,
    source: Field,
    data: Field,
    mu0: f64,
}

impl std::fmt::Debug for ElasticitySystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ElasticitySystem")
            .field("mu1", &self.mu1)
            .field("mu2", &self.mu2)
            .field("mu3", &self.mu3)
            .field("mu0", &self.mu0)
            .finish()
    }
}

/// `E^k` as an `NS x D` matrix: `E^k_{(ij), l} = -(d_ik d_jl + d_il d_jk) / 2`.
fn e_tensor(k: usize) -> DMatrix<f64> {
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    DMatrix::from_fn(NS, D, |row, l| {
        let (i, j) = (row / D, row % D);
        -0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
    })
}

/// `N = sum_k n_k E^k`.
fn n_tensor(n: Point) -> DMatrix<f64> {
    e_tensor(0) * n[0] + e_tensor(1) * n[1]
}

fn with_off_diagonal(upper: &DMatrix<f64>, lower: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(M, M);
    a.view_mut((0, NS), (NS, D)).copy_from(upper);
    a.view_mut((NS, 0), (D, NS)).copy_from(lower);
    a
}

/// Builds the elasticity system. Requires `mu1 >= 0`, `mu2 > 0`, `mu3 >= 0`;
/// `source` and `data` are 6-vectors and default to zero.
pub fn make_elasticity_system_2d(
    mu1: f64,
    mu2: f64,
    mu3: f64,
    tags: BoundaryTags,
    source: Option<Field>,
    data: Option<Field>,
) -> Result<ElasticitySystem> {
    if !(mu1 >= 0.0 && mu2 > 0.0 && mu3 >= 0.0) || !(mu1 + mu2 + mu3).is_finite() {
        return Err(invalid(format!("elastic moduli must satisfy mu1 >= 0, mu2 > 0, mu3 >= 0 (got {mu1}, {mu2}, {mu3})")));
    }
    let trace = DVector::from_fn(NS, |r, _| if r / D == r % D { 1.0 } else { 0.0 });
    let z = &trace * trace.transpose();
    let factor = mu1 / (2.0 * mu2 + D as f64 * mu1);
    let mut a0 = DMatrix::zeros(M, M);
    a0.view_mut((0, 0), (NS, NS)).copy_from(&(DMatrix::identity(NS, NS) - z * factor));
    a0.view_mut((NS, NS), (D, D)).copy_from(&(DMatrix::identity(D, D) * (mu3 / (2.0 * mu2))));
    let mu0 = min_sym_eigenvalue(&a0).max(0.0);
    let zero: Field = Arc::new(|_| DVector::zeros(M));
    Ok(ElasticitySystem {
        mu1,
        mu2,
        mu3,
        tags,
        a0,
        source: source.unwrap_or_else(|| zero.clone()),
        data: data.unwrap_or(zero),
        mu0,
    })
}

impl FriedrichsSystem for ElasticitySystem {
    fn m(&self) -> usize {
        M
    }

    fn a0(&self, _x: Point) -> DMatrix<f64> {
        self.a0.clone()
    }

    fn ak(&self, k: usize, _x: Point) -> DMatrix<f64> {
        let e = e_tensor(k);
        with_off_diagonal(&e, &e.transpose())
    }

    fn x_field(&self, _x: Point) -> DMatrix<f64> {
        DMatrix::zeros(M, M)
    }

    fn source(&self, x: Point) -> DVector<f64> {
        (self.source)(x)
    }

    fn boundary_data(&self, x: Point) -> DVector<f64> {
        (self.data)(x)
    }

    fn boundary_m(&self, _x: Point, n: Point, side: Side) -> DMatrix<f64> {
        let nt = n_tensor(n);
        match self.tags.on(side) {
            BcKind::Dirichlet => with_off_diagonal(&(-&nt), &nt.transpose()),
            BcKind::Neumann => with_off_diagonal(&nt, &(-nt.transpose())),
        }
    }

    fn mu0(&self) -> f64 {
        self.mu0
    }

    fn params(&self) -> Vec<(String, f64)> {
        vec![("mu1".into(), self.mu1), ("mu2".into(), self.mu2), ("mu3".into(), self.mu3)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fs_models::check_axioms_at;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn sys(mu1: f64, mu2: f64, mu3: f64) -> ElasticitySystem {
        make_elasticity_system_2d(mu1, mu2, mu3, BoundaryTags::all(BcKind::Dirichlet), None, None).unwrap()
    }

    #[test]
    fn no_trace_coupling_without_first_modulus() {
        let s = sys(0.0, 2.0, 1.0);
        let mut want = DMatrix::identity(M, M);
        want[(4, 4)] = 0.25;
        want[(5, 5)] = 0.25;
        assert_eq!(s.a0([0.0, 0.0]), want);
    }

    #[test]
    fn stress_block_spectrum() {
        let s = sys(1.0, 1.0, 2.0);
        let block = s.a0([0.0, 0.0]).view((0, 0), (NS, NS)).into_owned();
        let mut eig: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (got, want) in eig.iter().zip([0.5, 1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((s.mu0() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn normal_block_is_symmetrized_outer_product() {
        let s = sys(1.0, 1.0, 1.0);
        let d = s.boundary_d([0.0, 0.0], [1.0, 0.0]);
        let u = DVector::from_vec(vec![0.3, -0.7]);
        let mut z = DVector::zeros(M);
        z.rows_mut(NS, D).copy_from(&u);
        let got = d * z;
        // -(n (x) u + u (x) n) / 2 with n = e_1, flattened row-major
        let want = [-0.3, 0.35, 0.35, 0.0];
        for r in 0..NS {
            assert!((got[r] - want[r]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonpositive_shear_modulus() {
        assert!(make_elasticity_system_2d(1.0, 0.0, 1.0, BoundaryTags::all(BcKind::Dirichlet), None, None).is_err());
        assert!(make_elasticity_system_2d(-1.0, 1.0, 1.0, BoundaryTags::all(BcKind::Dirichlet), None, None).is_err());
    }

    proptest! {
        #[test]
        fn admissible_for_random_normals(theta in 0.0..std::f64::consts::TAU, neumann in any::<bool>(),
                                         mu1 in 0.0..5.0f64, mu2 in 0.1..5.0f64, mu3 in 0.1..5.0f64) {
            let kind = if neumann { BcKind::Neumann } else { BcKind::Dirichlet };
            let s = make_elasticity_system_2d(mu1, mu2, mu3, BoundaryTags::all(kind), None, None).unwrap();
            let n = [theta.cos(), theta.sin()];
            let res = check_axioms_at(&s, &[[0.1, 0.2]], &[([0.0, 0.0], n, Side::Left)]).unwrap();
            prop_assert!(res.all_passed());
            let m = s.boundary_m([0.0, 0.0], n, Side::Left);
            prop_assert!((&m + m.transpose()).amax() <= 1e-12);
        }
    }
}
