//! Maxwell's equations in the diffusive regime, `d = 3`, at matrix level.
//!
//! Unknowns `z = (H, E)`; `A0 = diag(mu I, sigma I)`, `A^k = [[0, R^k], [R^k^t, 0]]`
//! with `R^k_ij = eps_ikj`, so that `sum_k n_k R^k` is the cross-product matrix of `n`.

use nalgebra::DMatrix;

use super::{check_boundary_point, BoundaryCheckResult, PointDiagnostic};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellMatrices {
    pub mu: f64,
    pub sigma: f64,
}

pub fn make_maxwell_matrices(mu: f64, sigma: f64) -> Result<MaxwellMatrices> {
    if !(mu > 0.0 && sigma > 0.0) || !(mu + sigma).is_finite() {
        return Err(invalid(format!("mu and sigma must be positive (got {mu}, {sigma})")));
    }
    Ok(MaxwellMatrices { mu, sigma })
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Cross-product matrix `T v = n x v`.
pub fn cross_matrix(n: [f64; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| (0..3).map(|k| levi_civita(i, k, j) * n[k]).sum())
}

fn blocks(upper: &DMatrix<f64>, lower: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(6, 6);
    a.view_mut((0, 3), (3, 3)).copy_from(upper);
    a.view_mut((3, 0), (3, 3)).copy_from(lower);
    a
}

impl MaxwellMatrices {
    pub fn a0(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(6, 6);
        for i in 0..3 {
            a[(i, i)] = self.mu;
            a[(i + 3, i + 3)] = self.sigma;
        }
        a
    }

    pub fn ak(&self, k: usize) -> DMatrix<f64> {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let r = cross_matrix(e);
        blocks(&r, &r.transpose())
    }

    pub fn boundary_d(&self, n: [f64; 3]) -> DMatrix<f64> {
        let t = cross_matrix(n);
        blocks(&t, &t.transpose())
    }

    /// Operator prescribing the tangential electric field `n x E`.
    pub fn boundary_m(&self, n: [f64; 3]) -> DMatrix<f64> {
        let t = cross_matrix(n);
        blocks(&(-&t), &t.transpose())
    }

    pub fn mu0(&self) -> f64 {
        self.mu.min(self.sigma)
    }

    /// Symmetry, positivity and boundary admissibility for the given unit normals.
    pub fn check(&self, normals: &[[f64; 3]]) -> BoundaryCheckResult {
        let max_asym = (0..3).map(|k| (self.ak(k) - self.ak(k).transpose()).amax()).fold(0.0, f64::max);
        let min_eig = crate::linalg::min_sym_eigenvalue(&self.a0());
        let points: Vec<PointDiagnostic> = normals
            .iter()
            .map(|&n| {
                let (eig, kernel_rank, monotone, adjoint) = check_boundary_point(&self.boundary_d(n), &self.boundary_m(n));
                PointDiagnostic {
                    x: Vec::new(),
                    normal: n.to_vec(),
                    m_sym_eigenvalues: eig,
                    kernel_rank,
                    monotone,
                    strictly_adjoint: adjoint,
                }
            })
            .collect();
        BoundaryCheckResult {
            monotone: points.iter().all(|p| p.monotone),
            strictly_adjoint: points.iter().all(|p| p.strictly_adjoint),
            symmetric: max_asym <= 1e-12,
            max_asymmetry: max_asym,
            positive: min_eig >= self.mu0() - 1e-10,
            min_positivity_eigenvalue: min_eig,
            points,
        }
    }
}
