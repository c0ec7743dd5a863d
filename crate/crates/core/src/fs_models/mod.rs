//! Friedrichs' systems: coefficient fields, boundary operators and axiom checks.
//!
//! A system on a two-dimensional domain is described pointwise by the
//! matrices `A0(x)`, `A^1(x)`, `A^2(x)`, the divergence `X(x) = sum_k d_k A^k`,
//! a source `f`, boundary data `g` and a boundary operator `M(x, n)`.

mod adr;
mod elasticity;
mod maxwell;
mod scalar;
mod transform;

pub use adr::{make_adr_system, AdrSystem, BcKind, BoundaryTags, Kappa, Velocity};
pub use elasticity::{make_elasticity_system_2d, ElasticitySystem};
pub use maxwell::{make_maxwell_matrices, MaxwellMatrices};
pub use scalar::{AdvectionReaction, ReactionSystem};
pub use transform::{dissipative_transform, DissipativeTransform};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::linalg::{null_space, rank, row_space_projector};
use crate::mesh::{FaceKind, Mesh, Side};
use crate::quadrature::gauss_legendre;

pub type Point = [f64; 2];

/// Vector-valued field `x -> R^m`.
pub type Field = Arc<dyn Fn(Point) -> DVector<f64> + Send + Sync>;

/// Relative singular-value threshold for numerical kernels.
pub const KERNEL_TOL: f64 = 1e-10;

/// A Friedrichs' system posed on a planar domain.
pub trait FriedrichsSystem: Send + Sync {
    /// Number of equations.
    fn m(&self) -> usize;

    fn d(&self) -> usize {
        2
    }

    fn a0(&self, x: Point) -> DMatrix<f64>;

    /// `A^k(x)` for `k` in `0..d`.
    fn ak(&self, k: usize, x: Point) -> DMatrix<f64>;

    /// `X(x) = sum_k d_k A^k(x)`.
    fn x_field(&self, x: Point) -> DMatrix<f64>;

    fn source(&self, x: Point) -> DVector<f64>;

    fn boundary_data(&self, x: Point) -> DVector<f64>;

    /// Boundary operator on the boundary segment `side`.
    fn boundary_m(&self, x: Point, n: Point, side: Side) -> DMatrix<f64>;

    /// Boundary stabilization: orthogonal projector onto the range of `(M - D)^t`.
    fn boundary_s(&self, x: Point, n: Point, side: Side) -> DMatrix<f64> {
        let md = self.boundary_m(x, n, side) - self.boundary_d(x, n);
        row_space_projector(&md, KERNEL_TOL)
    }

    /// Scale `alpha` of the interface stabilization `alpha |D_F|`.
    fn interface_scale(&self) -> f64 {
        1.0
    }

    fn mu0(&self) -> f64;

    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }

    /// `D(x, n) = sum_k n_k A^k(x)`.
    fn boundary_d(&self, x: Point, n: Point) -> DMatrix<f64> {
        let mut d = self.ak(0, x) * n[0];
        for k in 1..self.d() {
            d += self.ak(k, x) * n[k];
        }
        d
    }
}

impl<S: FriedrichsSystem + ?Sized> FriedrichsSystem for Arc<S> {
    fn m(&self) -> usize {
        (**self).m()
    }
    fn d(&self) -> usize {
        (**self).d()
    }
    fn a0(&self, x: Point) -> DMatrix<f64> {
        (**self).a0(x)
    }
    fn ak(&self, k: usize, x: Point) -> DMatrix<f64> {
        (**self).ak(k, x)
    }
    fn x_field(&self, x: Point) -> DMatrix<f64> {
        (**self).x_field(x)
    }
    fn source(&self, x: Point) -> DVector<f64> {
        (**self).source(x)
    }
    fn boundary_data(&self, x: Point) -> DVector<f64> {
        (**self).boundary_data(x)
    }
    fn boundary_m(&self, x: Point, n: Point, side: Side) -> DMatrix<f64> {
        (**self).boundary_m(x, n, side)
    }
    fn boundary_s(&self, x: Point, n: Point, side: Side) -> DMatrix<f64> {
        (**self).boundary_s(x, n, side)
    }
    fn interface_scale(&self) -> f64 {
        (**self).interface_scale()
    }
    fn mu0(&self) -> f64 {
        (**self).mu0()
    }
    fn params(&self) -> Vec<(String, f64)> {
        (**self).params()
    }
    fn boundary_d(&self, x: Point, n: Point) -> DMatrix<f64> {
        (**self).boundary_d(x, n)
    }
}

/// `D = sum_k n_k A^k` at `x`, rejecting non-unit normals.
pub fn boundary_d(sys: &dyn FriedrichsSystem, x: Point, n: &[f64]) -> Result<DMatrix<f64>> {
    if n.len() != sys.d() {
        return Err(Error::DimensionMismatch { context: "boundary_d normal", expected: sys.d(), found: n.len() });
    }
    let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("normal must have unit length (got {norm})")));
    }
    Ok(sys.boundary_d(x, [n[0], n[1]]))
}

/// Diagnostics of the boundary algebra at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDiagnostic {
    pub x: Vec<f64>,
    pub normal: Vec<f64>,
    /// Eigenvalues of `M + M^t`, ascending.
    pub m_sym_eigenvalues: Vec<f64>,
    /// Dimension of `ker(D - M) + ker(D + M)`.
    pub kernel_rank: usize,
    pub monotone: bool,
    pub strictly_adjoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCheckResult {
    pub monotone: bool,
    pub strictly_adjoint: bool,
    pub symmetric: bool,
    pub max_asymmetry: f64,
    pub positive: bool,
    /// Smallest eigenvalue of `(A0 + A0^t - X) / 2` over the sampled points.
    pub min_positivity_eigenvalue: f64,
    pub points: Vec<PointDiagnostic>,
}

impl BoundaryCheckResult {
    pub fn all_passed(&self) -> bool {
        self.monotone && self.strictly_adjoint && self.symmetric && self.positive
    }
}

/// Checks monotonicity and strict adjointness of `M` against `D` at one point.
pub fn check_boundary_point(d: &DMatrix<f64>, m: &DMatrix<f64>) -> (Vec<f64>, usize, bool, bool) {
    let dim = d.nrows();
    let sym = m + m.transpose();
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let monotone = eig.first().map_or(true, |&l| l >= -1e-10);
    let k1 = null_space(&(d - m), KERNEL_TOL);
    let k2 = null_space(&(d + m), KERNEL_TOL);
    let mut both = DMatrix::zeros(dim, k1.ncols() + k2.ncols());
    both.columns_mut(0, k1.ncols()).copy_from(&k1);
    both.columns_mut(k1.ncols(), k2.ncols()).copy_from(&k2);
    let r = if both.ncols() == 0 { 0 } else { rank(&both, KERNEL_TOL) };
    (eig, r, monotone, r == dim)
}

fn finite(mat: &DMatrix<f64>, what: &str) -> Result<()> {
    if mat.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// Checks symmetry and positivity at `interior` points and admissibility of
/// the boundary operator at `boundary` points `(x, n, side)`.
pub fn check_axioms_at(
    sys: &dyn FriedrichsSystem,
    interior: &[Point],
    boundary: &[(Point, Point, Side)],
) -> Result<BoundaryCheckResult> {
    let mut max_asym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for &x in interior {
        for k in 0..sys.d() {
            let a = sys.ak(k, x);
            finite(&a, "A^k")?;
            max_asym = max_asym.max((&a - a.transpose()).amax());
        }
        let a0 = sys.a0(x);
        let xf = sys.x_field(x);
        finite(&a0, "A0")?;
        finite(&xf, "X")?;
        let p = (&a0 + a0.transpose() - xf) * 0.5;
        min_eig = min_eig.min(crate::linalg::min_sym_eigenvalue(&p));
    }
    let mut points = Vec::with_capacity(boundary.len());
    for &(x, n, side) in boundary {
        let d = sys.boundary_d(x, n);
        let m = sys.boundary_m(x, n, side);
        finite(&d, "D")?;
        finite(&m, "M")?;
        let (eig, kernel_rank, monotone, adjoint) = check_boundary_point(&d, &m);
        points.push(PointDiagnostic {
            x: x.to_vec(),
            normal: n.to_vec(),
            m_sym_eigenvalues: eig,
            kernel_rank,
            monotone,
            strictly_adjoint: adjoint,
        });
    }
    let mu0 = sys.mu0();
    Ok(BoundaryCheckResult {
        monotone: points.iter().all(|p| p.monotone),
        strictly_adjoint: points.iter().all(|p| p.strictly_adjoint),
        symmetric: max_asym <= 1e-12,
        max_asymmetry: max_asym,
        positive: interior.is_empty() || min_eig >= mu0 - 1e-10,
        min_positivity_eigenvalue: min_eig,
        points,
    })
}

/// Runs [`check_axioms_at`] on the 3x3 Gauss points of every cell and the
/// 3 Gauss points of every boundary face.
pub fn check_axioms(sys: &dyn FriedrichsSystem, mesh: &Mesh) -> Result<BoundaryCheckResult> {
    let rule = gauss_legendre(3);
    let interior: Vec<Point> = (0..mesh.num_cells()).flat_map(|c| mesh.cell_quadrature(c, &rule).0).collect();
    let mut boundary = Vec::new();
    for (_, face) in mesh.boundary_faces() {
        if let FaceKind::Boundary(side) = face.kind {
            for x in face.quadrature(&rule).0 {
                boundary.push((x, face.normal, side));
            }
        }
    }
    check_axioms_at(sys, &interior, &boundary)
}

/// Smallest eigenvalue of `(A0 + A0^t - X) / 2` over a set of points.
pub fn positivity_margin(sys: &dyn FriedrichsSystem, points: &[Point]) -> f64 {
    points
        .iter()
        .map(|&x| {
            let a0 = sys.a0(x);
            crate::linalg::min_sym_eigenvalue(&((&a0 + a0.transpose() - sys.x_field(x)) * 0.5))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Cell quadrature points used to sample coefficient fields.
pub(crate) fn sample_points(mesh: &Mesh) -> Vec<Point> {
    let rule = gauss_legendre(3);
    (0..mesh.num_cells()).flat_map(|c| mesh.cell_quadrature(c, &rule).0).collect()
}
