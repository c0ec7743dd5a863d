//! Advection-diffusion-reaction in mixed first-order form.
//!
//! Unknowns `z = (sigma, u)` with `sigma = -kappa grad u`:
//! `sigma / kappa + grad u = f_sigma`, `div sigma + beta . grad u + mu u = f_u`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Field, FriedrichsSystem, Point};
use crate::error::{invalid, Error, Result};
use crate::mesh::Side;

/// Diffusivity: constant, or piecewise constant across the line `x = split`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Constant(f64),
    PiecewiseX { split: f64, left: f64, right: f64 },
}

impl Kappa {
    pub fn at(&self, x: Point) -> f64 {
        match *self {
            Kappa::Constant(k) => k,
            Kappa::PiecewiseX { split, left, right } => {
                if x[0] < split {
                    left
                } else {
                    right
                }
            }
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            Kappa::Constant(k) => k,
            Kappa::PiecewiseX { left, right, .. } => left.max(right),
        }
    }

    fn min(&self) -> f64 {
        match *self {
            Kappa::Constant(k) => k,
            Kappa::PiecewiseX { left, right, .. } => left.min(right),
        }
    }
}

/// Advection field given in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Velocity {
    Constant([f64; 2]),
    /// Channel profile `(4 vmax (y - y0)(y1 - y) / (y1 - y0)^2, 0)`; divergence free.
    Poiseuille { vmax: f64, y0: f64, y1: f64 },
    /// `b + G x`.
    Affine { b: [f64; 2], grad: [[f64; 2]; 2] },
}

impl Velocity {
    pub fn at(&self, x: Point) -> [f64; 2] {
        match *self {
            Velocity::Constant(b) => b,
            Velocity::Poiseuille { vmax, y0, y1 } => {
                [4.0 * vmax * (x[1] - y0) * (y1 - x[1]) / ((y1 - y0) * (y1 - y0)), 0.0]
            }
            Velocity::Affine { b, grad } => [
                b[0] + grad[0][0] * x[0] + grad[0][1] * x[1],
                b[1] + grad[1][0] * x[0] + grad[1][1] * x[1],
            ],
        }
    }

    pub fn divergence(&self) -> f64 {
        match *self {
            Velocity::Affine { grad, .. } => grad[0][0] + grad[1][1],
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// Prescribes `u`.
    Dirichlet,
    /// Prescribes `sigma . n + (beta . n) u / 2`.
    Neumann,
}

/// Boundary condition type on each side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryTags {
    pub left: BcKind,
    pub right: BcKind,
    pub bottom: BcKind,
    pub top: BcKind,
}

impl BoundaryTags {
    pub fn all(kind: BcKind) -> Self {
        Self { left: kind, right: kind, bottom: kind, top: kind }
    }

    pub fn on(&self, side: Side) -> BcKind {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }
}

#[derive(Clone)]
pub struct AdrSystem {
    pub kappa: Kappa,
    pub beta: Velocity,
    pub mu: f64,
    pub tags: BoundaryTags,
    source: Field,
    data: Field,
    mu0: f64,
}

impl std::fmt::Debug for AdrSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdrSystem")
            .field("kappa", &self.kappa)
            .field("beta", &self.beta)
            .field("mu", &self.mu)
            .field("tags", &self.tags)
            .field("mu0", &self.mu0)
            .finish()
    }
}

/// Builds the advection-diffusion-reaction system. `source` and `data` default to zero.
pub fn make_adr_system(
    kappa: Kappa,
    beta: Velocity,
    mu: f64,
    tags: BoundaryTags,
    source: Option<Field>,
    data: Option<Field>,
) -> Result<AdrSystem> {
    if !(kappa.min() > 0.0) || !kappa.max().is_finite() {
        return Err(invalid(format!("kappa must be positive (got {kappa:?})")));
    }
    if !mu.is_finite() {
        return Err(Error::NonFinite("reaction coefficient".into()));
    }
    let reaction = mu - 0.5 * beta.divergence();
    let mu0 = (1.0 / kappa.max()).min(reaction);
    if !(mu0 > 0.0) {
        return Err(Error::PositivityViolated { min_eigenvalue: mu0 });
    }
    let zero: Field = Arc::new(|_| DVector::zeros(3));
    Ok(AdrSystem {
        kappa,
        beta,
        mu,
        tags,
        source: source.unwrap_or_else(|| zero.clone()),
        data: data.unwrap_or(zero),
        mu0,
    })
}

impl FriedrichsSystem for AdrSystem {
    fn m(&self) -> usize {
        3
    }

    fn a0(&self, x: Point) -> DMatrix<f64> {
        let k = self.kappa.at(x);
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / k, 1.0 / k, self.mu]))
    }

    fn ak(&self, k: usize, x: Point) -> DMatrix<f64> {
        let b = self.beta.at(x);
        let mut a = DMatrix::zeros(3, 3);
        a[(k, 2)] = 1.0;
        a[(2, k)] = 1.0;
        a[(2, 2)] = b[k];
        a
    }

    fn x_field(&self, _x: Point) -> DMatrix<f64> {
        let mut xm = DMatrix::zeros(3, 3);
        xm[(2, 2)] = self.beta.divergence();
        xm
    }

    fn source(&self, x: Point) -> DVector<f64> {
        (self.source)(x)
    }

    fn boundary_data(&self, x: Point) -> DVector<f64> {
        (self.data)(x)
    }

    fn boundary_m(&self, _x: Point, n: Point, side: Side) -> DMatrix<f64> {
        let s = match self.tags.on(side) {
            BcKind::Dirichlet => 1.0,
            BcKind::Neumann => -1.0,
        };
        let mut m = DMatrix::zeros(3, 3);
        for k in 0..2 {
            m[(k, 2)] = -s * n[k];
            m[(2, k)] = s * n[k];
        }
        m
    }

    fn mu0(&self) -> f64 {
        self.mu0
    }

    fn params(&self) -> Vec<(String, f64)> {
        let mut p = match self.kappa {
            Kappa::Constant(k) => vec![("kappa".to_string(), k)],
            Kappa::PiecewiseX { left, right, .. } => {
                vec![("kappa_left".to_string(), left), ("kappa_right".to_string(), right)]
            }
        };
        p.push(("mu".to_string(), self.mu));
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fs_models::{check_axioms, check_axioms_at};
    use crate::mesh::{build_cartesian_mesh, Bounds};
    use proptest::prelude::*;

    fn adr(kappa: f64, beta: [f64; 2], mu: f64, tags: BoundaryTags) -> AdrSystem {
        make_adr_system(Kappa::Constant(kappa), Velocity::Constant(beta), mu, tags, None, None).unwrap()
    }

    #[test]
    fn coefficients_for_small_diffusivity() {
        let s = adr(0.05, [1.0, 0.0], 1.0, BoundaryTags::all(BcKind::Dirichlet));
        let a0 = s.a0([0.3, 0.3]);
        assert_eq!(a0, DMatrix::from_diagonal(&DVector::from_vec(vec![20.0, 20.0, 1.0])));
        assert_eq!(s.x_field([0.0, 0.0]), DMatrix::zeros(3, 3));
        assert_eq!(s.mu0(), 1.0);
    }

    #[test]
    fn boundary_d_matches_grad_div_form() {
        let s = adr(1.0, [0.7, -0.4], 1.0, BoundaryTags::all(BcKind::Dirichlet));
        let d = s.boundary_d([0.0, 0.0], [1.0, 0.0]);
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.7]);
        assert_eq!(d, want);
        let d = s.boundary_d([0.0, 0.0], [0.0, 1.0]);
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, -0.4]);
        assert_eq!(d, want);

        let s = adr(1.0, [0.0, 0.0], 1.0, BoundaryTags::all(BcKind::Dirichlet));
        let n = [0.6, 0.8];
        let d = s.boundary_d([0.0, 0.0], n);
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.6, 0.0, 0.0, 0.8, 0.6, 0.8, 0.0]);
        assert!((d - want).amax() < 1e-15);
    }

    #[test]
    fn dirichlet_operator_is_skew() {
        let s = adr(1.0, [1.0, 0.0], 1.0, BoundaryTags::all(BcKind::Dirichlet));
        let m = s.boundary_m([1.0, 0.5], [1.0, 0.0], Side::Right);
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m, want);
        assert_eq!(&m + m.transpose(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn dirichlet_stabilization_penalizes_only_the_scalar() {
        let s = adr(1.0, [1.0, 0.3], 1.0, BoundaryTags::all(BcKind::Dirichlet));
        let sb = s.boundary_s([0.0, 0.5], [-1.0, 0.0], Side::Left);
        let mut want = DMatrix::zeros(3, 3);
        want[(2, 2)] = 1.0;
        assert!((sb - want).amax() < 1e-12);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let tags = BoundaryTags::all(BcKind::Dirichlet);
        assert!(make_adr_system(Kappa::Constant(0.0), Velocity::Constant([0.0; 2]), 1.0, tags, None, None).is_err());
        let beta = Velocity::Affine { b: [0.0, 0.0], grad: [[2.0, 0.0], [0.0, 2.0]] };
        let err = make_adr_system(Kappa::Constant(1.0), beta, 1.0, tags, None, None).unwrap_err();
        assert!(matches!(err, Error::PositivityViolated { .. }));
    }

    #[test]
    fn mixed_tags_pass_axioms_on_mesh() {
        let tags = BoundaryTags { left: BcKind::Dirichlet, right: BcKind::Neumann, bottom: BcKind::Neumann, top: BcKind::Dirichlet };
        let beta = Velocity::Poiseuille { vmax: 1.5, y0: 0.0, y1: 1.0 };
        let s = make_adr_system(Kappa::PiecewiseX { split: 0.5, left: 0.1, right: 2.0 }, beta, 0.5, tags, None, None).unwrap();
        let mesh = build_cartesian_mesh(4, 3, Bounds::unit_square()).unwrap();
        let res = check_axioms(&s, &mesh).unwrap();
        assert!(res.all_passed(), "{res:?}");
    }

    proptest! {
        #[test]
        fn admissible_at_random_boundary_points(
            theta in 0.0..std::f64::consts::TAU,
            bx in -3.0..3.0f64, by in -3.0..3.0f64,
            x in 0.0..1.0f64, y in 0.0..1.0f64,
            neumann in any::<bool>(),
        ) {
            let kind = if neumann { BcKind::Neumann } else { BcKind::Dirichlet };
            let s = adr(0.3, [bx, by], 1.0, BoundaryTags::all(kind));
            let n = [theta.cos(), theta.sin()];
            let res = check_axioms_at(&s, &[[x, y]], &[([x, y], n, Side::Top)]).unwrap();
            prop_assert!(res.all_passed());
            let m = s.boundary_m([x, y], n, Side::Top);
            prop_assert!((&m + m.transpose()).amax() <= 1e-12);
            let dn = s.boundary_d([x, y], n) + s.boundary_d([x, y], [-n[0], -n[1]]);
            prop_assert!(dn.amax() <= 1e-12);
        }
    }
}
