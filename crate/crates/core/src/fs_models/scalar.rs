//! Scalar systems (`m = 1`): pure reaction and upwinded advection-reaction.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Field, FriedrichsSystem, Point};
use crate::error::{invalid, Result};
use crate::mesh::Side;

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

impl std::fmt::Debug for ReactionSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReactionSystem").field("a0", &self.a0).finish()
    }
}

impl std::fmt::Debug for AdvectionReaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdvectionReaction").field("beta", &self.beta).field("mu", &self.mu).finish()
    }
}

/// `a0 z = f` with no derivatives and no boundary operator.
#[derive(Clone)]
pub struct ReactionSystem {
    pub a0: f64,
    source: Field,
}

impl ReactionSystem {
    pub fn new(a0: f64, f: f64) -> Result<Self> {
        Self::with_source(a0, Arc::new(move |_| DVector::from_element(1, f)))
    }

    pub fn with_source(a0: f64, source: Field) -> Result<Self> {
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(invalid(format!("reaction coefficient must be positive (got {a0})")));
        }
        Ok(Self { a0, source })
    }
}

impl FriedrichsSystem for ReactionSystem {
    fn m(&self) -> usize {
        1
    }
    fn a0(&self, _x: Point) -> DMatrix<f64> {
        scalar(self.a0)
    }
    fn ak(&self, _k: usize, _x: Point) -> DMatrix<f64> {
        scalar(0.0)
    }
    fn x_field(&self, _x: Point) -> DMatrix<f64> {
        scalar(0.0)
    }
    fn source(&self, x: Point) -> DVector<f64> {
        (self.source)(x)
    }
    fn boundary_data(&self, _x: Point) -> DVector<f64> {
        DVector::zeros(1)
    }
    fn boundary_m(&self, _x: Point, _n: Point, _side: Side) -> DMatrix<f64> {
        scalar(0.0)
    }
    fn mu0(&self) -> f64 {
        self.a0
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("a0".into(), self.a0)]
    }
}

/// `beta . grad z + mu z = f` with inflow data `g`, using `M = |beta . n|`.
#[derive(Clone)]
pub struct AdvectionReaction {
    pub beta: [f64; 2],
    pub mu: f64,
    source: Field,
    data: Field,
}

impl AdvectionReaction {
    /// `mu = 0` is accepted (the system then has no coercivity margin).
    pub fn new(beta: [f64; 2], mu: f64, source: Field, data: Field) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() || !beta.iter().all(|b| b.is_finite()) {
            return Err(invalid(format!("invalid advection-reaction coefficients beta={beta:?}, mu={mu}")));
        }
        Ok(Self { beta, mu, source, data })
    }
}

impl FriedrichsSystem for AdvectionReaction {
    fn m(&self) -> usize {
        1
    }
    fn a0(&self, _x: Point) -> DMatrix<f64> {
        scalar(self.mu)
    }
    fn ak(&self, k: usize, _x: Point) -> DMatrix<f64> {
        scalar(self.beta[k])
    }
    fn x_field(&self, _x: Point) -> DMatrix<f64> {
        scalar(0.0)
    }
    fn source(&self, x: Point) -> DVector<f64> {
        (self.source)(x)
    }
    fn boundary_data(&self, x: Point) -> DVector<f64> {
        (self.data)(x)
    }
    fn boundary_m(&self, _x: Point, n: Point, _side: Side) -> DMatrix<f64> {
        scalar((self.beta[0] * n[0] + self.beta[1] * n[1]).abs())
    }
    fn mu0(&self) -> f64 {
        self.mu
    }
    fn params(&self) -> Vec<(String, f64)> {
        vec![("mu".into(), self.mu)]
    }
}
