//! Closed-form solutions used for consistency and convergence checks.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::Result;
use crate::fs_models::{make_adr_system, AdrSystem, BoundaryTags, Field, Kappa, Point, Velocity};

/// A smooth vector field with its gradient.
pub trait ExactSolution: Send + Sync {
    fn m(&self) -> usize;
    fn value(&self, x: Point) -> DVector<f64>;
    /// `[d_x z, d_y z]`.
    fn gradient(&self, x: Point) -> [DVector<f64>; 2];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSolution(pub DVector<f64>);

impl ExactSolution for ConstantSolution {
    fn m(&self) -> usize {
        self.0.len()
    }
    fn value(&self, _x: Point) -> DVector<f64> {
        self.0.clone()
    }
    fn gradient(&self, _x: Point) -> [DVector<f64>; 2] {
        [DVector::zeros(self.0.len()), DVector::zeros(self.0.len())]
    }
}

/// Scalar function with first and second derivatives.
pub trait ScalarFunction: Send + Sync {
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> [f64; 2];
    fn hessian(&self, x: Point) -> [[f64; 2]; 2];
}

/// `c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic(pub [f64; 6]);

impl ScalarFunction for Quadratic {
    fn value(&self, x: Point) -> f64 {
        let c = self.0;
        c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]
    }
    fn gradient(&self, x: Point) -> [f64; 2] {
        let c = self.0;
        [c[1] + 2.0 * c[3] * x[0] + c[4] * x[1], c[2] + c[4] * x[0] + 2.0 * c[5] * x[1]]
    }
    fn hessian(&self, _x: Point) -> [[f64; 2]; 2] {
        let c = self.0;
        [[2.0 * c[3], c[4]], [c[4], 2.0 * c[5]]]
    }
}

/// `sin(kx x) cos(ky y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trig {
    pub kx: f64,
    pub ky: f64,
}

impl ScalarFunction for Trig {
    fn value(&self, x: Point) -> f64 {
        (self.kx * x[0]).sin() * (self.ky * x[1]).cos()
    }
    fn gradient(&self, x: Point) -> [f64; 2] {
        let (sx, cx) = (self.kx * x[0]).sin_cos();
        let (sy, cy) = (self.ky * x[1]).sin_cos();
        [self.kx * cx * cy, -self.ky * sx * sy]
    }
    fn hessian(&self, x: Point) -> [[f64; 2]; 2] {
        let (sx, cx) = (self.kx * x[0]).sin_cos();
        let (sy, cy) = (self.ky * x[1]).sin_cos();
        let xy = -self.kx * self.ky * cx * sy;
        [[-self.kx * self.kx * sx * cy, xy], [xy, -self.ky * self.ky * sx * cy]]
    }
}

/// Advection-diffusion-reaction solution `(sigma, u) = (-kappa grad u, u)` for a
/// given `u`, with the matching source.
#[derive(Clone)]
pub struct AdrManufactured<U> {
    pub u: U,
    pub kappa: f64,
    pub beta: Velocity,
    pub mu: f64,
}

impl<U: ScalarFunction + Clone + 'static> AdrManufactured<U> {
    pub fn new(u: U, kappa: f64, beta: Velocity, mu: f64) -> Self {
        Self { u, kappa, beta, mu }
    }

    /// Source `(0, 0, -kappa lap u + beta . grad u + mu u)`.
    pub fn source(&self) -> Field {
        let me = self.clone();
        Arc::new(move |x| {
            let g = me.u.gradient(x);
            let h = me.u.hessian(x);
            let b = me.beta.at(x);
            let f = -me.kappa * (h[0][0] + h[1][1]) + b[0] * g[0] + b[1] * g[1] + me.mu * me.u.value(x);
            DVector::from_vec(vec![0.0, 0.0, f])
        })
    }

    /// The system with this source and the exact solution as boundary data.
    pub fn system(&self, tags: BoundaryTags) -> Result<AdrSystem> {
        let me = self.clone();
        let data: Field = Arc::new(move |x| me.value(x));
        make_adr_system(Kappa::Constant(self.kappa), self.beta, self.mu, tags, Some(self.source()), Some(data))
    }
}

impl<U: ScalarFunction> ExactSolution for AdrManufactured<U> {
    fn m(&self) -> usize {
        3
    }
    fn value(&self, x: Point) -> DVector<f64> {
        let g = self.u.gradient(x);
        DVector::from_vec(vec![-self.kappa * g[0], -self.kappa * g[1], self.u.value(x)])
    }
    fn gradient(&self, x: Point) -> [DVector<f64>; 2] {
        let g = self.u.gradient(x);
        let h = self.u.hessian(x);
        let k = self.kappa;
        [
            DVector::from_vec(vec![-k * h[0][0], -k * h[1][0], g[0]]),
            DVector::from_vec(vec![-k * h[0][1], -k * h[1][1], g[1]]),
        ]
    }
}
