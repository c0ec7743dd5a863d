//! Exponential change of unknowns `z = exp(beta xi . x) v` that adds
//! `beta sum_k xi_k A^k` to the reaction term.

use nalgebra::{DMatrix, DVector};

use super::{positivity_margin, sample_points, FriedrichsSystem, Point};
use crate::error::{invalid, Error, Result};
use crate::mesh::{Mesh, Side};

#[derive(Debug, Clone)]
pub struct DissipativeTransform<S> {
    pub inner: S,
    pub xi: [f64; 2],
    pub beta: f64,
    mu0: f64,
}

/// Wraps `sys`; positivity of the new reaction term is re-checked on the cell
/// quadrature points of `mesh`.
pub fn dissipative_transform<S: FriedrichsSystem>(sys: S, xi: [f64; 2], beta: f64, mesh: &Mesh) -> Result<DissipativeTransform<S>> {
    let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("xi must be a unit vector (got length {norm})")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta must be nonnegative (got {beta})")));
    }
    let mut t = DissipativeTransform { inner: sys, xi, beta, mu0: 0.0 };
    let margin = positivity_margin(&t, &sample_points(mesh));
    if !(margin > 0.0) {
        return Err(Error::PositivityViolated { min_eigenvalue: margin });
    }
    t.mu0 = margin;
    Ok(t)
}

impl<S: FriedrichsSystem> DissipativeTransform<S> {
    /// `exp(beta xi . x)`, the factor mapping transformed solutions back.
    pub fn weight(&self, x: Point) -> f64 {
        (self.beta * (self.xi[0] * x[0] + self.xi[1] * x[1])).exp()
    }
}

impl<S: FriedrichsSystem> FriedrichsSystem for DissipativeTransform<S> {
    fn m(&self) -> usize {
        self.inner.m()
    }
    fn d(&self) -> usize {
        self.inner.d()
    }
    fn a0(&self, x: Point) -> DMatrix<f64> {
        let mut a = self.inner.a0(x);
        for k in 0..self.d() {
            a += self.inner.ak(k, x) * (self.beta * self.xi[k]);
        }
        a
    }
    fn ak(&self, k: usize, x: Point) -> DMatrix<f64> {
        self.inner.ak(k, x)
    }
    fn x_field(&self, x: Point) -> DMatrix<f64> {
        self.inner.x_field(x)
    }
    fn source(&self, x: Point) -> DVector<f64> {
        self.inner.source(x) / self.weight(x)
    }
    fn boundary_data(&self, x: Point) -> DVector<f64> {
        self.inner.boundary_data(x) / self.weight(x)
    }
    fn boundary_m(&self, x: Point, n: Point, side: Side) -> DMatrix<f64> {
        self.inner.boundary_m(x, n, side)
    }
    fn boundary_s(&self, x: Point, n: Point, side: Side) -> DMatrix<f64> {
        self.inner.boundary_s(x, n, side)
    }
    fn interface_scale(&self) -> f64 {
        self.inner.interface_scale()
    }
    fn mu0(&self) -> f64 {
        self.mu0
    }
    fn params(&self) -> Vec<(String, f64)> {
        let mut p = self.inner.params();
        p.push(("transform_beta".into(), self.beta));
        p
    }
}
