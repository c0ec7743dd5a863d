//! Discontinuous Galerkin discretization of Friedrichs' systems.

mod assembly;
mod convergence;
mod exact;
mod norms;

pub use assembly::{
    assemble, assemble_adjoint, assemble_monolithic, boundary_face_kernel, cell_kernel, interior_face_kernel, solve,
    AssembledSystem, BlockView, LocalFace, LocalMatrices,
};
pub use convergence::{convergence_study, least_squares_slope, DegreeStudy, LevelError, EXACT_TOL};
pub use exact::{AdrManufactured, ConstantSolution, ExactSolution, Quadratic, ScalarFunction, Trig};
pub use norms::{norms, NormReport};

use std::ops::Range;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::fs_models::Point;
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, gauss_lobatto, Rule};

/// Fully discontinuous tensor-product `Q_k` space with `m` components.
///
/// Local basis functions are Lagrange polynomials on the Gauss-Lobatto nodes;
/// local node `a + (k + 1) b` sits at reference point `(t_a, t_b)`. The global
/// index of `(cell, component, node)` is `cell * m * nloc + component * nloc + node`.
#[derive(Debug, Clone)]
pub struct DGSpace {
    pub mesh: Arc<Mesh>,
    pub degree: usize,
    pub m: usize,
    pub nodes: Vec<f64>,
    pub cell_rule: Rule,
    pub face_rule: Rule,
    /// Basis values at the tensor cell quadrature points, `[q][i]`.
    vol_vals: Vec<Vec<f64>>,
    /// Reference derivatives at the cell quadrature points, `[q][i]`.
    vol_ders: Vec<Vec<[f64; 2]>>,
}

impl DGSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, m: usize) -> Result<Self> {
        if degree == 0 {
            return Err(invalid("polynomial degree must be at least 1"));
        }
        if m == 0 {
            return Err(invalid("number of components must be positive"));
        }
        let nloc = (degree + 1) * (degree + 1);
        mesh.num_cells()
            .checked_mul(nloc)
            .and_then(|v| v.checked_mul(m))
            .ok_or_else(|| invalid("number of degrees of freedom overflows"))?;
        let nodes = gauss_lobatto(degree + 1).nodes;
        let cell_rule = gauss_legendre(degree + 2);
        let face_rule = cell_rule.clone();
        let mut space = Self { mesh, degree, m, nodes, cell_rule, face_rule, vol_vals: Vec::new(), vol_ders: Vec::new() };
        let rule = space.cell_rule.clone();
        for &yb in &rule.nodes {
            for &xa in &rule.nodes {
                let (v, d) = space.reference_basis([xa, yb]);
                space.vol_vals.push(v);
                space.vol_ders.push(d);
            }
        }
        Ok(space)
    }

    /// Basis functions per component and cell.
    pub fn nloc(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn cell_dofs(&self) -> usize {
        self.m * self.nloc()
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_cells() * self.cell_dofs()
    }

    pub fn dof(&self, cell: usize, comp: usize, node: usize) -> usize {
        cell * self.cell_dofs() + comp * self.nloc() + node
    }

    pub fn cell_range(&self, cell: usize) -> Range<usize> {
        let n = self.cell_dofs();
        cell * n..(cell + 1) * n
    }

    /// Global dofs of a set of cells, in cell order.
    pub fn dofs_of_cells(&self, cells: &[usize]) -> Vec<usize> {
        cells.iter().flat_map(|&c| self.cell_range(c)).collect()
    }

    /// 1D Lagrange basis on the Lobatto nodes: values and derivatives at `t`.
    pub fn basis_1d(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let mut vals = vec![0.0; n];
        let mut ders = vec![0.0; n];
        for a in 0..n {
            let mut v = 1.0;
            for b in 0..n {
                if b != a {
                    v *= (t - self.nodes[b]) / (self.nodes[a] - self.nodes[b]);
                }
            }
            vals[a] = v;
            let mut d = 0.0;
            for c in 0..n {
                if c == a {
                    continue;
                }
                let mut p = 1.0 / (self.nodes[a] - self.nodes[c]);
                for b in 0..n {
                    if b != a && b != c {
                        p *= (t - self.nodes[b]) / (self.nodes[a] - self.nodes[b]);
                    }
                }
                d += p;
            }
            ders[a] = d;
        }
        (vals, ders)
    }

    /// Tensor basis at a reference point: values and reference gradients.
    pub fn reference_basis(&self, r: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (vx, dx) = self.basis_1d(r[0]);
        let (vy, dy) = self.basis_1d(r[1]);
        let k1 = self.degree + 1;
        let mut vals = Vec::with_capacity(k1 * k1);
        let mut ders = Vec::with_capacity(k1 * k1);
        for b in 0..k1 {
            for a in 0..k1 {
                vals.push(vx[a] * vy[b]);
                ders.push([dx[a] * vy[b], vx[a] * dy[b]]);
            }
        }
        (vals, ders)
    }

    /// Basis values and physical gradients at a physical point of `cell`.
    pub fn basis_at(&self, cell: usize, x: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
        let c = &self.mesh.cells[cell];
        let (v, d) = self.reference_basis(c.to_reference(&x));
        let w = c.widths();
        let (sx, sy) = (2.0 / w[0], 2.0 / w[1]);
        (v, d.into_iter().map(|g| [g[0] * sx, g[1] * sy]).collect())
    }

    /// Quadrature points, weights, basis values and physical gradients on a cell.
    pub(crate) fn cell_tables(&self, cell: usize) -> (Vec<Point>, Vec<f64>, &[Vec<f64>], Vec<Vec<[f64; 2]>>) {
        let (pts, wts) = self.mesh.cell_quadrature(cell, &self.cell_rule);
        let w = self.mesh.cells[cell].widths();
        let (sx, sy) = (2.0 / w[0], 2.0 / w[1]);
        let grads = self.vol_ders.iter().map(|row| row.iter().map(|g| [g[0] * sx, g[1] * sy]).collect()).collect();
        (pts, wts, &self.vol_vals, grads)
    }

    pub fn node_point(&self, cell: usize, node: usize) -> Point {
        let k1 = self.degree + 1;
        self.mesh.cells[cell].from_reference(&[self.nodes[node % k1], self.nodes[node / k1]])
    }

    /// Value of the discrete field `v` at a point of `cell`.
    pub fn evaluate(&self, v: &[f64], cell: usize, x: Point) -> DVector<f64> {
        let (phi, _) = self.basis_at(cell, x);
        let base = cell * self.cell_dofs();
        let nloc = self.nloc();
        DVector::from_fn(self.m, |c, _| (0..nloc).map(|i| v[base + c * nloc + i] * phi[i]).sum())
    }

    /// Broken gradient `(d_x v, d_y v)` at a point of `cell`.
    pub fn evaluate_gradient(&self, v: &[f64], cell: usize, x: Point) -> [DVector<f64>; 2] {
        let (_, grad) = self.basis_at(cell, x);
        let base = cell * self.cell_dofs();
        let nloc = self.nloc();
        let comp = |k: usize| DVector::from_fn(self.m, |c, _| (0..nloc).map(|i| v[base + c * nloc + i] * grad[i][k]).sum());
        [comp(0), comp(1)]
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        let nloc = self.nloc();
        for cell in 0..self.mesh.num_cells() {
            for node in 0..nloc {
                let val = f(self.node_point(cell, node));
                for c in 0..self.m {
                    out[self.dof(cell, c, node)] = val[c];
                }
            }
        }
        out
    }
}
