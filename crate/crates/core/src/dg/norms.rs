//! Norms of discrete fields and of discretization errors.

use rayon::prelude::*;

use super::{AssembledSystem, DGSpace, ExactSolution};
use crate::error::{Error, Result};
use crate::fs_models::FriedrichsSystem;
use crate::linalg::sym_abs;
use crate::mesh::FaceKind;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    pub l2: f64,
    /// `sqrt(a_h(e, e))`.
    pub energy: f64,
    pub r_norm: f64,
    /// `|e|_S`.
    pub jump_seminorm: f64,
    /// `|e|_M`.
    pub boundary_seminorm: f64,
    pub triple: f64,
    pub triple_star: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Squares {
    l2: f64,
    vol_energy: f64,
    bm: f64,
    s: f64,
    deriv: f64,
    star: f64,
}

impl Squares {
    fn report(&self, mu0: f64, energy_sq: f64) -> NormReport {
        let c = |v: f64| v.max(0.0);
        let base = c(self.l2) + c(self.bm) + c(self.s);
        let triple_sq = base + c(self.deriv);
        NormReport {
            l2: c(self.l2).sqrt(),
            energy: c(energy_sq).sqrt(),
            r_norm: (mu0 * c(self.l2) + c(self.bm) + c(self.s)).sqrt(),
            jump_seminorm: c(self.s).sqrt(),
            boundary_seminorm: c(self.bm).sqrt(),
            triple: triple_sq.sqrt(),
            triple_star: (triple_sq + c(self.star)).sqrt(),
        }
    }
}

/// Norms of `v`, or of the error `v - exact` when a solution is supplied.
///
/// Without `exact` every norm is a quadratic form in the assembled Gram
/// matrices. With `exact` the error is integrated against the callable with
/// the assembly quadrature; the energy norm then uses
/// `a_h(e, e) = sum_T ((A0 - X/2) e, e) + |e|_M^2 + |e|_S^2`.
pub fn norms(
    asm: &AssembledSystem,
    space: &DGSpace,
    sys: &dyn FriedrichsSystem,
    v: &[f64],
    exact: Option<&dyn ExactSolution>,
) -> Result<NormReport> {
    if v.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch { context: "norm input", expected: space.num_dofs(), found: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("norm input".into()));
    }
    let rep = match exact {
        None => {
            let sq = Squares {
                l2: asm.mass.quad_form(v),
                vol_energy: 0.0,
                bm: asm.boundary_m.quad_form(v),
                s: asm.stab.quad_form(v),
                deriv: asm.deriv.quad_form(v),
                star: asm.star.quad_form(v),
            };
            sq.report(asm.mu0, asm.a.quad_form(v))
        }
        Some(ex) => {
            if ex.m() != space.m {
                return Err(Error::DimensionMismatch { context: "exact solution components", expected: space.m, found: ex.m() });
            }
            let sq = error_squares(space, sys, v, ex);
            sq.report(asm.mu0, sq.vol_energy + sq.bm + sq.s)
        }
    };
    Ok(rep)
}

fn error_squares(space: &DGSpace, sys: &dyn FriedrichsSystem, v: &[f64], ex: &dyn ExactSolution) -> Squares {
    let mesh = &space.mesh;
    let cells: Vec<Squares> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let h = mesh.cells[cell].h;
            let (pts, wts) = mesh.cell_quadrature(cell, &space.cell_rule);
            let mut sq = Squares::default();
            for (&x, &w) in pts.iter().zip(&wts) {
                let e = space.evaluate(v, cell, x) - ex.value(x);
                let gv = space.evaluate_gradient(v, cell, x);
                let gz = ex.gradient(x);
                let de = sys.ak(0, x) * (&gv[0] - &gz[0]) + sys.ak(1, x) * (&gv[1] - &gz[1]);
                let e2 = e.norm_squared();
                sq.l2 += w * e2;
                sq.vol_energy += w * e.dot(&((sys.a0(x) - sys.x_field(x) * 0.5) * &e));
                sq.deriv += w * h * de.norm_squared();
                sq.star += w * e2 / h;
            }
            sq
        })
        .collect();
    let faces: Vec<Squares> = (0..mesh.faces.len())
        .into_par_iter()
        .map(|fid| {
            let face = &mesh.faces[fid];
            let (pts, wts) = face.quadrature(&space.face_rule);
            let mut sq = Squares::default();
            for (&x, &w) in pts.iter().zip(&wts) {
                match face.kind {
                    FaceKind::Boundary(side) => {
                        let e = space.evaluate(v, face.owners[0], x) - ex.value(x);
                        let n = face.normal;
                        sq.bm += 0.5 * w * e.dot(&(sys.boundary_m(x, n, side) * &e));
                        sq.s += w * e.dot(&(sys.boundary_s(x, n, side) * &e));
                        sq.star += w * e.norm_squared();
                    }
                    FaceKind::Interior => {
                        let z = ex.value(x);
                        let e1 = space.evaluate(v, face.owners[0], x) - &z;
                        let e2 = space.evaluate(v, face.owners[1], x) - &z;
                        let jump = &e1 - &e2;
                        let si = sym_abs(&sys.boundary_d(x, face.normal)) * sys.interface_scale();
                        sq.s += w * jump.dot(&(si * &jump));
                        sq.star += w * (e1.norm_squared() + e2.norm_squared());
                    }
                }
            }
            sq
        })
        .collect();
    cells.iter().chain(&faces).fold(Squares::default(), |acc, s| Squares {
        l2: acc.l2 + s.l2,
        vol_energy: acc.vol_energy + s.vol_energy,
        bm: acc.bm + s.bm,
        s: acc.s + s.s,
        deriv: acc.deriv + s.deriv,
        star: acc.star + s.star,
    })
}
