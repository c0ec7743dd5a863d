//! Cell and face kernels and global assembly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::DGSpace;
use crate::error::{Error, Result};
use crate::fs_models::FriedrichsSystem;
use crate::linalg::{sym_abs, CsrMatrix};
use crate::mesh::{FaceKind, Partition};

/// Which of the two equivalent bilinear forms to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    /// Volume `(A z, y)`, boundary `(M - D) / 2`, interior `-(D_F [[z]], {{y}})`.
    Primal,
    /// Volume `(z, A~ y)`, boundary `(M + D) / 2`, interior `(D_F {{z}}, [[y]])`.
    Adjoint,
}

/// Dense contributions of one cell (or face) over the concatenated dofs of `cells`.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    pub cells: Vec<usize>,
    pub a: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub mass: Option<DMatrix<f64>>,
    pub deriv: Option<DMatrix<f64>>,
    pub stab: Option<DMatrix<f64>>,
    pub msym: Option<DMatrix<f64>>,
    pub star: DMatrix<f64>,
}

pub type LocalFace = LocalMatrices;

/// `mat[ro + (c, i), co + (c2, j)] += w P[c, c2] phi_r[i] phi_c[j]`.
#[allow(clippy::too_many_arguments)]
fn add_product(mat: &mut DMatrix<f64>, ro: usize, co: usize, w: f64, phi_r: &[f64], phi_c: &[f64], p: &DMatrix<f64>, nloc: usize) {
    for c in 0..p.nrows() {
        for c2 in 0..p.ncols() {
            let pc = w * p[(c, c2)];
            if pc == 0.0 {
                continue;
            }
            for i in 0..nloc {
                let f = pc * phi_r[i];
                for j in 0..nloc {
                    mat[(ro + c * nloc + i, co + c2 * nloc + j)] += f * phi_c[j];
                }
            }
        }
    }
}

fn cell_kernel_route(sys: &dyn FriedrichsSystem, space: &DGSpace, cell: usize, route: Route) -> LocalMatrices {
    let (m, nloc) = (space.m, space.nloc());
    let cd = m * nloc;
    let h = space.mesh.cells[cell].h;
    let (pts, wts, vals, grads) = space.cell_tables(cell);
    let mut a = DMatrix::zeros(cd, cd);
    let mut mass = DMatrix::zeros(cd, cd);
    let mut deriv = DMatrix::zeros(cd, cd);
    let mut rhs = DVector::zeros(cd);
    let ident = DMatrix::identity(m, m);
    for q in 0..pts.len() {
        let (x, w, phi, g) = (pts[q], wts[q], &vals[q], &grads[q]);
        let a0 = sys.a0(x);
        let ak = [sys.ak(0, x), sys.ak(1, x)];
        let f = sys.source(x);
        match route {
            Route::Primal => {
                for c in 0..m {
                    for c2 in 0..m {
                        let (p0, p1, p2) = (a0[(c, c2)], ak[0][(c, c2)], ak[1][(c, c2)]);
                        if p0 == 0.0 && p1 == 0.0 && p2 == 0.0 {
                            continue;
                        }
                        for i in 0..nloc {
                            let wi = w * phi[i];
                            for j in 0..nloc {
                                a[(c * nloc + i, c2 * nloc + j)] += wi * (p0 * phi[j] + p1 * g[j][0] + p2 * g[j][1]);
                            }
                        }
                    }
                }
            }
            Route::Adjoint => {
                let xf = sys.x_field(x);
                for c in 0..m {
                    for c2 in 0..m {
                        let p0 = a0[(c, c2)] - xf[(c2, c)];
                        let (p1, p2) = (ak[0][(c2, c)], ak[1][(c2, c)]);
                        if p0 == 0.0 && p1 == 0.0 && p2 == 0.0 {
                            continue;
                        }
                        for i in 0..nloc {
                            let di = p1 * g[i][0] + p2 * g[i][1];
                            for j in 0..nloc {
                                a[(c * nloc + i, c2 * nloc + j)] += w * (p0 * phi[i] - di) * phi[j];
                            }
                        }
                    }
                }
            }
        }
        add_product(&mut mass, 0, 0, w, phi, phi, &ident, nloc);
        for c in 0..m {
            for i in 0..nloc {
                rhs[c * nloc + i] += w * f[c] * phi[i];
            }
        }
        // rows of sum_k A^k d_k acting on the local basis
        let mut b = DMatrix::zeros(m, cd);
        for c in 0..m {
            for c2 in 0..m {
                let (p1, p2) = (ak[0][(c, c2)], ak[1][(c, c2)]);
                if p1 == 0.0 && p2 == 0.0 {
                    continue;
                }
                for j in 0..nloc {
                    b[(c, c2 * nloc + j)] += p1 * g[j][0] + p2 * g[j][1];
                }
            }
        }
        deriv += b.transpose() * &b * (w * h);
    }
    let star = &mass / h;
    LocalMatrices { cells: vec![cell], a, rhs, mass: Some(mass), deriv: Some(deriv), stab: None, msym: None, star }
}

fn boundary_face_kernel_route(sys: &dyn FriedrichsSystem, space: &DGSpace, face_id: usize, route: Route) -> LocalMatrices {
    let face = &space.mesh.faces[face_id];
    let FaceKind::Boundary(side) = face.kind else {
        panic!("face {face_id} is not a boundary face");
    };
    let cell = face.owners[0];
    let (m, nloc) = (space.m, space.nloc());
    let cd = m * nloc;
    let n = face.normal;
    let (pts, wts) = face.quadrature(&space.face_rule);
    let mut a = DMatrix::zeros(cd, cd);
    let mut stab = DMatrix::zeros(cd, cd);
    let mut msym = DMatrix::zeros(cd, cd);
    let mut star = DMatrix::zeros(cd, cd);
    let mut rhs = DVector::zeros(cd);
    let ident = DMatrix::identity(m, m);
    for (&x, &w) in pts.iter().zip(&wts) {
        let (phi, _) = space.basis_at(cell, x);
        let mm = sys.boundary_m(x, n, side);
        let d = sys.boundary_d(x, n);
        let sb = sys.boundary_s(x, n, side);
        let g = sys.boundary_data(x);
        let p_rhs = (&mm - &d) * 0.5 + &sb;
        let p = match route {
            Route::Primal => p_rhs.clone(),
            Route::Adjoint => (&mm + &d) * 0.5 + &sb,
        };
        add_product(&mut a, 0, 0, w, &phi, &phi, &p, nloc);
        add_product(&mut stab, 0, 0, w, &phi, &phi, &sb, nloc);
        add_product(&mut msym, 0, 0, w, &phi, &phi, &((&mm + mm.transpose()) * 0.25), nloc);
        add_product(&mut star, 0, 0, w, &phi, &phi, &ident, nloc);
        let pg = p_rhs * g;
        for c in 0..m {
            for i in 0..nloc {
                rhs[c * nloc + i] += w * pg[c] * phi[i];
            }
        }
    }
    LocalMatrices { cells: vec![cell], a, rhs, mass: None, deriv: None, stab: Some(stab), msym: Some(msym), star }
}

fn interior_face_kernel_route(sys: &dyn FriedrichsSystem, space: &DGSpace, face_id: usize, route: Route) -> LocalMatrices {
    let face = &space.mesh.faces[face_id];
    assert!(face.is_interior(), "face {face_id} is not interior");
    let cells = [face.owners[0], face.owners[1]];
    let (m, nloc) = (space.m, space.nloc());
    let cd = m * nloc;
    let n = face.normal;
    let alpha = sys.interface_scale();
    let (pts, wts) = face.quadrature(&space.face_rule);
    let mut a = DMatrix::zeros(2 * cd, 2 * cd);
    let mut stab = DMatrix::zeros(2 * cd, 2 * cd);
    let mut star = DMatrix::zeros(2 * cd, 2 * cd);
    let ident = DMatrix::identity(m, m);
    let sign = [1.0, -1.0];
    for (&x, &w) in pts.iter().zip(&wts) {
        let phis = [space.basis_at(cells[0], x).0, space.basis_at(cells[1], x).0];
        let d = sys.boundary_d(x, n);
        let s = sym_abs(&d) * alpha;
        for t in 0..2 {
            for sd in 0..2 {
                let jj = sign[t] * sign[sd];
                let p = match route {
                    Route::Primal => &d * (-0.5 * sign[sd]) + &s * jj,
                    Route::Adjoint => &d * (0.5 * sign[t]) + &s * jj,
                };
                add_product(&mut a, t * cd, sd * cd, w, &phis[t], &phis[sd], &p, nloc);
                add_product(&mut stab, t * cd, sd * cd, w, &phis[t], &phis[sd], &(&s * jj), nloc);
            }
            add_product(&mut star, t * cd, t * cd, w, &phis[t], &phis[t], &ident, nloc);
        }
    }
    LocalMatrices {
        cells: cells.to_vec(),
        a,
        rhs: DVector::zeros(2 * cd),
        mass: None,
        deriv: None,
        stab: Some(stab),
        msym: None,
        star,
    }
}

/// Volume contributions of `cell`.
pub fn cell_kernel(sys: &dyn FriedrichsSystem, space: &DGSpace, cell: usize) -> LocalMatrices {
    cell_kernel_route(sys, space, cell, Route::Primal)
}

/// Contributions of a boundary face to its owner cell.
pub fn boundary_face_kernel(sys: &dyn FriedrichsSystem, space: &DGSpace, face: usize) -> LocalMatrices {
    boundary_face_kernel_route(sys, space, face, Route::Primal)
}

/// Contributions of an interior face, over the dofs of `[T1, T2]` (lower id first).
pub fn interior_face_kernel(sys: &dyn FriedrichsSystem, space: &DGSpace, face: usize) -> LocalMatrices {
    interior_face_kernel_route(sys, space, face, Route::Primal)
}

/// Dof sets of each subdomain of the partition used at assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockView {
    pub subdomain_dofs: Vec<Vec<usize>>,
    pub dof_owner: Vec<usize>,
}

impl BlockView {
    pub fn new(space: &DGSpace, partition: &Partition) -> Self {
        let subdomain_dofs = (0..partition.num_subdomains).map(|s| space.dofs_of_cells(&partition.cells_of(s))).collect();
        let cd = space.cell_dofs();
        let dof_owner = (0..space.num_dofs()).map(|i| partition.owner[i / cd]).collect();
        Self { subdomain_dofs, dof_owner }
    }

    pub fn num_subdomains(&self) -> usize {
        self.subdomain_dofs.len()
    }
}

/// Discrete operator, right-hand side and the Gram matrices of every norm.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Block-diagonal `L^2` mass matrix.
    pub mass: CsrMatrix,
    /// `R`-norm Gram matrix `mu0 X_L + M_b + S`.
    pub x_r: CsrMatrix,
    /// Stabilization `s_h`.
    pub stab: CsrMatrix,
    /// `(1/2) sum_F (M^sym y, y)` over boundary faces.
    pub boundary_m: CsrMatrix,
    /// `sum_T h_T (A^k d_k y, A^l d_l y)_T`.
    pub deriv: CsrMatrix,
    /// `sum_T h_T^-1 ||y||_T^2 + ||y||_dT^2`.
    pub star: CsrMatrix,
    pub mu0: f64,
    pub block_view: BlockView,
}

impl AssembledSystem {
    pub fn num_dofs(&self) -> usize {
        self.rhs.len()
    }
}

type Trip = Vec<(usize, usize, f64)>;

fn scatter(trip: &mut Trip, dofs: &[usize], mat: &DMatrix<f64>) {
    for (i, &r) in dofs.iter().enumerate() {
        for (j, &c) in dofs.iter().enumerate() {
            let v = mat[(i, j)];
            if v != 0.0 {
                trip.push((r, c, v));
            }
        }
    }
}

fn collect_locals(sys: &dyn FriedrichsSystem, space: &DGSpace, route: Route) -> Vec<LocalMatrices> {
    let mesh = &space.mesh;
    let mut locals: Vec<LocalMatrices> =
        (0..mesh.num_cells()).into_par_iter().map(|c| cell_kernel_route(sys, space, c, route)).collect();
    let faces: Vec<LocalMatrices> = (0..mesh.faces.len())
        .into_par_iter()
        .map(|f| {
            if mesh.faces[f].is_interior() {
                interior_face_kernel_route(sys, space, f, route)
            } else {
                boundary_face_kernel_route(sys, space, f, route)
            }
        })
        .collect();
    locals.extend(faces);
    locals
}

fn check_compatible(sys: &dyn FriedrichsSystem, space: &DGSpace) -> Result<()> {
    if sys.m() != space.m {
        return Err(Error::DimensionMismatch { context: "system components vs space", expected: space.m, found: sys.m() });
    }
    if sys.d() != 2 {
        return Err(Error::DimensionMismatch { context: "spatial dimension", expected: 2, found: sys.d() });
    }
    Ok(())
}

/// Assembles `A = A^cf + S`, the right-hand side and the norm matrices.
pub fn assemble(sys: &dyn FriedrichsSystem, space: &DGSpace, partition: &Partition) -> Result<AssembledSystem> {
    check_compatible(sys, space)?;
    if partition.owner.len() != space.mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            context: "partition cells",
            expected: space.mesh.num_cells(),
            found: partition.owner.len(),
        });
    }
    let n = space.num_dofs();
    let locals = collect_locals(sys, space, Route::Primal);
    let (mut ta, mut tm, mut ts, mut tb, mut td, mut tx) = (Trip::new(), Trip::new(), Trip::new(), Trip::new(), Trip::new(), Trip::new());
    let mut rhs = vec![0.0; n];
    for loc in &locals {
        let dofs = space.dofs_of_cells(&loc.cells);
        scatter(&mut ta, &dofs, &loc.a);
        scatter(&mut tx, &dofs, &loc.star);
        if let Some(mm) = &loc.mass {
            scatter(&mut tm, &dofs, mm);
        }
        if let Some(s) = &loc.stab {
            scatter(&mut ts, &dofs, s);
        }
        if let Some(b) = &loc.msym {
            scatter(&mut tb, &dofs, b);
        }
        if let Some(d) = &loc.deriv {
            scatter(&mut td, &dofs, d);
        }
        for (i, &r) in dofs.iter().enumerate() {
            rhs[r] += loc.rhs[i];
        }
    }
    let a = CsrMatrix::from_triplets(n, n, ta);
    if !a.is_finite() || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("assembled operator or right-hand side".into()));
    }
    let mass = CsrMatrix::from_triplets(n, n, tm);
    let stab = CsrMatrix::from_triplets(n, n, ts);
    let boundary_m = CsrMatrix::from_triplets(n, n, tb);
    let mu0 = sys.mu0();
    let x_r = mass.scaled(mu0).add(&boundary_m).add(&stab);
    Ok(AssembledSystem {
        a,
        rhs,
        mass,
        x_r,
        stab,
        boundary_m,
        deriv: CsrMatrix::from_triplets(n, n, td),
        star: CsrMatrix::from_triplets(n, n, tx),
        mu0,
        block_view: BlockView::new(space, partition),
    })
}

/// [`assemble`] with the whole mesh as a single subdomain.
pub fn assemble_monolithic(sys: &dyn FriedrichsSystem, space: &DGSpace) -> Result<AssembledSystem> {
    let partition = crate::mesh::partition_from_labels(&space.mesh, &vec![0; space.mesh.num_cells()])?;
    assemble(sys, space, &partition)
}

/// Operator assembled from the adjoint-form integrals; equals `A` of [`assemble`]
/// whenever the quadrature integrates the coefficients exactly.
pub fn assemble_adjoint(sys: &dyn FriedrichsSystem, space: &DGSpace) -> Result<CsrMatrix> {
    check_compatible(sys, space)?;
    let n = space.num_dofs();
    let mut ta = Trip::new();
    for loc in collect_locals(sys, space, Route::Adjoint) {
        scatter(&mut ta, &space.dofs_of_cells(&loc.cells), &loc.a);
    }
    let a = CsrMatrix::from_triplets(n, n, ta);
    if !a.is_finite() {
        return Err(Error::NonFinite("adjoint operator".into()));
    }
    Ok(a)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct sparse solve of `A z = L` with one step of iterative refinement.
pub fn solve(asm: &AssembledSystem) -> Result<Vec<f64>> {
    let lu = crate::linalg::SparseLu::new(&asm.a, "DG operator")?;
    let mut z = lu.solve(&asm.rhs, "DG operator")?;
    let resid = |z: &[f64]| -> Vec<f64> { asm.a.mul_vec(z).iter().zip(&asm.rhs).map(|(a, b)| b - a).collect() };
    let r = resid(&z);
    let corr = lu.solve(&r, "DG operator")?;
    z.iter_mut().zip(&corr).for_each(|(zi, ci)| *zi += ci);
    let bound = 1e-10 * (asm.a.norm() * norm2(&z) + norm2(&asm.rhs));
    let rn = norm2(&resid(&z));
    if !(rn <= bound) {
        log::warn!("DG residual {rn:e} above bound {bound:e}");
        if !rn.is_finite() {
            return Err(Error::Singular { context: "DG operator", pivot: 0.0 });
        }
    }
    Ok(z)
}
