//! Domain-decomposed reduced-order models.
//!
//! The DG operator is split into blocks `A_ij` by subdomain ownership of the
//! dofs; each subdomain carries its own POD basis `V_i` and the reduced
//! operator has blocks `B_ij = V_i^t A_ij V_j`.

mod indicators;

pub use indicators::{
    indicator_grassmannian, indicator_variance, nearest_cells, reconstruction_scan, repartition, IndicatorField, IndicatorKind,
    ScanRow,
};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dg::{boundary_face_kernel, cell_kernel, interior_face_kernel, AssembledSystem, BlockView, DGSpace, LocalMatrices};
use crate::error::{Error, Result};
use crate::fs_models::FriedrichsSystem;
use crate::linalg::{dense_solve, CsrMatrix};
use crate::mesh::Partition;
use crate::rom::{pod, SnapshotSet, Truncation};

/// `K x K` block operator and block right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    /// `blocks[i][j] = A_ij`, rows indexed by `dofs[i]`, columns by `dofs[j]`.
    pub blocks: Vec<Vec<CsrMatrix>>,
    pub rhs: Vec<Vec<f64>>,
    /// Global dof indices of each subdomain, in cell order.
    pub dofs: Vec<Vec<usize>>,
}

impl BlockSystem {
    pub fn num_subdomains(&self) -> usize {
        self.dofs.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.iter().map(Vec::len).sum()
    }

    /// Scatters the blocks back into one global matrix and vector.
    pub fn reassemble(&self) -> (CsrMatrix, Vec<f64>) {
        let n = self.num_dofs();
        let mut trip = Vec::new();
        let mut rhs = vec![0.0; n];
        for (i, row) in self.blocks.iter().enumerate() {
            for (j, blk) in row.iter().enumerate() {
                trip.extend(blk.triplets().map(|(r, c, v)| (self.dofs[i][r], self.dofs[j][c], v)));
            }
            for (r, &g) in self.dofs[i].iter().enumerate() {
                rhs[g] += self.rhs[i][r];
            }
        }
        (CsrMatrix::from_triplets(n, n, trip), rhs)
    }
}

/// Extracts the blocks of an assembled operator for `partition`.
pub fn block_assemble(asm: &AssembledSystem, space: &DGSpace, partition: &Partition) -> Result<BlockSystem> {
    if partition.owner.len() != space.mesh.num_cells() {
        return Err(Error::DimensionMismatch { context: "partition cells", expected: space.mesh.num_cells(), found: partition.owner.len() });
    }
    let view = BlockView::new(space, partition);
    let dofs = view.subdomain_dofs;
    let blocks = dofs.iter().map(|ri| dofs.iter().map(|cj| asm.a.submatrix(ri, cj)).collect()).collect();
    let rhs = dofs.iter().map(|ri| ri.iter().map(|&g| asm.rhs[g]).collect()).collect();
    Ok(BlockSystem { blocks, rhs, dofs })
}

/// Position of each global dof inside its subdomain's dof list.
fn local_positions(space: &DGSpace, dofs: &[Vec<usize>]) -> Vec<usize> {
    let mut pos = vec![0; space.num_dofs()];
    for list in dofs {
        for (k, &g) in list.iter().enumerate() {
            pos[g] = k;
        }
    }
    pos
}

/// Assembles the blocks subdomain by subdomain: cells, internal faces and
/// domain-boundary faces of subdomain `i` go to `A_ii`, interface faces
/// between `i` and `j` contribute to `A_ii`, `A_ij`, `A_ji` and `A_jj`.
pub fn assemble_blocks(sys: &dyn FriedrichsSystem, space: &DGSpace, partition: &Partition) -> Result<BlockSystem> {
    if sys.m() != space.m {
        return Err(Error::DimensionMismatch { context: "system components vs space", expected: space.m, found: sys.m() });
    }
    let k = partition.num_subdomains;
    let dofs = BlockView::new(space, partition).subdomain_dofs;
    let pos = local_positions(space, &dofs);
    let cd = space.cell_dofs();
    let mesh = &space.mesh;

    let mut trip: Vec<Vec<Vec<(usize, usize, f64)>>> = vec![vec![Vec::new(); k]; k];
    let mut rhs: Vec<Vec<f64>> = dofs.iter().map(|d| vec![0.0; d.len()]).collect();
    let add = |loc: &LocalMatrices, trip: &mut Vec<Vec<Vec<(usize, usize, f64)>>>, rhs: &mut Vec<Vec<f64>>| {
        for (t, &ct) in loc.cells.iter().enumerate() {
            let st = partition.owner[ct];
            for (s, &cs) in loc.cells.iter().enumerate() {
                let ss = partition.owner[cs];
                for i in 0..cd {
                    for j in 0..cd {
                        let v = loc.a[(t * cd + i, s * cd + j)];
                        if v != 0.0 {
                            trip[st][ss].push((pos[ct * cd + i], pos[cs * cd + j], v));
                        }
                    }
                }
            }
            for i in 0..cd {
                rhs[st][pos[ct * cd + i]] += loc.rhs[t * cd + i];
            }
        }
    };

    for sd in 0..k {
        let cells = partition.cells_of(sd);
        let locals: Vec<LocalMatrices> = cells.par_iter().map(|&c| cell_kernel(sys, space, c)).collect();
        for loc in &locals {
            add(loc, &mut trip, &mut rhs);
        }
        let internal = partition.internal_faces(mesh, sd);
        let locals: Vec<LocalMatrices> = internal.par_iter().map(|&f| interior_face_kernel(sys, space, f)).collect();
        for loc in &locals {
            add(loc, &mut trip, &mut rhs);
        }
        let bfaces = partition.boundary_faces(mesh, sd);
        let locals: Vec<LocalMatrices> = bfaces.par_iter().map(|&f| boundary_face_kernel(sys, space, f)).collect();
        for loc in &locals {
            add(loc, &mut trip, &mut rhs);
        }
    }
    for faces in partition.interface_faces.values() {
        let locals: Vec<LocalMatrices> = faces.par_iter().map(|&f| interior_face_kernel(sys, space, f)).collect();
        for loc in &locals {
            add(loc, &mut trip, &mut rhs);
        }
    }
    let blocks = trip
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.into_iter().enumerate().map(|(j, t)| CsrMatrix::from_triplets(dofs[i].len(), dofs[j].len(), t)).collect())
        .collect();
    Ok(BlockSystem { blocks, rhs, dofs })
}

/// Adds `scale * sum_F ([[z]], [[y]])_F` over the interface faces of `partition`.
pub fn add_interface_penalty(blocks: &BlockSystem, space: &DGSpace, partition: &Partition, scale: f64) -> Result<BlockSystem> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(crate::error::invalid(format!("penalty scale must be nonnegative (got {scale})")));
    }
    if partition.num_subdomains != blocks.num_subdomains() || partition.owner.len() != space.mesh.num_cells() {
        return Err(Error::DimensionMismatch { context: "penalty partition", expected: blocks.num_subdomains(), found: partition.num_subdomains });
    }
    let mut out = blocks.clone();
    if scale == 0.0 {
        return Ok(out);
    }
    let k = blocks.num_subdomains();
    let pos = local_positions(space, &blocks.dofs);
    let (m, nloc) = (space.m, space.nloc());
    let cd = space.cell_dofs();
    let sign = [1.0, -1.0];
    let mut trip: Vec<Vec<Vec<(usize, usize, f64)>>> = vec![vec![Vec::new(); k]; k];
    for faces in partition.interface_faces.values() {
        for &fid in faces {
            let face = &space.mesh.faces[fid];
            let cells = [face.owners[0], face.owners[1]];
            let (pts, wts) = face.quadrature(&space.face_rule);
            for (&x, &w) in pts.iter().zip(&wts) {
                let phis = [space.basis_at(cells[0], x).0, space.basis_at(cells[1], x).0];
                for t in 0..2 {
                    for s in 0..2 {
                        let (st, ss) = (partition.owner[cells[t]], partition.owner[cells[s]]);
                        let f = scale * w * sign[t] * sign[s];
                        for c in 0..m {
                            for i in 0..nloc {
                                for j in 0..nloc {
                                    let r = pos[cells[t] * cd + c * nloc + i];
                                    let col = pos[cells[s] * cd + c * nloc + j];
                                    trip[st][ss].push((r, col, f * phis[t][i] * phis[s][j]));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for (i, row) in trip.into_iter().enumerate() {
        for (j, t) in row.into_iter().enumerate() {
            if !t.is_empty() {
                let extra = CsrMatrix::from_triplets(blocks.dofs[i].len(), blocks.dofs[j].len(), t);
                out.blocks[i][j] = out.blocks[i][j].add(&extra);
            }
        }
    }
    Ok(out)
}

/// Per-subdomain orthonormal bases; `bases[i]` has one row per dof of subdomain `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBases {
    pub bases: Vec<DMatrix<f64>>,
    pub dofs: Vec<Vec<usize>>,
}

impl LocalBases {
    /// No reduction: `V_i = I`.
    pub fn identity(dofs: Vec<Vec<usize>>) -> Self {
        let bases = dofs.iter().map(|d| DMatrix::identity(d.len(), d.len())).collect();
        Self { bases, dofs }
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.bases.iter().map(|b| b.ncols()).sum()
    }

    /// Block-diagonal global basis, `N_h x sum r_i`.
    pub fn global_matrix(&self) -> DMatrix<f64> {
        let n: usize = self.dofs.iter().map(Vec::len).sum();
        let mut v = DMatrix::zeros(n, self.total_dim());
        let mut off = 0;
        for (b, d) in self.bases.iter().zip(&self.dofs) {
            for (r, &g) in d.iter().enumerate() {
                for c in 0..b.ncols() {
                    v[(g, off + c)] = b[(r, c)];
                }
            }
            off += b.ncols();
        }
        v
    }
}

/// POD of the row-restricted snapshots of each subdomain.
pub fn local_pod(snapshots: &SnapshotSet, space: &DGSpace, partition: &Partition, ranks: &[usize]) -> Result<LocalBases> {
    if ranks.len() != partition.num_subdomains {
        return Err(Error::DimensionMismatch { context: "local ranks", expected: partition.num_subdomains, found: ranks.len() });
    }
    if snapshots.num_dofs() != space.num_dofs() {
        return Err(Error::DimensionMismatch { context: "snapshot rows vs dofs", expected: space.num_dofs(), found: snapshots.num_dofs() });
    }
    let dofs = BlockView::new(space, partition).subdomain_dofs;
    let bases = dofs
        .par_iter()
        .zip(ranks)
        .map(|(d, &r)| {
            let x = snapshots.matrix.select_rows(d);
            let basis = pod(&x, Truncation::Rank(r))?;
            let s = &basis.singular_values;
            let numerical = s.iter().filter(|&&v| v > 1e-14 * s[0]).count();
            if r > numerical {
                return Err(Error::RankTooLarge { context: "local pod", requested: r, available: numerical });
            }
            Ok(basis.v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalBases { bases, dofs })
}

/// Dense reduced block operator over the concatenated local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBlockSystem {
    pub b: DMatrix<f64>,
    pub l: DVector<f64>,
    /// Start of each subdomain's coordinates.
    pub offsets: Vec<usize>,
}

/// `B_ij = V_i^t A_ij V_j`, `L_i = V_i^t F_i`.
pub fn block_project(blocks: &BlockSystem, bases: &LocalBases) -> Result<ReducedBlockSystem> {
    let k = blocks.num_subdomains();
    if bases.bases.len() != k {
        return Err(Error::DimensionMismatch { context: "local bases", expected: k, found: bases.bases.len() });
    }
    for i in 0..k {
        if bases.bases[i].nrows() != blocks.dofs[i].len() {
            return Err(Error::DimensionMismatch { context: "local basis rows", expected: blocks.dofs[i].len(), found: bases.bases[i].nrows() });
        }
    }
    let mut offsets = vec![0; k + 1];
    for i in 0..k {
        offsets[i + 1] = offsets[i] + bases.bases[i].ncols();
    }
    let n = offsets[k];
    let mut b = DMatrix::zeros(n, n);
    let mut l = DVector::zeros(n);
    for i in 0..k {
        let vi = &bases.bases[i];
        for j in 0..k {
            let blk = &blocks.blocks[i][j];
            if blk.nnz() == 0 {
                continue;
            }
            let bij = vi.transpose() * blk.mul_dense(&bases.bases[j]);
            b.view_mut((offsets[i], offsets[j]), (vi.ncols(), bases.bases[j].ncols())).copy_from(&bij);
        }
        let li = vi.transpose() * DVector::from_column_slice(&blocks.rhs[i]);
        l.rows_mut(offsets[i], vi.ncols()).copy_from(&li);
    }
    offsets.pop();
    Ok(ReducedBlockSystem { b, l, offsets })
}

/// Solves the reduced block system and lifts to global dofs.
pub fn solve_reduced(rbs: &ReducedBlockSystem, bases: &LocalBases) -> Result<Vec<f64>> {
    if rbs.b.nrows() == 0 {
        return Err(crate::error::invalid("reduced dimension must be positive"));
    }
    let c = dense_solve(&rbs.b, &rbs.l, "reduced block operator")?;
    let n: usize = bases.dofs.iter().map(Vec::len).sum();
    let mut z = vec![0.0; n];
    for (i, (v, d)) in bases.bases.iter().zip(&bases.dofs).enumerate() {
        let zi = v * c.rows(rbs.offsets[i], v.ncols());
        for (r, &g) in d.iter().enumerate() {
            z[g] = zi[r];
        }
    }
    Ok(z)
}

/// Block extraction, projection and solve in one call.
pub fn ddrom_solve(asm: &AssembledSystem, space: &DGSpace, partition: &Partition, bases: &LocalBases) -> Result<Vec<f64>> {
    let blocks = block_assemble(asm, space, partition)?;
    solve_reduced(&block_project(&blocks, bases)?, bases)
}
