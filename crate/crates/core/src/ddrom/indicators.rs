use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dg::DGSpace;
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::rom::SnapshotSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorKind {
    Variance,
    Grassmannian { n_neigh: usize, r_t: usize },
}

impl IndicatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            IndicatorKind::Variance => "variance",
            IndicatorKind::Grassmannian { .. } => "grassmannian",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One nonnegative value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub kind: IndicatorKind,
    pub values: Vec<f64>,
}

fn check_snapshots(snapshots: &SnapshotSet, space: &DGSpace) -> Result<()> {
    if snapshots.num_dofs() != space.num_dofs() {
        return Err(Error::DimensionMismatch { context: "snapshot rows vs dofs", expected: space.num_dofs(), found: snapshots.num_dofs() });
    }
    Ok(())
}

/// `I_var(T) = int_T |Var(x)| dx`, where `Var` is the componentwise biased
/// (1/n) variance of the snapshots and `|.|` the Euclidean norm over components.
pub fn indicator_variance(snapshots: &SnapshotSet, space: &DGSpace) -> Result<IndicatorField> {
    check_snapshots(snapshots, space)?;
    let n = snapshots.len();
    if n < 2 {
        return Err(invalid(format!("variance indicator needs at least 2 snapshots (got {n})")));
    }
    let (m, nloc, cd) = (space.m, space.nloc(), space.cell_dofs());
    let x = &snapshots.matrix;
    let values = (0..space.mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let (_, wts, phi, _) = space.cell_tables(cell);
            let mut total = 0.0;
            let mut vals = vec![0.0; n];
            for (q, w) in wts.iter().enumerate() {
                let mut norm2 = 0.0;
                for c in 0..m {
                    let base = cell * cd + c * nloc;
                    for (s, v) in vals.iter_mut().enumerate() {
                        *v = (0..nloc).map(|i| x[(base + i, s)] * phi[q][i]).sum();
                    }
                    let mean = vals.iter().sum::<f64>() / n as f64;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                    norm2 += var * var;
                }
                total += w * norm2.sqrt();
            }
            total
        })
        .collect();
    Ok(IndicatorField { kind: IndicatorKind::Variance, values })
}

/// The `n` cells nearest to `cell` by barycenter distance, closest first;
/// equal distances (up to a relative 1e-9) go to the lower cell id.
pub fn nearest_cells(mesh: &Mesh, cell: usize, n: usize) -> Vec<usize> {
    let c = mesh.cells[cell].barycenter;
    let scale = mesh.h_max().powi(2).max(f64::MIN_POSITIVE);
    let mut keyed: Vec<(i64, usize)> = (0..mesh.num_cells())
        .filter(|&o| o != cell)
        .map(|o| {
            let b = mesh.cells[o].barycenter;
            let d2 = (b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2);
            ((d2 / scale * 1e9).round() as i64, o)
        })
        .collect();
    let n = n.min(keyed.len());
    if n == 0 {
        return Vec::new();
    }
    if n < keyed.len() {
        keyed.select_nth_unstable(n - 1);
        keyed.truncate(n);
    }
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, o)| o).collect()
}

fn tail_norm(x: &DMatrix<f64>, r: usize) -> f64 {
    let mut s: Vec<f64> = x.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.iter().skip(r).map(|v| v * v).sum::<f64>().sqrt()
}

/// `I_G(T) = ||X_T - U U^t X_T||_F`, with `X_T` the snapshot rows of `T` and
/// its `n_neigh` nearest cells and `U` their leading `r_t` left singular vectors.
pub fn indicator_grassmannian(snapshots: &SnapshotSet, space: &DGSpace, n_neigh: usize, r_t: usize) -> Result<IndicatorField> {
    check_snapshots(snapshots, space)?;
    if r_t == 0 {
        return Err(invalid("r_T must be at least 1"));
    }
    let mesh = &space.mesh;
    let rows = space.cell_dofs() * (1 + n_neigh.min(mesh.num_cells() - 1));
    let available = rows.min(snapshots.len());
    if r_t > available {
        return Err(Error::RankTooLarge { context: "grassmannian indicator", requested: r_t, available });
    }
    let values = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let mut cells = vec![cell];
            cells.extend(nearest_cells(mesh, cell, n_neigh));
            let xt = snapshots.matrix.select_rows(&space.dofs_of_cells(&cells));
            tail_norm(&xt, r_t)
        })
        .collect();
    Ok(IndicatorField { kind: IndicatorKind::Grassmannian { n_neigh, r_t }, values })
}

/// Cells sorted by increasing indicator value, ties by id.
fn ranked(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

fn labels_for_count(values: &[f64], count: usize) -> Vec<usize> {
    let mut labels = vec![1; values.len()];
    for &c in ranked(values).iter().take(count) {
        labels[c] = 0;
    }
    labels
}

fn low_count(n: usize, p_l: f64) -> usize {
    // guard against 0.1 * 30 = 2.9999999999999996
    ((p_l / 100.0 * n as f64) * (1.0 + 1e-12)).floor() as usize
}

/// Labels the `floor(P_l% * #cells)` cells with the lowest indicator 0 and the rest 1.
pub fn repartition(indicator: &IndicatorField, p_l: f64, k: usize) -> Result<Vec<usize>> {
    if k != 2 {
        return Err(invalid(format!("only k = 2 regions are supported (got {k})")));
    }
    if !(p_l > 0.0 && p_l < 100.0) {
        return Err(invalid(format!("P_l must lie in (0, 100) (got {p_l})")));
    }
    let n = indicator.values.len();
    if indicator.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("indicator values".into()));
    }
    let count = low_count(n, p_l);
    if count == 0 || count == n {
        return Err(invalid(format!("P_l = {p_l} leaves an empty region on {n} cells")));
    }
    Ok(labels_for_count(&indicator.values, count))
}

/// Relative reconstruction errors of one threshold of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub p_l: f64,
    pub err_low: f64,
    pub err_high: f64,
    pub err_global: f64,
    pub kind: IndicatorKind,
}

/// `||X - V V^t X||_F / ||X||_F` for the POD basis of rank `r` (clamped to the
/// matrix dimensions); 0 for an empty or zero matrix.
pub fn relative_pod_error(x: &DMatrix<f64>, r: usize) -> f64 {
    let norm = x.norm();
    if x.is_empty() || norm == 0.0 {
        return 0.0;
    }
    tail_norm(x, r) / norm
}

/// For every `P_l` of the grid, splits the cells by the indicator and reports
/// the relative POD reconstruction error on the low region (rank `r_low`), the
/// high region (rank `r_high`) and the whole domain (rank `r_global`).
///
/// `P_l = 100` is accepted as the degenerate split with an empty high region.
pub fn reconstruction_scan(
    snapshots: &SnapshotSet,
    space: &DGSpace,
    indicator: &IndicatorField,
    grid: &[f64],
    r_low: usize,
    r_high: usize,
    r_global: usize,
) -> Result<Vec<ScanRow>> {
    check_snapshots(snapshots, space)?;
    let n = space.mesh.num_cells();
    if indicator.values.len() != n {
        return Err(Error::DimensionMismatch { context: "indicator cells", expected: n, found: indicator.values.len() });
    }
    if let Some(p) = grid.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
        return Err(invalid(format!("P_l must lie in (0, 100] (got {p})")));
    }
    let err_global = relative_pod_error(&snapshots.matrix, r_global);
    grid.par_iter()
        .map(|&p_l| {
            let labels = labels_for_count(&indicator.values, low_count(n, p_l));
            let region = |l: usize| {
                let cells: Vec<usize> = (0..n).filter(|&c| labels[c] == l).collect();
                snapshots.matrix.select_rows(&space.dofs_of_cells(&cells))
            };
            Ok(ScanRow {
                p_l,
                err_low: relative_pod_error(&region(0), r_low),
                err_high: relative_pod_error(&region(1), r_high),
                err_global,
                kind: indicator.kind,
            })
        })
        .collect()
}
