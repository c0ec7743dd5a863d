use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// How many POD modes to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Rank(usize),
    /// Smallest rank whose relative Frobenius reconstruction error is at most the tolerance.
    Energy(f64),
}

/// Orthonormal POD modes (columns of `v`) and all singular values of the snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    pub v: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl ReducedBasis {
    pub fn r(&self) -> usize {
        self.v.ncols()
    }

    /// Basis made of given orthonormal columns (no singular values).
    pub fn from_columns(v: DMatrix<f64>) -> Self {
        Self { v, singular_values: Vec::new() }
    }

    /// Frobenius error predicted from the discarded singular values.
    pub fn tail_energy(&self) -> f64 {
        self.singular_values.iter().skip(self.r()).map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Left singular vectors of `x`. Each mode is signed so that its entry of
/// largest magnitude is positive.
pub fn pod(x: &DMatrix<f64>, trunc: Truncation) -> Result<ReducedBasis> {
    let avail = x.nrows().min(x.ncols());
    if avail == 0 {
        return Err(invalid("empty snapshot matrix"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("snapshot matrix".into()));
    }
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let r = match trunc {
        Truncation::Rank(r) => {
            if r == 0 {
                return Err(invalid("POD rank must be positive"));
            }
            if r > avail {
                return Err(Error::RankTooLarge { context: "pod", requested: r, available: avail });
            }
            r
        }
        Truncation::Energy(tol) => {
            if !(tol >= 0.0) {
                return Err(invalid(format!("energy tolerance must be nonnegative (got {tol})")));
            }
            let total: f64 = sigma.iter().map(|s| s * s).sum();
            let mut tail = total;
            let mut r = avail;
            for (i, s) in sigma.iter().enumerate() {
                tail -= s * s;
                if tail.max(0.0) <= tol * tol * total {
                    r = i + 1;
                    break;
                }
            }
            r
        }
    };
    if sigma[r - 1] <= 1e-14 * sigma[0] {
        log::warn!("POD rank {r} exceeds the numerical rank of the snapshots (sigma_r = {:e})", sigma[r - 1]);
    }
    let mut v = DMatrix::zeros(x.nrows(), r);
    for (j, &i) in order.iter().take(r).enumerate() {
        let col = u.column(i);
        let imax = col.iter().enumerate().fold(0, |b, (k, val)| if val.abs() > col[b].abs() { k } else { b });
        let s = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        v.column_mut(j).copy_from(&(col * s));
    }
    Ok(ReducedBasis { v, singular_values: sigma })
}

/// `||X - V V^t X||_F`.
pub fn reconstruction_error(x: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    (x - v * (v.transpose() * x)).norm()
}
