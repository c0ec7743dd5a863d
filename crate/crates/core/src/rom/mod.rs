//! Monodomain reduced-order models: snapshots, POD, Galerkin projection and
//! residual-based error estimators.

mod estimate;
mod pod;

pub use estimate::{estimate, Estimate, Estimator, EstimatorReport, EstimatorRow};
pub use pod::{pod, reconstruction_error, ReducedBasis, Truncation};

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dg::{assemble_monolithic, solve, AssembledSystem, DGSpace};
use crate::error::{invalid, Error, Result};
use crate::fs_models::FriedrichsSystem;
use crate::linalg::dense_solve;

const MAGIC: &[u8; 4] = b"DDRF";
const VERSION: u32 = 1;

/// Snapshot matrix (one full-order solution per column) and the parameter
/// vector of every column.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub matrix: DMatrix<f64>,
    pub params: Vec<Vec<f64>>,
}

impl SnapshotSet {
    pub fn new(matrix: DMatrix<f64>, params: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.ncols() != params.len() {
            return Err(Error::DimensionMismatch { context: "snapshot parameters", expected: matrix.ncols(), found: params.len() });
        }
        if let Some(p) = params.first() {
            if params.iter().any(|q| q.len() != p.len()) {
                return Err(invalid("parameter vectors must share one length"));
            }
        }
        if matrix.iter().chain(params.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("snapshot set".into()));
        }
        Ok(Self { matrix, params })
    }

    pub fn num_dofs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.ncols() == 0
    }

    pub fn param_dim(&self) -> usize {
        self.params.first().map_or(0, |p| p.len())
    }

    /// Columns with the given indices.
    pub fn select(&self, cols: &[usize]) -> SnapshotSet {
        SnapshotSet { matrix: self.matrix.select_columns(cols), params: cols.iter().map(|&c| self.params[c].clone()).collect() }
    }

    /// Binary layout: `"DDRF"`, u32 version, u64 rows, u64 cols, u32 P, then
    /// the matrix column-major and the `cols x P` parameters, all little endian.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.num_dofs() as u64).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.param_dim() as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * (self.matrix.len() + self.len() * self.param_dim()));
        for v in self.matrix.iter().chain(self.params.iter().flatten()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| Error::Format("truncated header".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let mut u32b = [0u8; 4];
        let mut u64b = [0u8; 8];
        let mut read = |buf: &mut [u8]| r.read_exact(buf).map_err(|_| Error::Format("truncated header".into()));
        read(&mut u32b)?;
        let version = u32::from_le_bytes(u32b);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        read(&mut u64b)?;
        let rows = u64::from_le_bytes(u64b) as usize;
        read(&mut u64b)?;
        let cols = u64::from_le_bytes(u64b) as usize;
        read(&mut u32b)?;
        let p = u32::from_le_bytes(u32b) as usize;
        let count = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_add(cols.checked_mul(p)?))
            .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() != 8 * count {
            return Err(Error::Format(format!("expected {} payload bytes, found {}", 8 * count, data.len())));
        }
        let vals: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let matrix = DMatrix::from_column_slice(rows, cols, &vals[..rows * cols]);
        let params = vals[rows * cols..].chunks(p.max(1)).take(cols).map(|c| c[..p].to_vec()).collect::<Vec<_>>();
        let params = if p == 0 { vec![Vec::new(); cols] } else { params };
        SnapshotSet::new(matrix, params).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Parametric system: builds one instance per parameter vector.
pub type Family<'a> = dyn Fn(&[f64]) -> Result<Box<dyn FriedrichsSystem>> + Sync + 'a;

/// Solves the full-order model for every parameter (in parallel).
pub fn generate_snapshots(family: &Family<'_>, space: &DGSpace, params: &[Vec<f64>]) -> Result<SnapshotSet> {
    let cols: Vec<Vec<f64>> = params
        .par_iter()
        .map(|p| {
            let sys = family(p)?;
            solve(&assemble_monolithic(sys.as_ref(), space)?)
        })
        .collect::<Result<_>>()?;
    let n = space.num_dofs();
    let mut matrix = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        matrix.column_mut(j).copy_from_slice(c);
    }
    SnapshotSet::new(matrix, params.to_vec())
}

/// Indices `0, stride, 2 stride, ...` for training and the rest for testing.
pub fn train_test_split(n: usize, stride: usize) -> (Vec<usize>, Vec<usize>) {
    let stride = stride.max(1);
    (0..n).partition(|i| i % stride == 0)
}

/// `B = V^t A V`, `L_r = V^t L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub b: DMatrix<f64>,
    pub l: DVector<f64>,
}

pub fn project(asm: &AssembledSystem, basis: &ReducedBasis) -> Result<ReducedSystem> {
    if basis.v.nrows() != asm.num_dofs() {
        return Err(Error::DimensionMismatch { context: "basis rows vs dofs", expected: asm.num_dofs(), found: basis.v.nrows() });
    }
    let av = asm.a.mul_dense(&basis.v);
    let b = basis.v.transpose() * av;
    let l = basis.v.transpose() * DVector::from_column_slice(&asm.rhs);
    Ok(ReducedSystem { b, l })
}

/// Solves the reduced system; returns the reduced coefficients and the lifted dofs `V c`.
pub fn online_solve(rs: &ReducedSystem, basis: &ReducedBasis) -> Result<(DVector<f64>, Vec<f64>)> {
    if rs.b.nrows() == 0 {
        return Err(invalid("reduced dimension must be positive"));
    }
    if rs.b.nrows() != basis.r() {
        return Err(Error::DimensionMismatch { context: "reduced system vs basis", expected: basis.r(), found: rs.b.nrows() });
    }
    let c = dense_solve(&rs.b, &rs.l, "reduced operator")?;
    let z = &basis.v * &c;
    Ok((c, z.as_slice().to_vec()))
}
