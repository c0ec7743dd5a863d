//! Sparse storage and the small dense helpers used throughout the crate.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn mul_dvec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(self.mul_vec(x.as_slice()))
    }

    /// `self * rhs` for a dense right-hand side.
    pub fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.ncols);
        let mut out = DMatrix::zeros(self.nrows, rhs.ncols());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                for k in 0..rhs.ncols() {
                    out[(r, k)] += v * rhs[(c, k)];
                }
            }
        }
        out
    }

    /// `x^t A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.nrows).map(|r| x[r] * self.row(r).map(|(c, v)| v * x[c]).sum::<f64>()).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(self.nrows, self.ncols, self.triplets().chain(other.triplets()).collect())
    }

    /// Extracts the sub-matrix with the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut trip = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_map[c] != usize::MAX {
                    trip.push((i, col_map[c], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), trip)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(&other.scaled(-1.0)).values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trip: Vec<_> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip).expect("valid sparsity pattern")
    }
}

/// Sparse LU factorization with partial pivoting.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix, context: &'static str) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { context, expected: a.nrows(), found: a.ncols() });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite(context.into()));
        }
        let lu = a.to_faer().sp_lu().map_err(|_| Error::Singular { context, pivot: 0.0 })?;
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: &[f64], context: &'static str) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let rhs = faer::Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { context, pivot: 0.0 });
        }
        Ok(out)
    }
}

/// Solves `A x = b` with a sparse LU factorization.
pub fn sparse_solve(a: &CsrMatrix, b: &[f64], context: &'static str) -> Result<Vec<f64>> {
    SparseLu::new(a, context)?.solve(b, context)
}

/// Dense LU solve; reports the smallest pivot when the matrix is numerically singular.
pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>, context: &'static str) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch { context, expected: a.nrows(), found: b.len() });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let pivot = u.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if !(pivot > 1e-14 * scale) {
        return Err(Error::Singular { context, pivot });
    }
    lu.solve(b).ok_or(Error::Singular { context, pivot })
}

/// Smallest eigenvalue of the symmetric part `(A + A^t) / 2`.
pub fn min_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let s = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Matrix absolute value `|S| = Q |Λ| Q^t` of a symmetric matrix.
pub fn sym_abs(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((s + s.transpose()) * 0.5);
    let q = &eig.eigenvectors;
    let lam = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::abs));
    q * lam * q.transpose()
}

/// Orthonormal basis (as columns) of the numerical null space of a square matrix.
///
/// Singular values below `rel_tol * sigma_max` count as zero; a zero matrix has the
/// whole space as null space.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    let (v, sigma) = right_singular_pairs(a);
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..n).filter(|&i| smax == 0.0 || sigma[i] <= rel_tol * smax).collect();
    DMatrix::from_fn(n, cols.len(), |r, c| v[(r, cols[c])])
}

/// Orthogonal projector onto the row space of `a` (the range of `a^t`).
pub fn row_space_projector(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    let (v, sigma) = right_singular_pairs(a);
    let smax = sigma.iter().copied().fold(0.0, f64::max);
    let mut p = DMatrix::zeros(n, n);
    if smax == 0.0 {
        return p;
    }
    for i in 0..n {
        if sigma[i] > rel_tol * smax {
            let col = v.column(i);
            p += &col * col.transpose();
        }
    }
    p
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Right singular vectors (as columns of a full square matrix) and matching singular values.
fn right_singular_pairs(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.ncols();
    // pad to square so V^t is n x n
    let mut sq = DMatrix::zeros(a.nrows().max(n), n);
    sq.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = SVD::new(sq, false, true);
    let vt = svd.v_t.expect("V^t requested");
    let sigma: Vec<f64> = (0..n).map(|i| if i < svd.singular_values.len() { svd.singular_values[i] } else { 0.0 }).collect();
    (vt.transpose(), sigma)
}
