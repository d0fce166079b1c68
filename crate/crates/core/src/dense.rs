//! Dense matrices, used as small-n oracles: direct factorization for
//! coarse-grid and reference solves, and symmetric eigendecomposition
//! for spectral diagnostics. Iterative solvers never materialize the
//! fine-grid operator.

use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Result, SolverError};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *o = acc;
        }
        out
    }

    /// M' x without materializing the transpose.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            let row = self.row(i);
            for (o, a) in out.iter_mut().zip(row.iter()) {
                *o += a * xi;
            }
        }
        out
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cached Cholesky factorization of a symmetric positive definite matrix.
pub struct SpdFactor {
    chol: nalgebra::linalg::Cholesky<f64, Dyn>,
    n: usize,
}

impl SpdFactor {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(SolverError::DimensionMismatch {
                expected: m.rows,
                got: m.cols,
            });
        }
        let asym = m.max_asymmetry();
        let scale = m.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if asym > 1e-10 * scale.max(1.0) {
            return Err(SolverError::NotSymmetric(asym));
        }
        let chol = m
            .to_nalgebra()
            .cholesky()
            .ok_or_else(|| SolverError::NotSpd("Cholesky factorization failed".into()))?;
        Ok(SpdFactor { chol, n: m.rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let v = DVector::from_column_slice(rhs);
        self.chol.solve(&v).as_slice().to_vec()
    }
}

/// Direct solve of a symmetric positive definite system.
pub fn solve_spd(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Ok(SpdFactor::new(m)?.solve(rhs))
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted in
/// descending order so `values[0]` is the largest. `vectors` holds the
/// corresponding orthonormal eigenvectors as columns.
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.vectors.rows).map(|i| self.vectors[(i, j)]).collect()
    }
}

/// Full symmetric eigendecomposition. Rejects matrices whose asymmetry
/// exceeds 1e-10 relative to the largest entry.
pub fn sym_eigen(m: &DenseMatrix) -> Result<EigenDecomposition> {
    if m.rows != m.cols {
        return Err(SolverError::DimensionMismatch {
            expected: m.rows,
            got: m.cols,
        });
    }
    let asym = m.max_asymmetry();
    let scale = m.data.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if asym > 1e-10 * scale.max(1.0) {
        return Err(SolverError::NotSymmetric(asym));
    }
    let n = m.rows;
    let eig = nalgebra::linalg::SymmetricEigen::new(m.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalue comparison")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = eig.eigenvectors[(row, src)];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}
