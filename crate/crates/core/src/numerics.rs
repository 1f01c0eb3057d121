//! Dense linear algebra: a row-major matrix type, symmetric eigendecomposition,
//! least squares, and seeded random sources.
//!
//! The eigensolver and SVD are delegated to `faer` (Householder
//! tridiagonalisation followed by an implicit QR sweep); convergence
//! tolerance and the iteration cap are the ones `faer` uses internally,
//! which drive the off-diagonal mass below machine precision relative to
//! the matrix norm. Both routines are deterministic for a fixed input.

use std::ops::{Index, IndexMut};

use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Singular values below this fraction of the largest are treated as zero
/// by [`lstsq`].
pub const RANK_TOL: f64 = 1e-10;

/// Deterministic random source used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
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
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix made of the leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |a_ij - a_ji| divided by the largest entry magnitude.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
///
/// Column `i` of `eigenvectors` pairs with `eigenvalues[i]`; each column is
/// signed so that its largest-magnitude entry is positive (first such entry
/// on ties).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let asym = a.relative_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(a: &DenseMatrix) -> Result<EigenDecomposition> {
    check_symmetric(a)?;
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: DenseMatrix::zeros(0, 0),
        });
    }
    let evd = a
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    let s = evd.S();
    let u = evd.U();
    // faer returns ascending order
    let eigenvalues: Vec<f64> = (0..n).rev().map(|k| s[k]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (col, k) in (0..n).rev().enumerate() {
        let mut pivot = 0;
        for i in 1..n {
            if u[(i, k)].abs() > u[(pivot, k)].abs() {
                pivot = i;
            }
        }
        let sign = if u[(pivot, k)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[(i, col)] = sign * u[(i, k)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    if a.rows() == 0 {
        return Ok(Vec::new());
    }
    let mut vals = a
        .to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence)?;
    vals.reverse();
    Ok(vals)
}

/// Least-squares solution of `B·A ≈ Y`.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub solution: DenseMatrix,
    /// Numerical rank of `B`.
    pub rank: usize,
    /// `B` had fewer than `cols` significant singular values; `solution` is
    /// then the minimum-norm minimiser.
    pub rank_deficient: bool,
}

/// Minimises ‖Y − B·A‖_F over A via the thin SVD of `B`.
pub fn lstsq(b: &DenseMatrix, y: &DenseMatrix) -> Result<LstsqSolution> {
    if b.rows() < b.cols() {
        return Err(Error::Shape(format!(
            "least squares needs rows >= cols, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    if b.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            expected: b.rows(),
            found: y.rows(),
        });
    }
    let (n, k, q) = (b.rows(), b.cols(), y.cols());
    if k == 0 {
        return Ok(LstsqSolution {
            solution: DenseMatrix::zeros(0, q),
            rank: 0,
            rank_deficient: false,
        });
    }
    let svd = b.to_faer().thin_svd().map_err(|_| Error::NoConvergence)?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let smax = (0..k).map(|i| s[i]).fold(0.0, f64::max);
    let cutoff = RANK_TOL * smax;
    let mut rank = 0;
    let mut solution = DenseMatrix::zeros(k, q);
    for i in 0..k {
        if s[i] <= cutoff || s[i] == 0.0 {
            continue;
        }
        rank += 1;
        // coefficient row: (u_iᵀ Y) / s_i
        let mut coef = vec![0.0; q];
        for r in 0..n {
            let ur = u[(r, i)];
            if ur == 0.0 {
                continue;
            }
            for (c, &yv) in coef.iter_mut().zip(y.row(r)) {
                *c += ur * yv;
            }
        }
        for row in 0..k {
            let vr = v[(row, i)] / s[i];
            for (c, &cv) in coef.iter().enumerate() {
                solution[(row, c)] += vr * cv;
            }
        }
    }
    Ok(LstsqSolution {
        solution,
        rank,
        rank_deficient: rank < k,
    })
}
