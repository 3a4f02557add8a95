//! Dense linear algebra used throughout the crate.
//!
//! Least squares goes through a thin Householder QR of the design followed by
//! an SVD of the small triangular factor, so rank-deficient problems get the
//! minimum-norm solution with a singular-value cutoff of `1e-10 * sigma_max`.
//! Spectral norms are computed by power iteration on the smaller Gram matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Relative singular-value cutoff used for every pseudoinverse in the crate.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
}

/// Dense row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows * cols != data.len() {
            return Err(LinalgError::Shape { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Shape { rows: rows.len(), cols, len: data.len() + r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Aᵀ v` without forming the transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `AᵀA`, symmetric by construction.
    pub fn gram(&self) -> Matrix {
        let d = self.cols;
        let mut g = Matrix::zeros(d, d);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..d {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..d {
                    g.data[a * d + b] += ra * r[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g.data[a * d + b] = g.data[b * d + a];
            }
        }
        g
    }

    /// `A Aᵀ`.
    pub fn outer_gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = dot(self.row(a), self.row(b));
                g.data[a * n + b] = v;
                g.data[b * n + a] = v;
            }
        }
        g
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows.min(self.cols) {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Result of a least-squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    /// Numerical rank of the (weighted) design.
    pub rank: usize,
    /// Singular values of the design, descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns (d x d); the first `rank` span the row space.
    right_vectors: Matrix,
}

impl OlsFit {
    /// Whether coordinate `j` of β is pinned down by the data, i.e. `e_j` lies in
    /// the row space of the design.
    pub fn identifies(&self, j: usize) -> bool {
        let proj: f64 = (0..self.rank).map(|r| self.right_vectors.get(j, r).powi(2)).sum();
        proj >= 1.0 - 1e-8
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.beta.len()
    }
}

/// Ordinary least squares; minimum-norm solution when the design is rank deficient.
pub fn ols_fit(x: &Matrix, y: &[f64]) -> OlsFit {
    assert_eq!(x.rows(), y.len(), "design and response lengths differ");
    lstsq(x.rows(), x.cols(), x.as_slice(), y)
}

/// Weighted least squares with nonnegative weights; rows with zero weight are
/// dropped and unit-weight rows are used verbatim, so 0/1 weights reproduce
/// [`ols_fit`] on the kept rows exactly.
pub fn weighted_ols_fit(x: &Matrix, y: &[f64], w: &[f64]) -> OlsFit {
    assert_eq!(x.rows(), y.len(), "design and response lengths differ");
    assert_eq!(x.rows(), w.len(), "design and weight lengths differ");
    let d = x.cols();
    let mut data = Vec::with_capacity(x.rows() * d);
    let mut rhs = Vec::with_capacity(x.rows());
    for (i, &wi) in w.iter().enumerate() {
        assert!(wi >= 0.0, "negative weight {wi} at row {i}");
        if wi == 0.0 {
            continue;
        }
        let s = wi.sqrt();
        if s == 1.0 {
            data.extend_from_slice(x.row(i));
            rhs.push(y[i]);
        } else {
            data.extend(x.row(i).iter().map(|v| v * s));
            rhs.push(y[i] * s);
        }
    }
    lstsq(rhs.len(), d, &data, &rhs)
}

/// Least squares on the rows listed in `keep`.
pub fn subset_ols_fit(x: &Matrix, y: &[f64], keep: &[usize]) -> OlsFit {
    let d = x.cols();
    let mut data = Vec::with_capacity(keep.len() * d);
    let mut rhs = Vec::with_capacity(keep.len());
    for &i in keep {
        data.extend_from_slice(x.row(i));
        rhs.push(y[i]);
    }
    lstsq(keep.len(), d, &data, &rhs)
}

fn lstsq(n: usize, d: usize, data: &[f64], y: &[f64]) -> OlsFit {
    if n == 0 || d == 0 {
        return OlsFit {
            beta: vec![0.0; d],
            rank: 0,
            singular_values: vec![0.0; d],
            right_vectors: Matrix::identity(d),
        };
    }
    // Reduce to a k x d problem (k = min(n, d)) with R and Qᵀy.
    let (r, qty) = if n > d {
        let a = DMatrix::from_row_slice(n, d, data);
        let qr = a.qr();
        let mut b = DVector::from_column_slice(y);
        qr.q_tr_mul(&mut b);
        let r = qr.r();
        (r, DVector::from_iterator(d, b.iter().take(d).copied()))
    } else {
        (DMatrix::from_row_slice(n, d, data), DVector::from_column_slice(y))
    };
    // SVD of the small factor; pad to d x d so V is square.
    let k = r.nrows();
    let mut rs = DMatrix::zeros(d.max(k), d);
    rs.view_mut((0, 0), (k, d)).copy_from(&r);
    let mut b = DVector::zeros(d.max(k));
    b.rows_mut(0, k).copy_from(&qty);
    let svd = rs.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = order.first().map_or(0.0, |&i| sv[i]);
    let cutoff = RANK_RTOL * smax;

    let mut beta = vec![0.0; d];
    let mut rank = 0;
    let mut singular_values = Vec::with_capacity(d);
    let mut right = Matrix::zeros(d, d);
    for (col, &s_idx) in order.iter().enumerate().take(d) {
        let s = sv[s_idx];
        singular_values.push(s);
        for j in 0..d {
            right.set(j, col, vt[(s_idx, j)]);
        }
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coef = u.column(s_idx).dot(&b) / s;
            for (j, bj) in beta.iter_mut().enumerate() {
                *bj += coef * vt[(s_idx, j)];
            }
        }
    }
    OlsFit { beta, rank, singular_values, right_vectors: right }
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues (ascending) and
/// eigenvectors as columns.
pub fn sym_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    check_symmetric(a)?;
    let eig = SymmetricEigen::new(a.to_nalgebra());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = a.rows();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn check_symmetric(a: &Matrix) -> Result<(), LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    let asym = a.max_asymmetry();
    if asym > 1e-10 * a.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    Ok(())
}

/// Applies `f` to the eigenvalues of a symmetric PSD matrix, mapping eigenvalues
/// below `1e-10 * lambda_max` to zero.
fn sym_spectral_map(a: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix, LinalgError> {
    let (values, vecs) = sym_eigen(a)?;
    let n = a.rows();
    let lmax = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let cutoff = RANK_RTOL * lmax;
    let mapped: Vec<f64> = values.iter().map(|&l| if l > cutoff && l > 0.0 { f(l) } else { 0.0 }).collect();
    Ok(Matrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            s += vecs.get(i, k) * mapped[k] * vecs.get(j, k);
        }
        s
    }))
}

/// Symmetric (pseudo) inverse square root of a PSD matrix.
pub fn sym_inv_sqrt(a: &Matrix) -> Result<Matrix, LinalgError> {
    sym_spectral_map(a, |l| 1.0 / l.sqrt())
}

/// Symmetric square root of a PSD matrix.
pub fn sym_sqrt(a: &Matrix) -> Result<Matrix, LinalgError> {
    sym_spectral_map(a, f64::sqrt)
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
pub fn sym_pinv(a: &Matrix) -> Result<Matrix, LinalgError> {
    sym_spectral_map(a, |l| 1.0 / l)
}

/// Ratio of extreme eigenvalues of a symmetric PSD matrix (infinite if singular).
pub fn sym_condition(a: &Matrix) -> Result<f64, LinalgError> {
    let (values, _) = sym_eigen(a)?;
    let lmax = values.last().copied().unwrap_or(0.0);
    let lmin = values.first().copied().unwrap_or(0.0);
    if lmin <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(lmax / lmin)
}

const POWER_MAX_ITERS: usize = 200_000;

/// Largest eigenvalue and eigenvector of a symmetric PSD matrix by power
/// iteration from a fixed seed vector.
pub fn power_iteration(g: &Matrix) -> (f64, Vec<f64>) {
    let k = g.rows();
    if k == 0 {
        return (0.0, Vec::new());
    }
    let mut v: Vec<f64> = (0..k).map(|i| 1.0 + 0.1 * ((i + 1) as f64) / (k as f64)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    let mut stable = 0;
    for _ in 0..POWER_MAX_ITERS {
        let u = g.matvec(&v);
        let next = dot(&v, &u);
        let nu = norm2(&u);
        if nu == 0.0 {
            return (0.0, v);
        }
        let resid: f64 = u.iter().zip(&v).map(|(a, b)| (a - next * b).powi(2)).sum::<f64>().sqrt();
        let change = (next - lambda).abs();
        lambda = next;
        v = u.into_iter().map(|x| x / nu).collect();
        if change <= 1e-14 * lambda.abs() && resid <= 1e-7 * lambda.abs() {
            stable += 1;
            if stable >= 3 {
                break;
            }
        } else {
            stable = 0;
        }
    }
    (lambda, v)
}

/// Largest singular value, by power iteration on the smaller of `AᵀA` and `AAᵀ`.
pub fn spectral_norm(a: &Matrix) -> f64 {
    assert!(a.rows() > 0 && a.cols() > 0, "spectral norm of an empty matrix");
    let g = if a.cols() <= a.rows() { a.gram() } else { a.outer_gram() };
    let (lambda, _) = power_iteration(&g);
    lambda.max(0.0).sqrt()
}
