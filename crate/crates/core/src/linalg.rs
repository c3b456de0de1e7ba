//! Small dense linear algebra: row-major matrices, a cyclic Jacobi eigensolver for
//! symmetric matrices, grouped spectra, and the vec / Kronecker / commutation
//! operators used to build eigenprojection covariances.
//!
//! Dimensions in this crate stay small (d ≤ 10, tensors d² × d²), so everything
//! is plain `Vec<f64>` storage with no blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut, Range};

use crate::error::{invalid, Result, ScatterError};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
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
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid!("ragged rows"));
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix::from_row_major(rows.len(), cols, data)
    }

    /// Column vector (n × 1).
    pub fn column_vector(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Sub-matrix made of the given column range.
    pub fn columns(&self, range: Range<usize>) -> Matrix {
        Matrix::from_fn(self.rows, range.len(), |i, j| self[(i, range.start + j)])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(invalid!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(invalid!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols
            ));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(invalid!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric d × d matrix. Writes always go to both triangles, so
/// `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            inner: Matrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            inner: Matrix::identity(dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.inner[(i, i)] = v;
        }
        m
    }

    /// Fills from the upper triangle of `f` (j ≥ i) and mirrors it.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a square matrix whose asymmetry is below `tol` relative to its
    /// largest entry and symmetrizes it by averaging.
    pub fn from_matrix(m: &Matrix, tol: f64) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(invalid!("matrix is {}x{}, not square", m.rows(), m.cols()));
        }
        if m.rows() == 0 {
            return Err(invalid!("matrix dimension must be at least 1"));
        }
        if !m.is_finite() {
            return Err(invalid!("matrix has non-finite entries"));
        }
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        let d = m.rows();
        for i in 0..d {
            for j in (i + 1)..d {
                if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                    return Err(invalid!(
                        "matrix is not symmetric at ({}, {}): {} vs {}",
                        i,
                        j,
                        m[(i, j)],
                        m[(j, i)]
                    ));
                }
            }
        }
        Ok(SymMatrix::from_fn(d, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// `Σ w_i v_i v_iᵀ` accumulated without ever leaving symmetric storage.
    pub fn outer_sum<'a>(dim: usize, terms: impl IntoIterator<Item = (f64, &'a [f64])>) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for (w, v) in terms {
            for i in 0..dim {
                let wi = w * v[i];
                for j in i..dim {
                    m.inner[(i, j)] += wi * v[j];
                }
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                m.inner[(j, i)] = m.inner[(i, j)];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            inner: self.inner.scaled(s),
        }
    }

    /// Rescaled to unit trace. Fails when the trace is not positive.
    pub fn trace_normalized(&self) -> Result<SymMatrix> {
        let t = self.trace();
        if !(t > 0.0) || !t.is_finite() {
            return Err(ScatterError::Numerical(alloc::format!(
                "cannot normalize a matrix with trace {t}"
            )));
        }
        Ok(self.scaled(1.0 / t))
    }

    /// `B A Bᵀ` for a square `B`.
    pub fn congruence(&self, b: &Matrix) -> Result<SymMatrix> {
        let bab = b.matmul(&self.inner)?.matmul(&b.transpose())?;
        SymMatrix::from_matrix(&bab, 1e-8)
    }

    pub fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues in descending
/// order and the matching eigenvectors as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.values.len();
        let q = &self.vectors;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(d, |i, j| {
            (0..d).map(|k| q[(i, k)] * mapped[k] * q[(j, k)]).sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

/// Cyclic Jacobi eigensolver.
///
/// Sweeps plane rotations over every off-diagonal pair until the off-diagonal
/// Frobenius norm drops below `1e-14 · ‖A‖_F`, for at most 100 sweeps.
pub fn sym_eig(a: &SymMatrix) -> Result<SymEigen> {
    if !a.is_finite() {
        return Err(invalid!("matrix has non-finite entries"));
    }
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_REL_TOL * m.frobenius_norm();

    let off_norm = |m: &Matrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        libm::sqrt(s)
    };

    let mut sweeps = 0;
    let mut off = off_norm(&m);
    while off > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(ScatterError::Convergence {
                what: "Jacobi eigensolver",
                iterations: sweeps,
                residual: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_norm(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Singular values of `b`, descending, by one-sided Jacobi rotations on the
/// columns of `b` (or of `bᵀ` when that is taller). Returns `min(rows, cols)`
/// values; small singular values keep absolute accuracy of order ε‖b‖.
///
/// With `orthonormal_product` the caller asserts `b` is a product of two
/// orthonormal bases; values are then clamped to `[0, 1]`.
pub fn singular_values(b: &Matrix, orthonormal_product: bool) -> Result<Vec<f64>> {
    if !b.is_finite() {
        return Err(invalid!("matrix has non-finite entries"));
    }
    let a = if b.cols() <= b.rows() {
        b.clone()
    } else {
        b.transpose()
    };
    let n = a.cols();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ScatterError::Convergence {
            what: "one-sided Jacobi SVD",
            iterations: JACOBI_MAX_SWEEPS,
            residual: f64::NAN,
        });
    }
    let mut values: Vec<f64> = cols
        .iter()
        .map(|c| {
            let s = libm::sqrt(dot(c, c));
            if orthonormal_product {
                s.min(1.0)
            } else {
                s
            }
        })
        .collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Lower Cholesky factor of a positive definite matrix.
pub fn cholesky(a: &SymMatrix) -> Result<Matrix> {
    let n = a.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(ScatterError::Numerical(alloc::format!(
                "matrix is not positive definite (pivot {j} = {diag:.3e})"
            )));
        }
        let ljj = libm::sqrt(diag);
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` in place for lower-triangular `L`.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// The unique positive definite square root `Q diag(√λ) Qᵀ`.
pub fn sqrt_pd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    check_positive_definite(&eig)?;
    Ok(eig.reconstruct_with(libm::sqrt))
}

pub(crate) fn check_positive_definite(eig: &SymEigen) -> Result<()> {
    match eig.values.last() {
        Some(&l) if l > 0.0 => Ok(()),
        Some(&l) => Err(ScatterError::Domain(alloc::format!(
            "matrix is not positive definite (smallest eigenvalue {l:.3e})"
        ))),
        None => Err(invalid!("empty matrix")),
    }
}

/// Default relative gap below which adjacent eigenvalues are merged.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-8;

/// Distinct eigenvalues with multiplicities and an orthonormal basis whose
/// columns are grouped by eigenvalue (largest group first).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    distinct_values: Vec<f64>,
    multiplicities: Vec<usize>,
    basis: Matrix,
}

impl Spectrum {
    /// Validated constructor.
    pub fn new(
        distinct_values: Vec<f64>,
        multiplicities: Vec<usize>,
        basis: Matrix,
    ) -> Result<Self> {
        if distinct_values.is_empty() || distinct_values.len() != multiplicities.len() {
            return Err(invalid!(
                "{} distinct values but {} multiplicities",
                distinct_values.len(),
                multiplicities.len()
            ));
        }
        if multiplicities.iter().any(|&m| m == 0) {
            return Err(invalid!("multiplicities must be positive"));
        }
        if distinct_values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(invalid!("distinct values must be strictly decreasing"));
        }
        if distinct_values.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("eigenvalues must be finite"));
        }
        let d: usize = multiplicities.iter().sum();
        if basis.rows() != d || basis.cols() != d {
            return Err(invalid!(
                "basis is {}x{} but multiplicities sum to {}",
                basis.rows(),
                basis.cols(),
                d
            ));
        }
        let gram = basis.transpose().matmul(&basis)?;
        let dev = gram.sub(&Matrix::identity(d))?.max_abs();
        if dev > 1e-10 {
            return Err(invalid!("basis is not orthonormal (deviation {dev:.3e})"));
        }
        Ok(Spectrum {
            distinct_values,
            multiplicities,
            basis,
        })
    }

    /// Spectrum of a diagonal matrix `diag(λ₍₁₎ I_{d₁}, …, λ₍ₘ₎ I_{dₘ})` in the
    /// canonical basis.
    pub fn canonical(distinct_values: &[f64], multiplicities: &[usize]) -> Result<Self> {
        let d = multiplicities.iter().sum();
        Spectrum::new(
            distinct_values.to_vec(),
            multiplicities.to_vec(),
            Matrix::identity(d),
        )
    }

    /// Groups the eigenvalues of `a`, merging neighbours whose gap is below
    /// `tol · max(|λ₁|, 1)`.
    pub fn from_matrix(a: &SymMatrix, tol: f64) -> Result<Self> {
        let eig = sym_eig(a)?;
        let scale = eig.values[0].abs().max(1.0);
        let mut multiplicities = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        let mut prev = f64::INFINITY;
        for &l in &eig.values {
            if multiplicities.is_empty() || prev - l >= tol * scale {
                multiplicities.push(1);
                sums.push(l);
            } else {
                *multiplicities.last_mut().unwrap() += 1;
                *sums.last_mut().unwrap() += l;
            }
            prev = l;
        }
        let distinct = sums
            .iter()
            .zip(&multiplicities)
            .map(|(s, &m)| s / m as f64)
            .collect();
        Spectrum::new(distinct, multiplicities, eig.vectors)
    }

    /// Uses a caller-supplied multiplicity pattern; each group's value is the
    /// mean of its eigenvalues.
    pub fn with_multiplicities(a: &SymMatrix, multiplicities: &[usize]) -> Result<Self> {
        if multiplicities.iter().sum::<usize>() != a.dim() {
            return Err(invalid!(
                "multiplicities sum to {} but matrix dimension is {}",
                multiplicities.iter().sum::<usize>(),
                a.dim()
            ));
        }
        let eig = sym_eig(a)?;
        let mut start = 0;
        let mut distinct = Vec::with_capacity(multiplicities.len());
        for &m in multiplicities {
            distinct.push(eig.values[start..start + m].iter().sum::<f64>() / m as f64);
            start += m;
        }
        Spectrum::new(distinct, multiplicities.to_vec(), eig.vectors)
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn group_count(&self) -> usize {
        self.distinct_values.len()
    }

    pub fn distinct_values(&self) -> &[f64] {
        &self.distinct_values
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Column range of group `j` inside the basis.
    pub fn group_range(&self, j: usize) -> Range<usize> {
        let start: usize = self.multiplicities[..j].iter().sum();
        start..start + self.multiplicities[j]
    }

    /// Eigenprojection `P_j` onto the eigenspace of group `j`.
    pub fn projector(&self, j: usize) -> Result<SymMatrix> {
        if j >= self.group_count() {
            return Err(invalid!("group index {j} out of range"));
        }
        let q = self.basis.columns(self.group_range(j));
        Ok(projector_from_basis(&q))
    }

    /// Eigenvalues repeated by multiplicity (length d, descending).
    pub fn expanded_values(&self) -> Vec<f64> {
        self.distinct_values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &m)| core::iter::repeat(v).take(m))
            .collect()
    }

    /// `Σ_j λ₍ⱼ₎ P_j`.
    pub fn reconstruct(&self) -> SymMatrix {
        SymEigen {
            values: self.expanded_values(),
            vectors: self.basis.clone(),
        }
        .reconstruct()
    }
}

/// `Q Qᵀ` for a matrix with orthonormal columns.
pub fn projector_from_basis(q: &Matrix) -> SymMatrix {
    let d = q.rows();
    let l = q.cols();
    SymMatrix::from_fn(d, |i, j| (0..l).map(|k| q[(i, k)] * q[(j, k)]).sum())
}

/// Column-stacking `vec(A)`.
pub fn vec(a: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.rows() * a.cols());
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            out.push(a[(i, j)]);
        }
    }
    out
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(invalid!(
            "vector length {} is not {}x{}",
            v.len(),
            rows,
            cols
        ));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| v[j * rows + i]))
}

/// Kronecker product `A ⊗ B = [a_jk B]`.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid!("Kronecker factors must be finite"));
    }
    let (p, q) = (a.rows(), a.cols());
    let (r, s) = (b.rows(), b.cols());
    Ok(Matrix::from_fn(p * r, q * s, |i, j| {
        a[(i / r, j / s)] * b[(i % r, j % s)]
    }))
}

/// A d² × d² operator acting on `vec` of d × d matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorMatrix {
    dim: usize,
    entries: Matrix,
}

impl TensorMatrix {
    pub fn new(dim: usize, entries: Matrix) -> Result<Self> {
        if entries.rows() != dim * dim || entries.cols() != dim * dim {
            return Err(invalid!(
                "tensor operator for d = {} must be {}x{}",
                dim,
                dim * dim,
                dim * dim
            ));
        }
        if !entries.is_finite() {
            return Err(invalid!("tensor operator has non-finite entries"));
        }
        Ok(TensorMatrix { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        TensorMatrix {
            dim,
            entries: Matrix::identity(dim * dim),
        }
    }

    /// The underlying d in d² × d².
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_matrix(self) -> Matrix {
        self.entries
    }

    pub fn matmul(&self, other: &TensorMatrix) -> Result<TensorMatrix> {
        TensorMatrix::new(self.dim, self.entries.matmul(&other.entries)?)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.entries.matvec(v)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

/// Commutation matrix `K_{d,d} = Σ_ij J_ij ⊗ J_ijᵀ`, so that
/// `K vec(A) = vec(Aᵀ)`.
pub fn commutation_matrix(d: usize) -> Result<TensorMatrix> {
    if d == 0 {
        return Err(invalid!("dimension must be at least 1"));
    }
    let n = d * d;
    let mut k = Matrix::zeros(n, n);
    // vec index of (i, j) is j*d + i; Aᵀ puts a_ij at (j, i), i.e. index i*d + j.
    for i in 0..d {
        for j in 0..d {
            k[(i * d + j, j * d + i)] = 1.0;
        }
    }
    TensorMatrix::new(d, k)
}
