//! Dense symmetric linear algebra: storage types, eigendecomposition,
//! Cholesky, log-determinant, inverse and the sample covariance.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense symmetric `p x p` matrix. Symmetry is exact: every constructor
/// either checks it or writes both triangles from the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps a square matrix, rejecting anything that is not exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let p = m.nrows();
        for j in 0..p {
            for i in (j + 1)..p {
                if m[(i, j)] != m[(j, i)] && !(m[(i, j)].is_nan() && m[(j, i)].is_nan()) {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Averages `m` with its transpose.
    pub fn symmetrize(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// Builds a matrix from the upper triangle `f(i, j)` with `i <= j`.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(p >= 1, "dimension must be at least 1");
        let mut m = DMatrix::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn from_row_slice(p: usize, data: &[f64]) -> Result<Self> {
        if data.len() != p * p {
            return Err(Error::InvalidInput(format!(
                "expected {} entries, got {}",
                p * p,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(p, p, data))
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix(DMatrix::identity(p, p))
    }

    pub fn zeros(p: usize) -> Self {
        SymMatrix(DMatrix::zeros(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.0.diagonal()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entrywise `self * s`.
    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        SymMatrix(&self.0 - &other.0)
    }

    /// `diag(d) - self`.
    pub fn sub_from_diag(&self, d: &DiagMatrix) -> SymMatrix {
        assert_eq!(self.dim(), d.dim(), "dimension mismatch");
        let mut m = -self.0.clone();
        for (j, v) in d.values().iter().enumerate() {
            m[(j, j)] += v;
        }
        SymMatrix(m)
    }

    /// `trace(self * other)` without forming the product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0.dot(&other.0)
    }
}

/// Diagonal matrix stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagMatrix(DVector<f64>);

impl DiagMatrix {
    pub fn new(diag: DVector<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidInput("empty diagonal".into()));
        }
        Ok(DiagMatrix(diag))
    }

    pub fn from_slice(diag: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(diag))
    }

    pub fn identity(p: usize) -> Self {
        DiagMatrix(DVector::from_element(p, 1.0))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0 && v.is_finite())
    }

    pub fn to_sym(&self) -> SymMatrix {
        SymMatrix(DMatrix::from_diagonal(&self.0))
    }

    pub fn recip(&self) -> DiagMatrix {
        DiagMatrix(self.0.map(|v| 1.0 / v))
    }
}

/// Eigenvalues sorted non-increasing with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.values);
        scaled * self.vectors.transpose()
    }
}

/// Full symmetric eigendecomposition, eigenvalues sorted descending.
///
/// Ties are ordered by the solver's original index (stable sort), so the
/// same input always gives the same column order.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenPairs> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let p = a.dim();
    let eig = SymmetricEigen::new(a.as_matrix().clone());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(Ordering::Equal)
    });
    let values = DVector::from_iterator(p, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenPairs { values, vectors })
}

/// Lower-triangular Cholesky factor `G` with `G G^T = A`.
///
/// A pivot at or below `1e-12 * trace(A) / p` is treated as a failure, which
/// makes this the positive-definiteness test used throughout the crate.
pub fn chol_pd(a: &SymMatrix) -> Result<DMatrix<f64>> {
    let p = a.dim();
    let m = a.as_matrix();
    let trace = a.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    let threshold = 1e-12 * trace / p as f64;
    let mut g = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= g[(j, k)] * g[(j, k)];
        }
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite);
        }
        let gjj = pivot.sqrt();
        g[(j, j)] = gjj;
        for i in (j + 1)..p {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= g[(i, k)] * g[(j, k)];
            }
            g[(i, j)] = s / gjj;
        }
    }
    Ok(g)
}

pub fn logdet_pd(a: &SymMatrix) -> Result<f64> {
    let g = chol_pd(a)?;
    Ok(2.0 * g.diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Inverse of a positive definite matrix through its Cholesky factor.
pub fn inv_pd(a: &SymMatrix) -> Result<SymMatrix> {
    let g = chol_pd(a)?;
    Ok(inv_from_cholesky(&g))
}

/// `(G G^T)^{-1}` for a lower-triangular factor `G`.
pub(crate) fn inv_from_cholesky(g: &DMatrix<f64>) -> SymMatrix {
    let p = g.nrows();
    let mut ginv = DMatrix::<f64>::identity(p, p);
    let solved = g.solve_lower_triangular_mut(&mut ginv);
    debug_assert!(solved, "Cholesky factor has a zero pivot");
    let inv = ginv.transpose() * &ginv;
    SymMatrix::from_fn(p, |i, j| 0.5 * (inv[(i, j)] + inv[(j, i)]))
}

/// `(1/n) X^T X` for an `n x p` data matrix whose rows are observations.
///
/// No mean is subtracted: the data are taken to be centered already.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<SymMatrix> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput(format!(
            "data matrix must be non-empty, got {n}x{p}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data has non-finite entries".into()));
    }
    let gram = x.tr_mul(x);
    let inv_n = 1.0 / n as f64;
    Ok(SymMatrix::from_fn(p, |i, j| gram[(i, j)] * inv_n))
}

/// Subtracts column means in place.
pub fn center_columns(x: &mut DMatrix<f64>) {
    let n = x.nrows();
    if n == 0 {
        return;
    }
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
}

/// Number of eigenvalues above `1e-8 * max(1, largest eigenvalue)`.
pub fn numerical_rank(values: &DVector<f64>) -> usize {
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-8 * top.max(1.0);
    values.iter().filter(|&&v| v > tol).count()
}
