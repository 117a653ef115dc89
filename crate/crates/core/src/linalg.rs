//! Complex vectors and Hermitian matrices.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Asymmetry allowed when validating a Hermitian matrix, relative to
/// `max(1, max |entry|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted by [`HermitianMatrix::is_psd`].
pub const PSD_TOL: f64 = 1e-10;
/// Negative eigenvalues above `-SQRT_CLAMP_TOL` are clamped to zero when
/// taking a square root; anything lower is an error.
pub const SQRT_CLAMP_TOL: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// A finite complex vector of dimension at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(CVector);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension("vector must have at least one entry".into()));
        }
        Ok(Self(CVector::from_vec(entries)))
    }

    pub fn from_dvector(v: CVector) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidDimension("vector must have at least one entry".into()));
        }
        Ok(Self(v))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// Standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDimension(format!("basis index {index} out of range for dim {dim}")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Squared Euclidean norm `z'z`.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn as_dvector(&self) -> &CVector {
        &self.0
    }

    pub fn into_dvector(self) -> CVector {
        self.0
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        self.0.iter().copied().collect()
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        self.0.as_slice()
    }
}

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction symmetrizes the input, so the stored matrix is exactly
/// Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::InvalidDimension("matrix must be at least 1x1".into()));
        }
        if m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
        }
        let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        let mut asym = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M')/2` without validation. Used for products that are
    /// Hermitian up to rounding, such as `A X A'`.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        Self(h)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("matrix must be at least 1x1".into()));
        }
        Ok(Self(CMatrix::identity(dim, dim).scale(c)))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::scaled_identity(dim, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().0[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    /// The PSD square root `U sqrt(Λ) U'`.
    pub fn psd_sqrt(&self) -> Result<CMatrix> {
        let (values, vectors) = self.eigen();
        let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let mut roots = Vec::with_capacity(values.len());
        for &v in &values {
            if v < -SQRT_CLAMP_TOL * scale {
                return Err(Error::NotPositiveSemidefinite(v));
            }
            roots.push(Complex64::new(v.max(0.0).sqrt(), 0.0));
        }
        let d = CMatrix::from_diagonal(&CVector::from_vec(roots));
        Ok(&vectors * d * vectors.adjoint())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

impl Deref for HermitianMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn empty_vector_rejected() {
        assert!(matches!(ComplexVector::new(vec![]), Err(Error::InvalidDimension(_))));
        assert!(ComplexVector::zeros(0).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn accepts_hermitian_and_symmetrizes() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0 + 1e-14), c(2.0, 0.0)]);
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
        let (vals, _) = h.eigen();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        assert!(h.is_psd());
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let h = HermitianMatrix::new(m.clone()).unwrap();
        let r = h.psd_sqrt().unwrap();
        assert!(max_abs_diff(&(&r * &r), &m) < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let h = HermitianMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(!h.is_psd());
        assert!(matches!(h.psd_sqrt(), Err(Error::NotPositiveSemidefinite(_))));
    }
}
