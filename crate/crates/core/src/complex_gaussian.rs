//! Circular complex Gaussian vectors.
//!
//! Covariance always means `E[WW']` with `W = X - E X`, so discrete complex
//! white noise has identity covariance. Under this convention the
//! characteristic function `E exp(i Re(X'φ))` carries a factor 1/4:
//! `exp(i Re(m'φ) - φ'Σφ/4)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ComplexVector, HermitianMatrix};

/// Relative eigenvalue floor below which a law has no density.
pub const DENSITY_EIGEN_FLOOR: f64 = 1e-12;

/// One draw of circular complex white noise, `(g1 + i g2)/√2`.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `dim` iid entries with `E z = 0`, `E|z|² = 1`, `E z² = 0`.
pub fn sample_white_noise<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension("white noise needs dim >= 1".into()));
    }
    ComplexVector::new((0..dim).map(|_| standard_complex(rng)).collect())
}

pub(crate) fn white_noise_dvector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_fn(dim, |_, _| standard_complex(rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGaussianLaw {
    mean: ComplexVector,
    covariance: HermitianMatrix,
}

impl ComplexGaussianLaw {
    pub fn new(mean: ComplexVector, covariance: HermitianMatrix) -> Result<Self> {
        if mean.dim() != covariance.dim() {
            return Err(Error::DimensionMismatch { expected: covariance.dim(), got: mean.dim() });
        }
        if !covariance.is_psd() {
            return Err(Error::NotPositiveSemidefinite(covariance.min_eigenvalue()));
        }
        Ok(Self { mean, covariance })
    }

    /// Zero-mean law with identity covariance.
    pub fn white_noise(dim: usize) -> Result<Self> {
        Ok(Self { mean: ComplexVector::zeros(dim)?, covariance: HermitianMatrix::identity(dim)? })
    }

    pub fn centered(covariance: HermitianMatrix) -> Result<Self> {
        Self::new(ComplexVector::zeros(covariance.dim())?, covariance)
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn mean(&self) -> &ComplexVector {
        &self.mean
    }

    pub fn covariance(&self) -> &HermitianMatrix {
        &self.covariance
    }

    /// Law of `shift + factor · X` for `X` with this law.
    pub fn affine_push(&self, shift: &ComplexVector, factor: &CMatrix) -> Result<Self> {
        if factor.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: factor.ncols() });
        }
        if factor.nrows() != shift.dim() {
            return Err(Error::DimensionMismatch { expected: factor.nrows(), got: shift.dim() });
        }
        let mean = shift.as_dvector() + factor * self.mean.as_dvector();
        let cov = factor * self.covariance.as_matrix() * factor.adjoint();
        Ok(Self { mean: ComplexVector::from_dvector(mean)?, covariance: HermitianMatrix::symmetrized(cov) })
    }

    /// `E exp(i Re(X'φ))`.
    pub fn characteristic_function(&self, phi: &ComplexVector) -> Result<Complex64> {
        self.check_dim(phi.dim())?;
        let phi = phi.as_dvector();
        let shift = self.mean.as_dvector().dotc(phi).re;
        let quad = phi.dotc(&(self.covariance.as_matrix() * phi)).re;
        Ok(Complex64::new(-0.25 * quad, shift).exp())
    }

    /// `log[π^{-n} det(Σ)^{-1} exp(-(z-m)'Σ^{-1}(z-m))]`.
    pub fn log_density(&self, z: &ComplexVector) -> Result<f64> {
        self.check_dim(z.dim())?;
        let (values, vectors) = self.covariance.eigen();
        let max = values.last().copied().unwrap_or(0.0);
        if max <= 0.0 || values[0] <= DENSITY_EIGEN_FLOOR * max {
            return Err(Error::SingularLaw(format!("covariance eigenvalues span [{:e}, {:e}]; no density exists", values[0], max)));
        }
        let centered = z.as_dvector() - self.mean.as_dvector();
        let rotated = vectors.adjoint() * centered;
        let quad: f64 = rotated.iter().zip(&values).map(|(w, l)| w.norm_sqr() / l).sum();
        let log_det: f64 = values.iter().map(|l| l.ln()).sum();
        Ok(-(self.dim() as f64) * PI.ln() - log_det - quad)
    }

    /// Precomputes the covariance square root for repeated sampling.
    pub fn sampler(&self) -> Result<LawSampler> {
        Ok(LawSampler { mean: self.mean.as_dvector().clone(), root: self.covariance.psd_sqrt()? })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }
}

/// Draws `m + Σ^{1/2} Y` with `Y` white noise.
#[derive(Debug, Clone)]
pub struct LawSampler {
    mean: CVector,
    root: CMatrix,
}

impl LawSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let w = white_noise_dvector(self.mean.len(), rng);
        &self.mean + &self.root * w
    }
}

/// A Haar-ish random unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| standard_complex(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Sample covariance `(1/n) Σ x x'` about the known zero mean, with the
/// per-entry standard error of that estimate.
pub fn sample_second_moments(draws: &[CVector]) -> (CMatrix, DVector<f64>) {
    let n = draws.len();
    let dim = draws[0].len();
    let mut sum = CMatrix::zeros(dim, dim);
    let mut sum_sq = vec![0.0_f64; dim * dim];
    for x in draws {
        for i in 0..dim {
            for j in 0..dim {
                let p = x[i] * x[j].conj();
                sum[(i, j)] += p;
                sum_sq[i * dim + j] += p.norm_sqr();
            }
        }
    }
    let nf = n as f64;
    let mean = sum.unscale(nf);
    let se = DVector::from_fn(dim * dim, |k, _| {
        let (i, j) = (k / dim, k % dim);
        let var = (sum_sq[k] / nf - mean[(i, j)].norm_sqr()).max(0.0);
        (var / nf).sqrt()
    });
    (mean, se)
}
