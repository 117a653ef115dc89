//! Transmission codes on a d-point cyclic lattice.
//!
//! All convolution is cyclic. The DFT convention is the unnormalized
//! forward sum `ε̂(k) = Σ_t ε(t) e^{-2πi kt/d}`; the inverse carries `1/d`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ComplexVector};

/// Lengths for which [`PulseCode::barker`] has a table entry.
pub const BARKER_LENGTHS: [usize; 7] = [2, 3, 4, 5, 7, 11, 13];

fn barker_signs(n: usize) -> Option<&'static [i8]> {
    Some(match n {
        2 => &[1, 1],
        3 => &[1, 1, -1],
        4 => &[1, 1, -1, 1],
        5 => &[1, 1, 1, -1, 1],
        7 => &[1, 1, 1, -1, -1, 1, -1],
        11 => &[1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1],
        13 => &[1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1],
        _ => return None,
    })
}

/// Unnormalized forward DFT.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse of [`dft`], including the `1/d` factor.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let d = buf.len() as f64;
    buf.iter_mut().for_each(|z| *z /= d);
    buf
}

/// Transmission envelope sampled on the cyclic lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeJson", into = "CodeJson")]
pub struct PulseCode {
    label: String,
    samples: ComplexVector,
}

impl PulseCode {
    pub fn new(label: impl Into<String>, samples: ComplexVector) -> Self {
        Self { label: label.into(), samples }
    }

    /// Code with the given samples scaled to unit ℓ² norm.
    pub fn normalized(label: impl Into<String>, samples: Vec<Complex64>) -> Result<Self> {
        let v = ComplexVector::new(samples)?;
        let norm = v.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("cannot normalize an all-zero code".into()));
        }
        Ok(Self::new(label, ComplexVector::new(v.iter().map(|z| z / norm).collect())?))
    }

    /// Unit impulse at t = 0.
    pub fn dirac(d: usize) -> Result<Self> {
        Ok(Self::new(format!("dirac-{d}"), ComplexVector::basis(d, 0)?))
    }

    /// `1/√w` on the first `w` samples, zero elsewhere.
    pub fn boxcar(d: usize, width: usize) -> Result<Self> {
        if width == 0 || width > d {
            return Err(Error::InvalidWidth { d, width });
        }
        let h = 1.0 / (width as f64).sqrt();
        let samples = (0..d).map(|t| Complex64::new(if t < width { h } else { 0.0 }, 0.0)).collect();
        Ok(Self::new(format!("boxcar-{d}-{width}"), ComplexVector::new(samples)?))
    }

    /// Binary Barker sequence of length `n`, normalized, on an n-point lattice.
    pub fn barker(n: usize) -> Result<Self> {
        let signs = barker_signs(n).ok_or(Error::UnsupportedBarkerLength(n))?;
        let h = 1.0 / (n as f64).sqrt();
        let samples = signs.iter().map(|&s| Complex64::new(f64::from(s) * h, 0.0)).collect();
        Ok(Self::new(format!("barker-{n}"), ComplexVector::new(samples)?))
    }

    /// Same samples on a larger lattice, zeros appended.
    pub fn zero_padded(&self, d: usize) -> Result<Self> {
        if d < self.d() {
            return Err(Error::InvalidDimension(format!("cannot pad length {} down to {d}", self.d())));
        }
        let mut s = self.samples.to_vec();
        s.resize(d, Complex64::new(0.0, 0.0));
        Ok(Self::new(format!("{}-pad{d}", self.label), ComplexVector::new(s)?))
    }

    /// Cyclic delay by `shift` samples: `ε'(t) = ε(t - shift)`.
    pub fn shifted(&self, shift: usize) -> Self {
        let d = self.d();
        let s = (0..d).map(|t| self.samples[(t + d - shift % d) % d]).collect();
        Self::new(format!("{}-shift{shift}", self.label), ComplexVector::new(s).expect("d >= 1"))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn d(&self) -> usize {
        self.samples.dim()
    }

    pub fn samples(&self) -> &ComplexVector {
        &self.samples
    }

    pub fn norm(&self) -> f64 {
        self.samples.norm_sqr().sqrt()
    }

    /// Matrix of cyclic convolution with this code: `A[t][r] = ε((t - r) mod d)`.
    pub fn circulant_operator(&self) -> CMatrix {
        let d = self.d();
        CMatrix::from_fn(d, d, |t, r| self.samples[(t + d - r) % d])
    }

    /// Cyclic convolution `ε * μ`.
    pub fn convolve(&self, mu: &[Complex64]) -> Result<Vec<Complex64>> {
        let d = self.d();
        if mu.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mu.len() });
        }
        Ok((0..d).map(|t| (0..d).map(|r| self.samples[(t + d - r) % d] * mu[r]).sum()).collect())
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::from_coefficients(&dft(&self.samples))
    }

    /// Code whose DFT is `|ε̂(k)| e^{i phases[k]}`.
    pub fn twin_with_phases(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: phases.len() });
        }
        let spec = self.spectrum();
        let coeffs: Vec<Complex64> = spec.moduli.iter().zip(phases).map(|(&m, &p)| Complex64::from_polar(m, p)).collect();
        Ok(Self::new(format!("{}-twin", self.label), ComplexVector::new(idft(&coeffs))?))
    }

    /// Twin with identical spectral moduli and independent uniform phases.
    /// Conjugate symmetry is not enforced, so twins are generally complex.
    pub fn random_phase_twin<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..self.d()).map(|_| rng.random_range(-PI..PI)).collect();
        self.twin_with_phases(&phases).expect("phase count matches d")
    }
}

/// DFT moduli and phases of a code.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub moduli: Vec<f64>,
    /// In `(-π, π]`.
    pub phases: Vec<f64>,
}

impl Spectrum {
    pub fn from_coefficients(coeffs: &[Complex64]) -> Self {
        let moduli = coeffs.iter().map(|z| z.norm()).collect();
        let phases = coeffs
            .iter()
            .map(|z| {
                let a = z.arg();
                if a <= -PI {
                    PI
                } else {
                    a
                }
            })
            .collect();
        Self { moduli, phases }
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.moduli.iter().zip(&self.phases).map(|(&m, &p)| Complex64::from_polar(m, p)).collect()
    }

    /// Inverse DFT of `moduli · e^{i phases}`.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        idft(&self.coefficients())
    }

    pub fn max_modulus_gap(&self, other: &Spectrum) -> f64 {
        if self.moduli.len() != other.moduli.len() {
            return f64::INFINITY;
        }
        self.moduli.iter().zip(&other.moduli).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct CodeJson {
    label: String,
    d: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<CodeJson> for PulseCode {
    type Error = Error;

    fn try_from(j: CodeJson) -> Result<Self> {
        if j.re.len() != j.d {
            return Err(Error::DimensionMismatch { expected: j.d, got: j.re.len() });
        }
        if j.im.len() != j.d {
            return Err(Error::DimensionMismatch { expected: j.d, got: j.im.len() });
        }
        let samples = j.re.iter().zip(&j.im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        Ok(Self::new(j.label, ComplexVector::new(samples)?))
    }
}

impl From<PulseCode> for CodeJson {
    fn from(c: PulseCode) -> Self {
        Self { d: c.d(), re: c.samples.iter().map(|z| z.re).collect(), im: c.samples.iter().map(|z| z.im).collect(), label: c.label }
    }
}
