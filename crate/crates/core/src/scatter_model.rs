//! Discretized incoherent-scatter forward model on a d-point cyclic lattice.
//!
//! The received signal is `z = A μ + √T ξ` where `A` is cyclic convolution
//! with the transmission code, `μ ~ CN(0, X)` with `X` the structure
//! operator of a [`VarianceField`], and `ξ` is complex white noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::complex_gaussian::white_noise_dvector;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, ComplexVector, HermitianMatrix};
use crate::pulse_codes::{dft, PulseCode};
use crate::rng::RngStream;
use crate::table::{fmt_f64, ResultTable};

/// Pointwise tolerance on `Σ_j χ_j(t)² = 1` for hand-supplied windows.
pub const PARTITION_TOL: f64 = 1e-10;

/// Thermal noise power `T ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidParameter(format!("temperature must be finite and >= 0, got {t}")));
        }
        Ok(Self(t))
    }

    pub const ZERO: Temperature = Temperature(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// How [`PartitionOfUnity::smooth_with`] normalizes its windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowNormalization {
    /// `Σ_j χ_j(t)² = 1` at every lattice point.
    #[default]
    SumOfSquares,
    /// `‖χ_j‖₂ = 1` for each window.
    UnitNorm,
}

/// Periodic windows `χ_1..χ_N` on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    d: usize,
    windows: Vec<Vec<f64>>,
    normalization: WindowNormalization,
}

impl PartitionOfUnity {
    /// Raised-cosine windows with `Σ_j χ_j² = 1`.
    pub fn smooth(d: usize, count: usize) -> Result<Self> {
        Self::smooth_with(d, count, WindowNormalization::SumOfSquares)
    }

    /// `count` cyclic translates (by `d/count` samples) of a cos² taper
    /// centred at t = 0 with half-width `d/count`, then normalized.
    pub fn smooth_with(d: usize, count: usize, normalization: WindowNormalization) -> Result<Self> {
        if count == 0 || !d.is_multiple_of(count) || d / count < 2 {
            return Err(Error::InvalidPartition { d, windows: count });
        }
        let step = d / count;
        let half_width = step as f64;
        let raw: Vec<f64> = (0..d)
            .map(|t| {
                let u = cyclic_offset(t, d);
                if u.abs() < half_width {
                    (PI * u / (2.0 * half_width)).cos().powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        let base: Vec<f64> = match normalization {
            WindowNormalization::SumOfSquares => {
                // Σ_m raw(t - m·step)² has period `step`.
                let norm: Vec<f64> =
                    (0..step).map(|t| (0..count).map(|m| raw[(t + d - m * step) % d].powi(2)).sum::<f64>().sqrt()).collect();
                raw.iter().enumerate().map(|(t, x)| x / norm[t % step]).collect()
            }
            WindowNormalization::UnitNorm => {
                let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                raw.iter().map(|x| x / n).collect()
            }
        };
        let windows = (0..count).map(|j| rotate(&base, j * step)).collect();
        Ok(Self { d, windows, normalization })
    }

    /// Kronecker windows `χ_j = e_j`; turns a partition field into a
    /// pointwise one.
    pub fn delta(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("lattice size must be >= 1".into()));
        }
        let windows = (0..d).map(|j| (0..d).map(|t| if t == j { 1.0 } else { 0.0 }).collect()).collect();
        Ok(Self { d, windows, normalization: WindowNormalization::SumOfSquares })
    }

    /// Caller-supplied windows; must satisfy `Σ_j χ_j² = 1` pointwise.
    pub fn from_windows(windows: Vec<Vec<f64>>) -> Result<Self> {
        let d = windows.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidDimension("need at least one non-empty window".into()));
        }
        if let Some(w) = windows.iter().find(|w| w.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: w.len() });
        }
        for t in 0..d {
            let s: f64 = windows.iter().map(|w| w[t] * w[t]).sum();
            if (s - 1.0).abs() > PARTITION_TOL {
                return Err(Error::InvalidParameter(format!("sum of squared windows is {s} at t = {t}")));
            }
        }
        Ok(Self { d, windows, normalization: WindowNormalization::SumOfSquares })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn count(&self) -> usize {
        self.windows.len()
    }

    pub fn windows(&self) -> &[Vec<f64>] {
        &self.windows
    }

    pub fn normalization(&self) -> WindowNormalization {
        self.normalization
    }

    /// `Σ_j χ_j(t)²` for every t.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        (0..self.d).map(|t| self.windows.iter().map(|w| w[t] * w[t]).sum()).collect()
    }
}

fn cyclic_offset(t: usize, d: usize) -> f64 {
    if 2 * t <= d {
        t as f64
    } else {
        t as f64 - d as f64
    }
}

/// `out[t] = x[(t - shift) mod d]`.
fn rotate(x: &[f64], shift: usize) -> Vec<f64> {
    let d = x.len();
    (0..d).map(|t| x[(t + d - shift % d) % d]).collect()
}

/// The unknown variance function `|σ|²`.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceField {
    Constant(f64),
    Pointwise(Vec<f64>),
    Partition { sigma2: Vec<f64>, partition: PartitionOfUnity },
}

impl VarianceField {
    pub fn constant(sigma0_sq: f64) -> Result<Self> {
        if !(sigma0_sq.is_finite() && sigma0_sq > 0.0) {
            return Err(Error::InvalidParameter(format!("constant variance must be > 0, got {sigma0_sq}")));
        }
        Ok(Self::Constant(sigma0_sq))
    }

    pub fn pointwise(values: Vec<f64>) -> Result<Self> {
        check_nonnegative(&values)?;
        if values.is_empty() {
            return Err(Error::InvalidDimension("pointwise field needs d >= 1 values".into()));
        }
        Ok(Self::Pointwise(values))
    }

    pub fn partitioned(sigma2: Vec<f64>, partition: PartitionOfUnity) -> Result<Self> {
        check_nonnegative(&sigma2)?;
        if sigma2.len() != partition.count() {
            return Err(Error::DimensionMismatch { expected: partition.count(), got: sigma2.len() });
        }
        Ok(Self::Partition { sigma2, partition })
    }

    fn check_d(&self, d: usize) -> Result<()> {
        match self {
            Self::Constant(_) => Ok(()),
            Self::Pointwise(v) if v.len() != d => Err(Error::DimensionMismatch { expected: d, got: v.len() }),
            Self::Partition { partition, .. } if partition.d() != d => Err(Error::DimensionMismatch { expected: d, got: partition.d() }),
            _ => Ok(()),
        }
    }

    /// The covariance `X` of the discretized scatterer `μ`.
    pub fn structure_operator(&self, d: usize) -> Result<HermitianMatrix> {
        self.check_d(d)?;
        let m = match self {
            Self::Constant(s) => CMatrix::identity(d, d).scale(*s),
            Self::Pointwise(v) => CMatrix::from_diagonal(&CVector::from_iterator(d, v.iter().map(|&x| Complex64::new(x, 0.0)))),
            Self::Partition { sigma2, partition } => {
                let mut x = CMatrix::zeros(d, d);
                for (s, w) in sigma2.iter().zip(partition.windows()) {
                    for r in 0..d {
                        for c in 0..d {
                            x[(r, c)] += Complex64::new(s * w[r] * w[c], 0.0);
                        }
                    }
                }
                x
            }
        };
        HermitianMatrix::new(m)
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    match values.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        Some(x) => Err(Error::InvalidParameter(format!("variance values must be >= 0, got {x}"))),
        None => Ok(()),
    }
}

/// `Σ = T I + A X A'`.
pub fn signal_covariance(code: &PulseCode, field: &VarianceField, temperature: Temperature) -> Result<HermitianMatrix> {
    let d = code.d();
    let a = code.circulant_operator();
    let x = field.structure_operator(d)?;
    let sigma = CMatrix::identity(d, d).scale(temperature.value()) + &a * x.as_matrix() * a.adjoint();
    Ok(HermitianMatrix::symmetrized(sigma))
}

/// `E[z_t conj(z_t')]` summed directly from the kernel
/// `A_tt'(r) = ε(t-r) conj(ε(t'-r))`, with `T` on the diagonal.
pub fn lag_profile(code: &PulseCode, field: &VarianceField, temperature: Temperature) -> Result<HermitianMatrix> {
    let d = code.d();
    field.check_d(d)?;
    let eps = |k: isize| code.samples()[k.rem_euclid(d as isize) as usize];
    let mut out = CMatrix::zeros(d, d);
    match field {
        VarianceField::Constant(_) | VarianceField::Pointwise(_) => {
            let var = |r: usize| match field {
                VarianceField::Constant(s) => *s,
                VarianceField::Pointwise(v) => v[r],
                VarianceField::Partition { .. } => unreachable!(),
            };
            for t in 0..d {
                for tp in 0..d {
                    out[(t, tp)] = (0..d)
                        .map(|r| {
                            let (ti, tpi, ri) = (t as isize, tp as isize, r as isize);
                            eps(ti - ri) * eps(tpi - ri).conj() * var(r)
                        })
                        .sum();
                }
            }
        }
        VarianceField::Partition { sigma2, partition } => {
            // X is not diagonal here: Σ_j σ_j² (ε*χ_j)(t) conj((ε*χ_j)(t')).
            for (s, w) in sigma2.iter().zip(partition.windows()) {
                let smeared: Vec<Complex64> = (0..d as isize).map(|t| (0..d).map(|r| eps(t - r as isize) * w[r]).sum()).collect();
                for t in 0..d {
                    for tp in 0..d {
                        out[(t, tp)] += smeared[t] * smeared[tp].conj() * *s;
                    }
                }
            }
        }
    }
    for t in 0..d {
        out[(t, t)] += temperature.value();
    }
    Ok(HermitianMatrix::symmetrized(out))
}

/// `(1/d) Σ_k [σ₀² |ε̂(k)|² + T] |φ̂(k)|²`, the torus integral of the
/// constant-variance quadratic form evaluated in the DFT domain.
pub fn quad_form_constant(code: &PulseCode, phi: &ComplexVector, sigma0_sq: f64, temperature: Temperature) -> Result<f64> {
    if phi.dim() != code.d() {
        return Err(Error::DimensionMismatch { expected: code.d(), got: phi.dim() });
    }
    let eps_hat = dft(code.samples());
    let phi_hat = dft(phi);
    let sum: f64 = eps_hat.iter().zip(&phi_hat).map(|(e, p)| (sigma0_sq * e.norm_sqr() + temperature.value()) * p.norm_sqr()).sum();
    Ok(sum / code.d() as f64)
}

/// Covariance of the observations `Y_i = ⟨φ_i, z⟩ = Σ_t φ_i(t) z(t)`:
///
/// `E[Y_i conj(Y_j)] = Σ_k σ_k² ⟨φ_i, Aχ_k⟩ conj(⟨φ_j, Aχ_k⟩) + T φ_j'φ_i`.
pub fn marginal_covariance(
    code: &PulseCode,
    partition: &PartitionOfUnity,
    sigma2: &[f64],
    temperature: Temperature,
    test_functions: &[ComplexVector],
) -> Result<HermitianMatrix> {
    let d = code.d();
    if partition.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: partition.d() });
    }
    if sigma2.len() != partition.count() {
        return Err(Error::DimensionMismatch { expected: partition.count(), got: sigma2.len() });
    }
    check_nonnegative(sigma2)?;
    if test_functions.is_empty() {
        return Err(Error::InvalidDimension("need at least one test function".into()));
    }
    if let Some(f) = test_functions.iter().find(|f| f.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
    }
    let smeared: Vec<Vec<Complex64>> = partition
        .windows()
        .iter()
        .map(|w| code.convolve(&w.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let pair = |phi: &ComplexVector, f: &[Complex64]| -> Complex64 { phi.iter().zip(f).map(|(a, b)| a * b).sum() };
    // pairings[i][k] = ⟨φ_i, Aχ_k⟩
    let pairings: Vec<Vec<Complex64>> = test_functions.iter().map(|phi| smeared.iter().map(|f| pair(phi, f)).collect()).collect();
    let m = test_functions.len();
    let out = CMatrix::from_fn(m, m, |i, j| {
        let signal: Complex64 = sigma2.iter().enumerate().map(|(k, s)| pairings[i][k] * pairings[j][k].conj() * *s).sum();
        let gram: Complex64 = test_functions[j].iter().zip(test_functions[i].iter()).map(|(a, b)| a.conj() * b).sum();
        signal + gram * temperature.value()
    });
    Ok(HermitianMatrix::symmetrized(out))
}

/// One simulated observation with its latent scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDraw {
    pub z: ComplexVector,
    pub mu: ComplexVector,
    pub code_label: String,
    pub temperature: f64,
    pub stream: RngStream,
}

impl SignalDraw {
    /// Rows `t, re_z, im_z, re_mu, im_mu`.
    pub fn to_table(&self) -> ResultTable {
        let mut table = ResultTable::new(["t", "re_z", "im_z", "re_mu", "im_mu"]);
        for (t, (z, mu)) in self.z.iter().zip(self.mu.iter()).enumerate() {
            table.push(vec![t.to_string(), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(mu.re), fmt_f64(mu.im)]);
        }
        table
    }
}

/// Precomputed `A`, `X^{1/2}` and `√T` for repeated draws.
#[derive(Debug, Clone)]
pub struct SignalSimulator {
    a: CMatrix,
    x_root: CMatrix,
    noise_scale: f64,
}

impl SignalSimulator {
    pub fn new(code: &PulseCode, field: &VarianceField, temperature: Temperature) -> Result<Self> {
        let x = field.structure_operator(code.d())?;
        Ok(Self { a: code.circulant_operator(), x_root: x.psd_sqrt()?, noise_scale: temperature.value().sqrt() })
    }

    /// `(z, μ)` with `μ = X^{1/2} w₁`, `z = A μ + √T w₂`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (CVector, CVector) {
        let d = self.a.nrows();
        let mu = &self.x_root * white_noise_dvector(d, rng);
        let noise = white_noise_dvector(d, rng);
        let z = &self.a * &mu + noise.scale(self.noise_scale);
        (z, mu)
    }
}

pub fn simulate_signal(code: &PulseCode, field: &VarianceField, temperature: Temperature, stream: RngStream) -> Result<SignalDraw> {
    let sim = SignalSimulator::new(code, field, temperature)?;
    let (z, mu) = sim.draw(&mut stream.generator());
    Ok(SignalDraw {
        z: ComplexVector::from_dvector(z)?,
        mu: ComplexVector::from_dvector(mu)?,
        code_label: code.label().to_string(),
        temperature: temperature.value(),
        stream,
    })
}
