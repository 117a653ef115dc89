//! Posterior analysis of a constant scattering variance.
//!
//! The canonical unknown is `v = T + |σ₀|²`, the per-sample signal power of
//! a unit-norm code. For a code with circulant operator `A` the data
//! covariance is `Σ(v) = T I + (v - T) AA'`; for white codes (`AA' = I`)
//! this is `v I` and an inverse-Wishart prior on `v` is conjugate.
//! Summaries of `|σ₀|²` follow by the affine shift `v - T`.

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::complex_gaussian::ComplexGaussianLaw;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ComplexVector};
use crate::pulse_codes::PulseCode;
use crate::rng::RngStream;
use crate::scatter_model::{marginal_covariance, signal_covariance, PartitionOfUnity, Temperature, VarianceField};
use crate::wishart::{self, InverseWishartParams};

/// Minimum number of points [`grid_posterior_scalar`] accepts.
pub const MIN_GRID_POINTS: usize = 100;
/// Largest estimated probability mass allowed outside a posterior grid.
pub const MAX_TAIL_MASS: f64 = 1e-6;
/// Default number of points in a posterior grid.
pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Spectral gains below this fraction of the largest are treated as zero
/// when `T = 0` (the data then live on a lower-dimensional subspace).
const NULL_GAIN_TOL: f64 = 1e-12;
const WHITE_TOL: f64 = 1e-12;

/// How a complex sample `z_i` with power `v` enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodConvention {
    /// `-½ ln v - |z|²/(2v)` per sample; conjugate update `(ψ + |z|², ν + 1)`.
    #[default]
    RealGaussian,
    /// Exact circular density `-ln(πv) - |z|²/v`; conjugate update
    /// `(ψ + 2|z|², ν + 2)`.
    CircularComplex,
}

impl LikelihoodConvention {
    /// Multiplier on `ln λ` and on `|z|²/λ` in the negative log likelihood.
    fn weight(self) -> f64 {
        match self {
            Self::RealGaussian => 0.5,
            Self::CircularComplex => 1.0,
        }
    }

    /// Conjugate increments to `(ψ, ν)` from `count` samples of total energy.
    fn increments(self, energy: f64, count: usize) -> (f64, f64) {
        let k = 2.0 * self.weight();
        (k * energy, k * count as f64)
    }
}

/// Identity-code model with `c` scaling: `z_i | v ~ N(0, T + c²|σ₀|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarModelSpec {
    pub temperature: Temperature,
    pub c: f64,
    pub d: usize,
}

impl ScalarModelSpec {
    pub fn new(temperature: Temperature, c: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("scalar model needs d >= 1".into()));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("code scale must be finite, got {c}")));
        }
        Ok(Self { temperature, c, d })
    }
}

/// Conjugate posterior `W⁻¹(σ₁² + |z|², ν + d)` of `v = T + |σ₀|²` for the
/// identity code. Empty data returns the prior.
pub fn constant_variance_posterior(prior: &InverseWishartParams, spec: &ScalarModelSpec, z: &[Complex64]) -> Result<InverseWishartParams> {
    constant_variance_posterior_with(prior, spec, z, LikelihoodConvention::RealGaussian)
}

pub fn constant_variance_posterior_with(
    prior: &InverseWishartParams,
    spec: &ScalarModelSpec,
    z: &[Complex64],
    convention: LikelihoodConvention,
) -> Result<InverseWishartParams> {
    let psi = prior.scalar_scale()?;
    if z.is_empty() {
        return Ok(prior.clone());
    }
    if spec.c != 1.0 {
        return Err(Error::Unsupported(format!("analytic posterior only for c = 1 (got c = {}); use the grid posterior", spec.c)));
    }
    if z.len() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: z.len() });
    }
    let energy: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let (dpsi, dnu) = convention.increments(energy, z.len());
    InverseWishartParams::scalar(psi + dpsi, prior.dof() + dnu)
}

/// A posterior density tabulated on an increasing grid of `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    grid: Vec<f64>,
    log_density: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl GridPosterior {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Normalized log density at each grid point.
    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    pub fn density(&self) -> Vec<f64> {
        self.log_density.iter().map(|l| l.exp()).collect()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Trapezoid cumulative distribution at each grid point.
    pub fn cdf(&self) -> Vec<f64> {
        let f = self.density();
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..f.len() {
            acc += 0.5 * (f[i] + f[i - 1]) * (self.grid[i] - self.grid[i - 1]);
            out.push(acc);
        }
        out
    }

    /// Posterior probability that `v < x`, by trapezoid up to the last grid
    /// point below `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let cdf = self.cdf();
        match self.grid.iter().rposition(|&g| g <= x) {
            Some(i) => cdf[i],
            None => 0.0,
        }
    }
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(xs, fs)| 0.5 * (fs[0] + fs[1]) * (xs[1] - xs[0])).sum()
}

/// Normalizes `exp(loglik(v) + log_prior(v))` over `grid` by the trapezoid
/// rule and checks that the grid captures all but [`MAX_TAIL_MASS`] of it.
///
/// The tail check extrapolates the last two points of `v·f(v)` as an
/// exponential in `ln v` beyond each end.
pub fn grid_posterior_scalar<L, P>(loglik: L, log_prior: P, grid: &[f64]) -> Result<GridPosterior>
where
    L: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::GridRange(format!("grid has {} points, need at least {MIN_GRID_POINTS}", grid.len())));
    }
    if grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridRange("grid must be positive and strictly increasing".into()));
    }
    let log_unnorm: Vec<f64> = grid.iter().map(|&v| loglik(v) + log_prior(v)).collect();
    if let Some(i) = log_unnorm.iter().position(|l| !l.is_finite()) {
        return Err(Error::GridRange(format!("non-finite log posterior {} at v = {}", log_unnorm[i], grid[i])));
    }
    let peak = log_unnorm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rel: Vec<f64> = log_unnorm.iter().map(|l| (l - peak).exp()).collect();
    let z = trapezoid(grid, &rel);
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::GridRange("posterior mass on grid is zero".into()));
    }
    let f: Vec<f64> = rel.iter().map(|x| x / z).collect();

    let n = grid.len();
    let tail = tail_estimate(grid[n - 1], f[n - 1], grid[n - 2], f[n - 2]) + tail_estimate(grid[0], f[0], grid[1], f[1]);
    if tail > MAX_TAIL_MASS {
        return Err(Error::GridRange(format!("estimated mass outside grid {tail:e} exceeds {MAX_TAIL_MASS:e}")));
    }

    let mean = trapezoid(grid, &grid.iter().zip(&f).map(|(v, p)| v * p).collect::<Vec<_>>());
    let variance = trapezoid(grid, &grid.iter().zip(&f).map(|(v, p)| (v - mean).powi(2) * p).collect::<Vec<_>>());
    let log_z = z.ln() + peak;
    Ok(GridPosterior { grid: grid.to_vec(), log_density: log_unnorm.iter().map(|l| l - log_z).collect(), mean, variance })
}

/// Mass beyond `v_end`, modelling `g(u) = v f(v)` with `u = ln v` as an
/// exponential through the end point and its neighbour.
fn tail_estimate(v_end: f64, f_end: f64, v_in: f64, f_in: f64) -> f64 {
    let g_end = v_end * f_end;
    if g_end == 0.0 {
        return 0.0;
    }
    let g_in = v_in * f_in;
    // decay rate per unit of |ln v| moving outward
    let rate = (g_in.ln() - g_end.ln()) / (v_in.ln() - v_end.ln()).abs();
    if !(rate > 0.0) {
        return f64::INFINITY;
    }
    g_end / rate
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Log-spaced grid for an inverse gamma with `shape` and `scale` (scalar
/// `W⁻¹(ψ, ν)` has shape ν/2, scale ψ/2).
///
/// Lower end: the 1e-10 quantile. Upper end: at least the 1 - 1e-8
/// quantile, pushed further out until the tail's share of `E[v²]` is below
/// 1e-8, so grid moments match the closed forms even for heavy tails.
pub fn inverse_gamma_grid(shape: f64, scale: f64, points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = inverse_gamma_bounds(shape, scale)?;
    Ok(log_spaced(lo, hi, points))
}

/// End points used by [`inverse_gamma_grid`].
pub fn inverse_gamma_bounds(shape: f64, scale: f64) -> Result<(f64, f64)> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("inverse gamma needs shape, scale > 0 (got {shape}, {scale})")));
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let lo = scale / g.inverse_cdf(1.0 - 1e-10);
    // P(v > Q) <= (scale/Q)^shape / Γ(shape + 1)
    let upper = |p: f64| scale * ((p.ln() + ln_gamma(shape + 1.0)) / shape).exp().recip();
    let mut p = 1e-8;
    if shape > 2.0 {
        let second = scale * scale / ((shape - 1.0) * (shape - 2.0));
        while upper(p).powi(2) * p * shape / (shape - 2.0) > 1e-8 * second && p > 1e-300 {
            p *= 1e-2;
        }
    } else {
        p = 1e-12;
    }
    Ok((lo, upper(p).max(scale / g.inverse_cdf(1e-8))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorOptions {
    pub convention: LikelihoodConvention,
    pub grid_points: usize,
}

impl Default for PosteriorOptions {
    fn default() -> Self {
        Self { convention: LikelihoodConvention::default(), grid_points: DEFAULT_GRID_POINTS }
    }
}

/// Likelihood of `v` under a fixed code and temperature, in the eigenbasis
/// of `K = AA'`. `K` is assembled through [`marginal_covariance`] with
/// standard-basis test functions and Kronecker windows.
#[derive(Debug, Clone)]
pub struct ConstantVarianceModel {
    temperature: f64,
    /// Rows are the conjugated eigenvectors of the kept modes.
    projector: CMatrix,
    gains: Vec<f64>,
    prior: InverseWishartParams,
    options: PosteriorOptions,
    white: bool,
    support_floor: f64,
    /// Modes whose variance grows with `v`; sets the power-law upper tail.
    active_modes: usize,
}

impl ConstantVarianceModel {
    pub fn new(code: &PulseCode, temperature: Temperature, prior: &InverseWishartParams, options: PosteriorOptions) -> Result<Self> {
        prior.scalar_scale()?;
        let d = code.d();
        let basis: Vec<ComplexVector> = (0..d).map(|i| ComplexVector::basis(d, i)).collect::<Result<_>>()?;
        let k = marginal_covariance(code, &PartitionOfUnity::delta(d)?, &vec![1.0; d], Temperature::ZERO, &basis)?;
        let (values, vectors) = k.eigen();
        let gmax = values.iter().copied().fold(0.0, f64::max);
        if gmax <= 0.0 {
            return Err(Error::SingularLaw("code has an all-zero spectrum".into()));
        }
        let t = temperature.value();
        let keep: Vec<usize> = (0..d).filter(|&i| t > 0.0 || values[i] > NULL_GAIN_TOL * gmax).collect();
        let gains: Vec<f64> = keep.iter().map(|&i| values[i].max(0.0)).collect();
        let projector = CMatrix::from_fn(keep.len(), d, |r, c| vectors[(c, keep[r])].conj());
        let white = gains.len() == d && gains.iter().all(|g| (g - 1.0).abs() < WHITE_TOL);
        let active_modes = gains.iter().filter(|&&g| g > NULL_GAIN_TOL * gmax).count();
        // λ_k(v) = T + (v - T) g_k > 0 requires v > T (1 - 1/g_k) for g_k > 1.
        let support_floor = gains.iter().filter(|&&g| g > 1.0).map(|g| t * (1.0 - 1.0 / g)).fold(0.0, f64::max);
        Ok(Self { temperature: t, projector, gains, prior: prior.clone(), options, white, support_floor, active_modes })
    }

    /// Whether `AA' = I`, so the posterior is the analytic conjugate one.
    pub fn is_white(&self) -> bool {
        self.white
    }

    /// Modal energies `|U'z|²` of the kept modes.
    pub fn energies(&self, z: &[Complex64]) -> Result<Vec<f64>> {
        if z.len() != self.projector.ncols() {
            return Err(Error::DimensionMismatch { expected: self.projector.ncols(), got: z.len() });
        }
        let zv = crate::linalg::CVector::from_column_slice(z);
        Ok((&self.projector * zv).iter().map(|w| w.norm_sqr()).collect())
    }

    pub fn log_likelihood(&self, v: f64, energies: &[f64]) -> f64 {
        let w = self.options.convention.weight();
        self.gains
            .iter()
            .zip(energies)
            .map(|(&g, &e)| {
                let lambda = self.temperature + (v - self.temperature) * g;
                if lambda <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -w * (lambda.ln() + e / lambda)
                }
            })
            .sum()
    }

    /// Closed-form posterior, available for white codes.
    pub fn conjugate_posterior(&self, z: &[Complex64]) -> Result<Option<InverseWishartParams>> {
        if !self.white {
            return Ok(None);
        }
        let energy: f64 = self.energies(z)?.iter().sum();
        let (dpsi, dnu) = self.options.convention.increments(energy, self.gains.len());
        Ok(Some(InverseWishartParams::scalar(self.prior.scalar_scale()? + dpsi, self.prior.dof() + dnu)?))
    }

    /// Grid posterior of `v` given one observation vector `z`.
    pub fn posterior(&self, z: &[Complex64]) -> Result<GridPosterior> {
        let energies = self.energies(z)?;
        let psi = self.prior.scalar_scale()?;
        let total: f64 = energies.iter().sum();
        let (dpsi, dnu) = self.options.convention.increments(total, energies.len());
        // conjugate posterior when white, otherwise the white-code proxy
        let (mut shape, mut scale) = ((self.prior.dof() + dnu) / 2.0, (psi + dpsi) / 2.0);
        let prior = &self.prior;
        let log_prior = |v: f64| prior.scalar_log_density(v).unwrap_or(f64::NEG_INFINITY);
        let loglik = |v: f64| self.log_likelihood(v, &energies);

        let (mut lo, mut hi) = inverse_gamma_bounds(shape, scale)?;
        if !self.white {
            let lo_coarse = (lo / 100.0).max(self.floor_clearance(hi));
            let coarse = log_spaced(lo_coarse, hi * 100.0, 800);
            let (m, s2) = grid_posterior_unchecked(&loglik, &log_prior, &coarse)?;
            shape = m * m / s2 + 2.0;
            scale = m * (shape - 1.0);
            (lo, hi) = inverse_gamma_bounds(shape, scale)?;
            // Moment matching can understate the tail. The exact density
            // decays like v^-(α + 1) with α from the prior plus the active modes.
            let tail_shape = self.prior.dof() / 2.0 + self.options.convention.weight() * self.active_modes as f64;
            let (_, tail_hi) = inverse_gamma_bounds(tail_shape, m * (tail_shape - 1.0).max(1.0))?;
            hi = hi.max(tail_hi);
        }
        lo = lo.max(self.floor_clearance(hi));
        let grid = log_spaced(lo, hi, self.options.grid_points);
        grid_posterior_scalar(loglik, log_prior, &grid)
    }

    fn floor_clearance(&self, hi: f64) -> f64 {
        if self.support_floor > 0.0 {
            self.support_floor + 1e-9 * (hi - self.support_floor).abs().max(self.support_floor)
        } else {
            0.0
        }
    }
}

/// Mean and variance of a grid posterior without tail validation; used for
/// the coarse pass that sizes the final grid.
fn grid_posterior_unchecked(loglik: &dyn Fn(f64) -> f64, log_prior: &dyn Fn(f64) -> f64, grid: &[f64]) -> Result<(f64, f64)> {
    let lp: Vec<f64> = grid.iter().map(|&v| loglik(v) + log_prior(v)).collect();
    let peak = lp.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(Error::GridRange("coarse posterior has no finite values".into()));
    }
    let f: Vec<f64> = lp.iter().map(|l| if l.is_finite() { (l - peak).exp() } else { 0.0 }).collect();
    let z = trapezoid(grid, &f);
    let mean = trapezoid(grid, &grid.iter().zip(&f).map(|(v, p)| v * p).collect::<Vec<_>>()) / z;
    let var = trapezoid(grid, &grid.iter().zip(&f).map(|(v, p)| (v - mean).powi(2) * p).collect::<Vec<_>>()) / z;
    if !(var > 0.0 && mean > 0.0) {
        return Err(Error::GridRange("coarse posterior is degenerate".into()));
    }
    Ok((mean, var))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryMethod {
    Analytic,
    Grid,
    MonteCarlo,
}

/// Posterior summary of `v = T + |σ₀|²`.
///
/// For Monte Carlo summaries `mean` and `variance` are across-replicate
/// averages of the per-replicate posterior mean and variance, and
/// `mc_stderr` is the standard error of the averaged variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance: f64,
    pub params: Option<InverseWishartParams>,
    pub method: SummaryMethod,
    pub mc_stderr: Option<f64>,
}

impl PosteriorSummary {
    pub fn analytic(params: &InverseWishartParams) -> Result<Self> {
        let psi = params.scalar_scale()?;
        Ok(Self {
            mean: wishart::scalar_mean(psi, params.dof())?,
            variance: wishart::scalar_variance(psi, params.dof())?,
            params: Some(params.clone()),
            method: SummaryMethod::Analytic,
            mc_stderr: None,
        })
    }

    pub fn from_grid(g: &GridPosterior) -> Self {
        Self { mean: g.mean(), variance: g.variance(), params: None, method: SummaryMethod::Grid, mc_stderr: None }
    }

    /// Mean of `|σ₀|² = v - T`.
    pub fn sigma0_sq_mean(&self, temperature: Temperature) -> f64 {
        self.mean - temperature.value()
    }
}

/// Posterior of one simulated replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatePosterior {
    pub mean: f64,
    pub variance: f64,
    /// Posterior mass on `v < T`, i.e. on negative `|σ₀|²`.
    pub mass_below_temperature: f64,
    pub conjugate: Option<InverseWishartParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorVarianceRun {
    pub summary: PosteriorSummary,
    pub replicates: Vec<ReplicatePosterior>,
}

/// Simulates `replicates` observation vectors from the constant-field
/// truth and averages the grid posterior variance of `v`.
///
/// Replicate `i` draws `z = Σ^{1/2} w` from substream `stream.child(i)`, so
/// two codes with the same `Σ` see the same data. Replicates run in
/// parallel on the current rayon pool; the reduction is sequential in
/// replicate order.
pub fn posterior_variance_mc(
    code: &PulseCode,
    field_truth: &VarianceField,
    temperature: Temperature,
    prior: &InverseWishartParams,
    replicates: usize,
    stream: RngStream,
    options: PosteriorOptions,
) -> Result<PosteriorVarianceRun> {
    if replicates < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replicates, got {replicates}")));
    }
    if !matches!(field_truth, VarianceField::Constant(_)) && !is_zero_field(field_truth) {
        return Err(Error::Unsupported("posterior variance harness needs a constant truth field".into()));
    }
    let sigma = signal_covariance(code, field_truth, temperature)?;
    let sampler = ComplexGaussianLaw::centered(sigma)?.sampler()?;
    let model = ConstantVarianceModel::new(code, temperature, prior, options)?;
    let results: Vec<Result<ReplicatePosterior>> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let z = sampler.draw(&mut stream.child(i).generator());
            let post = model.posterior(z.as_slice())?;
            Ok(ReplicatePosterior {
                mean: post.mean(),
                variance: post.variance(),
                mass_below_temperature: post.mass_below(temperature.value()),
                conjugate: model.conjugate_posterior(z.as_slice())?,
            })
        })
        .collect();
    let replicates: Vec<ReplicatePosterior> = results.into_iter().collect::<Result<_>>()?;
    let variances: Vec<f64> = replicates.iter().map(|r| r.variance).collect();
    let (var_mean, var_se) = mean_and_se(&variances);
    let (mean_mean, _) = mean_and_se(&replicates.iter().map(|r| r.mean).collect::<Vec<_>>());
    Ok(PosteriorVarianceRun {
        summary: PosteriorSummary {
            mean: mean_mean,
            variance: var_mean,
            params: None,
            method: SummaryMethod::MonteCarlo,
            mc_stderr: Some(var_se),
        },
        replicates,
    })
}

fn is_zero_field(f: &VarianceField) -> bool {
    matches!(f, VarianceField::Pointwise(v) if v.iter().all(|&x| x == 0.0))
}

/// Sample mean and its standard error, summed in slice order.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Moduli gap below which two codes count as spectral twins.
pub const TWIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    /// Equal moduli but the covariances or posterior summaries disagree.
    Inconsistent,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Equivalent => "equivalent",
            Self::NotEquivalent => "not-equivalent",
            Self::Inconsistent => "inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeComparison {
    /// `max_k ||ε̂₁(k)| - |ε̂₂(k)||`
    pub moduli_gap: f64,
    /// `max |Σ₁ - Σ₂|` entrywise.
    pub covariance_gap: f64,
    /// Code 1 on the common data substream.
    pub summary_a: PosteriorSummary,
    /// Code 2 on the common data substream.
    pub summary_b: PosteriorSummary,
    /// Code 2 on an independent substream.
    pub summary_b_independent: PosteriorSummary,
    /// Largest per-replicate relative gap in posterior variance between
    /// the two codes on common data.
    pub common_stream_gap: f64,
    pub verdict: Verdict,
}

/// `|a - b|` in units of the joint standard error of two MC summaries.
pub fn joint_z(a: &PosteriorSummary, b: &PosteriorSummary) -> f64 {
    let se = (a.mc_stderr.unwrap_or(0.0).powi(2) + b.mc_stderr.unwrap_or(0.0).powi(2)).sqrt();
    let diff = (a.variance - b.variance).abs();
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / se
    }
}

/// Compares the posterior variance of a constant scattering power under two
/// codes. Codes with equal spectral moduli have equal `Σ` and therefore
/// identical posteriors.
#[allow(clippy::too_many_arguments)]
pub fn compare_codes(
    code_a: &PulseCode,
    code_b: &PulseCode,
    field_truth: &VarianceField,
    temperature: Temperature,
    prior: &InverseWishartParams,
    replicates: usize,
    stream: RngStream,
    options: PosteriorOptions,
) -> Result<CodeComparison> {
    if code_a.d() != code_b.d() {
        return Err(Error::DimensionMismatch { expected: code_a.d(), got: code_b.d() });
    }
    let moduli_gap = code_a.spectrum().max_modulus_gap(&code_b.spectrum());
    let sigma_a = signal_covariance(code_a, field_truth, temperature)?;
    let sigma_b = signal_covariance(code_b, field_truth, temperature)?;
    let covariance_gap = sigma_a.max_abs_diff(&sigma_b);

    let common = stream.child(0);
    let run_a = posterior_variance_mc(code_a, field_truth, temperature, prior, replicates, common, options)?;
    let run_b = posterior_variance_mc(code_b, field_truth, temperature, prior, replicates, common, options)?;
    let run_b_ind = posterior_variance_mc(code_b, field_truth, temperature, prior, replicates, stream.child(1), options)?;
    let common_stream_gap = run_a
        .replicates
        .iter()
        .zip(&run_b.replicates)
        .map(|(a, b)| (a.variance - b.variance).abs() / a.variance.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let verdict = if moduli_gap >= TWIN_TOL {
        Verdict::NotEquivalent
    } else if covariance_gap < TWIN_TOL
        && joint_z(&run_a.summary, &run_b.summary) <= 3.0
        && joint_z(&run_a.summary, &run_b_ind.summary) <= 3.0
    {
        Verdict::Equivalent
    } else {
        Verdict::Inconsistent
    };
    Ok(CodeComparison {
        moduli_gap,
        covariance_gap,
        summary_a: run_a.summary,
        summary_b: run_b.summary,
        summary_b_independent: run_b_ind.summary,
        common_stream_gap,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRow {
    pub d: usize,
    pub post_var_mean: f64,
    pub post_var_se: f64,
}

/// Mean posterior variance of `v` as the lattice grows. `sigma_truth` is
/// the true `|σ₀|²`; zero is allowed and gives all-zero data when `T = 0`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_curve<F>(
    code_family: F,
    temperature: Temperature,
    sigma_truth: f64,
    d_list: &[usize],
    prior: &InverseWishartParams,
    replicates: usize,
    stream: RngStream,
    options: PosteriorOptions,
) -> Result<Vec<ContractionRow>>
where
    F: Fn(usize) -> Result<PulseCode>,
{
    if d_list.is_empty() || d_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("d_list must be non-empty and strictly increasing".into()));
    }
    d_list
        .iter()
        .map(|&d| {
            let code = code_family(d)?;
            let field = if sigma_truth == 0.0 { VarianceField::pointwise(vec![0.0; d])? } else { VarianceField::constant(sigma_truth)? };
            let run = posterior_variance_mc(&code, &field, temperature, prior, replicates, stream.child(d as u64), options)?;
            Ok(ContractionRow { d, post_var_mean: run.summary.variance, post_var_se: run.summary.mc_stderr.unwrap_or(f64::NAN) })
        })
        .collect()
}

/// Posterior variance `2(ψ + e d)² / ((ν + d - 2)² (ν + d - 4))` of the
/// conjugate white-code posterior when the data energy is exactly `e` per
/// sample.
pub fn analytic_contraction_curve(prior: &InverseWishartParams, per_sample_energy: f64, d_list: &[usize]) -> Result<Vec<(usize, f64)>> {
    let psi = prior.scalar_scale()?;
    d_list.iter().map(|&d| Ok((d, wishart::scalar_variance(psi + per_sample_energy * d as f64, prior.dof() + d as f64)?))).collect()
}

/// True when the sequence decreases except for at most one increase, and
/// that increase is within `2` joint standard errors.
pub fn is_decreasing_within_jitter(rows: &[ContractionRow]) -> bool {
    let mut inversions = 0;
    for w in rows.windows(2) {
        if w[1].post_var_mean >= w[0].post_var_mean {
            inversions += 1;
            let se = (w[0].post_var_se.powi(2) + w[1].post_var_se.powi(2)).sqrt();
            if w[1].post_var_mean - w[0].post_var_mean > 2.0 * se {
                return false;
            }
        }
    }
    inversions <= 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltDiagnostic {
    pub mean: f64,
    pub variance: f64,
}

/// Moments of `Z_d = (v - (c₁ + c₃)√d) / √d` over posterior draws of `v`.
/// `constants = (c₁, c₂, c₃)`; `c₂` is carried for reporting only.
pub fn clt_rescale_diagnostic(draws: &[f64], d: usize, constants: (f64, f64, f64)) -> Result<CltDiagnostic> {
    if draws.is_empty() {
        return Err(Error::InvalidParameter("no posterior draws".into()));
    }
    if d == 0 {
        return Err(Error::InvalidDimension("d must be >= 1".into()));
    }
    let (c1, _c2, c3) = constants;
    let root = (d as f64).sqrt();
    let zs: Vec<f64> = draws.iter().map(|v| (v - (c1 + c3) * root) / root).collect();
    let n = zs.len() as f64;
    let mean = zs.iter().sum::<f64>() / n;
    let variance = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
    Ok(CltDiagnostic { mean, variance })
}

/// Unnormalized log posterior of `|σ₀|² = v` under an exponential prior
/// with rate `c/2` and one observation `z`:
/// `-½ ln(T + v) - (c/2) v - |z|² / (2(T + v))`.
/// With `|z| = 1` this is the mixed shifted-gamma / inverse-gamma form.
pub fn mixed_gamma_posterior_logdensity(v: f64, z: &ComplexVector, temperature: Temperature, c: f64) -> Result<f64> {
    if z.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: z.dim() });
    }
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("|σ₀|² must be >= 0, got {v}")));
    }
    let s = temperature.value() + v;
    if s <= 0.0 {
        return Err(Error::SingularLaw("T + |σ₀|² = 0".into()));
    }
    Ok(-0.5 * s.ln() - 0.5 * c * v - 0.5 * z.norm_sqr() / s)
}

/// The mixed-gamma posterior normalized on a uniform grid over `[0, V]`
/// with `V = 80/c`, where the density has decayed by at least `e^{-40}`.
pub fn mixed_gamma_posterior(z: &ComplexVector, temperature: Temperature, c: f64, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("prior rate c must be > 0 for a proper posterior, got {c}")));
    }
    if points < MIN_GRID_POINTS {
        return Err(Error::GridRange(format!("need at least {MIN_GRID_POINTS} points")));
    }
    let hi = 80.0 / c;
    let lo = if temperature.value() > 0.0 { 0.0 } else { hi * 1e-9 };
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let logs: Vec<f64> = grid.iter().map(|&v| mixed_gamma_posterior_logdensity(v, z, temperature, c)).collect::<Result<_>>()?;
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let norm = trapezoid(&grid, &f);
    Ok((grid, f.iter().map(|x| x / norm).collect()))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub sd: f64,
    /// `sup_x |F(x) - Φ((x - mean)/sd)|` over the grid.
    pub kolmogorov_distance: f64,
}

/// Gaussian minimizing the Kolmogorov distance to a tabulated density, by
/// nested grid search over `(mean, sd)`. The density is taken as zero below
/// the first grid point, so a Gaussian's mass there counts against it.
pub fn best_gaussian_fit(grid: &[f64], density: &[f64]) -> Result<GaussianFit> {
    if grid.len() != density.len() || grid.len() < 2 {
        return Err(Error::InvalidParameter("grid and density must match and have >= 2 points".into()));
    }
    let mut cdf = vec![0.0];
    for i in 1..grid.len() {
        let last = cdf[i - 1];
        cdf.push(last + 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]));
    }
    let total = *cdf.last().expect("non-empty");
    cdf.iter_mut().for_each(|c| *c /= total);
    let m0 = trapezoid(grid, &grid.iter().zip(density).map(|(x, f)| x * f).collect::<Vec<_>>()) / total;
    let s0 = (trapezoid(grid, &grid.iter().zip(density).map(|(x, f)| (x - m0).powi(2) * f).collect::<Vec<_>>()) / total).sqrt();

    let distance =
        |m: f64, s: f64| -> f64 { grid.iter().zip(&cdf).map(|(&x, &f)| (f - normal_cdf((x - m) / s)).abs()).fold(0.0, f64::max) };
    let (mut best_m, mut best_s) = (m0, s0);
    let mut best = distance(m0, s0);
    let (mut span_m, mut span_s) = (3.0 * s0, 0.95 * s0);
    for _ in 0..6 {
        let (cm, cs) = (best_m, best_s);
        for i in 0..=40 {
            let m = cm - span_m + 2.0 * span_m * i as f64 / 40.0;
            for j in 0..=40 {
                let s = cs - span_s + 2.0 * span_s * j as f64 / 40.0;
                if s <= 0.0 {
                    continue;
                }
                let dist = distance(m, s);
                if dist < best {
                    best = dist;
                    best_m = m;
                    best_s = s;
                }
            }
        }
        span_m /= 8.0;
        span_s = (span_s / 8.0).min(best_s * 0.9);
    }
    Ok(GaussianFit { mean: best_m, sd: best_s, kolmogorov_distance: best })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(x: f64) -> Temperature {
        Temperature::new(x).unwrap()
    }

    #[test]
    fn conjugate_example() {
        let prior = InverseWishartParams::scalar(1.0, 2.0).unwrap();
        let spec = ScalarModelSpec::new(t(0.5), 1.0, 4).unwrap();
        // |z|² = 10
        let z = [Complex64::new(1.0, 2.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)];
        let post = constant_variance_posterior(&prior, &spec, &z).unwrap();
        assert_eq!(post.scalar_scale().unwrap(), 11.0);
        assert_eq!(post.dof(), 6.0);
        assert_eq!(constant_variance_posterior(&prior, &spec, &[]).unwrap(), prior);
        let other = ScalarModelSpec::new(t(0.5), 2.0, 4).unwrap();
        assert!(matches!(constant_variance_posterior(&prior, &other, &z), Err(Error::Unsupported(_))));
        let circ = constant_variance_posterior_with(&prior, &spec, &z, LikelihoodConvention::CircularComplex).unwrap();
        assert_eq!((circ.scalar_scale().unwrap(), circ.dof()), (21.0, 10.0));
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(matches!(grid_posterior_scalar(|_| 0.0, |_| 0.0, &[1.0]), Err(Error::GridRange(_))));
        let grid = log_spaced(0.1, 10.0, 200);
        assert!(matches!(grid_posterior_scalar(|v| if v > 5.0 { f64::NAN } else { 0.0 }, |_| 0.0, &grid), Err(Error::GridRange(_))));
        // flat density on a bounded grid leaks mass at both ends
        assert!(matches!(grid_posterior_scalar(|_| 0.0, |_| 0.0, &grid), Err(Error::GridRange(_))));
    }

    #[test]
    fn grid_prior_without_data_is_prior() {
        let prior = InverseWishartParams::scalar(1.0, 3.0).unwrap();
        let grid = inverse_gamma_grid(1.5, 0.5, 2000).unwrap();
        let post = grid_posterior_scalar(|_| 0.0, |v| prior.scalar_log_density(v).unwrap(), &grid).unwrap();
        for (v, l) in post.grid().iter().zip(post.log_density()).step_by(97) {
            let exact = prior.scalar_log_density(*v).unwrap();
            assert!((l.exp() - exact.exp()).abs() <= 1e-3 * exact.exp(), "v={v}");
        }
    }

    #[test]
    fn mixed_gamma_values() {
        let one = ComplexVector::from_real(&[1.0]).unwrap();
        assert!((mixed_gamma_posterior_logdensity(0.0, &one, t(1.0), 1.0).unwrap() + 0.5).abs() < 1e-15);
        assert!(mixed_gamma_posterior_logdensity(500.0, &one, t(1.0), 1.0).unwrap() < -200.0);
        assert!(matches!(mixed_gamma_posterior_logdensity(0.0, &one, Temperature::ZERO, 1.0), Err(Error::SingularLaw(_))));
    }

    #[test]
    fn clt_diagnostic_basics() {
        let d = 16;
        let c = (0.5, 1.0, 0.25);
        let at = (c.0 + c.2) * 4.0;
        let diag = clt_rescale_diagnostic(&[at; 10], d, c).unwrap();
        assert_eq!((diag.mean, diag.variance), (0.0, 0.0));
        let draws = [1.0, 2.0, 4.5];
        let a = clt_rescale_diagnostic(&draws, d, c).unwrap();
        let b = clt_rescale_diagnostic(&draws.map(|x| x + 2.0), d, c).unwrap();
        assert!((b.mean - a.mean - 0.5).abs() < 1e-15);
        assert!(clt_rescale_diagnostic(&[], d, c).is_err());
    }

    #[test]
    fn replicate_count_validated() {
        let code = PulseCode::dirac(4).unwrap();
        let prior = InverseWishartParams::scalar(1.0, 3.0).unwrap();
        let field = VarianceField::constant(1.0).unwrap();
        let r = posterior_variance_mc(&code, &field, t(0.1), &prior, 0, RngStream::new(1, 0), PosteriorOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn decreasing_check() {
        let row = |d, m, s| ContractionRow { d, post_var_mean: m, post_var_se: s };
        assert!(is_decreasing_within_jitter(&[row(8, 1.0, 0.1), row(16, 0.5, 0.1), row(32, 0.25, 0.1)]));
        assert!(is_decreasing_within_jitter(&[row(8, 1.0, 0.1), row(16, 1.05, 0.1), row(32, 0.25, 0.1)]));
        assert!(!is_decreasing_within_jitter(&[row(8, 1.0, 0.01), row(16, 1.5, 0.01)]));
        assert!(!is_decreasing_within_jitter(&[row(8, 1.0, 0.1), row(16, 1.05, 0.1), row(32, 1.1, 0.1)]));
        assert!(is_decreasing_within_jitter(&[row(8, 1.0, 0.1)]));
    }

    #[test]
    fn contraction_d_list_validated() {
        let prior = InverseWishartParams::scalar(1.0, 3.0).unwrap();
        let r = contraction_curve(
            PulseCode::dirac,
            Temperature::ZERO,
            1.0,
            &[16, 8],
            &prior,
            10,
            RngStream::new(1, 0),
            PosteriorOptions::default(),
        );
        assert!(r.is_err());
    }
}
