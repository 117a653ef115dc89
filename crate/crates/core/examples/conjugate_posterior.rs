//! Posterior of `v = T + |σ₀|²` for a white code: the closed-form
//! inverse-Wishart update against brute-force grid quadrature, then the
//! grid posterior for a non-white code where no closed form exists.

use pulsecomp::complex_gaussian::ComplexGaussianLaw;
use pulsecomp::posterior::{constant_variance_posterior, ConstantVarianceModel, PosteriorOptions, PosteriorSummary, ScalarModelSpec};
use pulsecomp::pulse_codes::PulseCode;
use pulsecomp::rng::RngStream;
use pulsecomp::scatter_model::{signal_covariance, Temperature, VarianceField};
use pulsecomp::wishart::InverseWishartParams;

fn main() -> pulsecomp::error::Result<()> {
    let d = 16;
    let t = Temperature::new(0.5)?;
    let prior = InverseWishartParams::scalar(1.0, 3.0)?;
    let truth = VarianceField::constant(1.5)?;

    let code = PulseCode::dirac(d)?;
    let z = ComplexGaussianLaw::centered(signal_covariance(&code, &truth, t)?)?.sampler()?.draw(&mut RngStream::new(3, 0).generator());
    let post = constant_variance_posterior(&prior, &ScalarModelSpec::new(t, 1.0, d)?, z.as_slice())?;
    let exact = PosteriorSummary::analytic(&post)?;
    let grid = ConstantVarianceModel::new(&code, t, &prior, PosteriorOptions::default())?.posterior(z.as_slice())?;
    println!("white code: W⁻¹({:.4}, {})", post.scalar_scale()?, post.dof());
    println!("  mean     analytic {:.8}  grid {:.8}", exact.mean, grid.mean());
    println!("  variance analytic {:.8}  grid {:.8}", exact.variance, grid.variance());
    println!("  |σ₀|² posterior mean {:.4} (truth 1.5)", exact.sigma0_sq_mean(t));

    let boxcar = PulseCode::boxcar(d, 4)?;
    let z = ComplexGaussianLaw::centered(signal_covariance(&boxcar, &truth, t)?)?.sampler()?.draw(&mut RngStream::new(3, 1).generator());
    let g = ConstantVarianceModel::new(&boxcar, t, &prior, PosteriorOptions::default())?.posterior(z.as_slice())?;
    println!("boxcar(16, 4): grid mean {:.4}, variance {:.4}, P(v < T) = {:.2e}", g.mean(), g.variance(), g.mass_below(t.value()));
    Ok(())
}
