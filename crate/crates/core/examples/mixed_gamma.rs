//! The single-observation posterior under an exponential prior is a mix of
//! shifted gamma and inverse gamma shapes; no Gaussian fits it well. The
//! rescaled conjugate posterior, by contrast, settles as `d` grows.

use pulsecomp::complex_gaussian::standard_complex;
use pulsecomp::linalg::ComplexVector;
use pulsecomp::posterior::{best_gaussian_fit, clt_rescale_diagnostic, mixed_gamma_posterior};
use pulsecomp::rng::RngStream;
use pulsecomp::scatter_model::Temperature;
use pulsecomp::wishart::InverseWishartParams;

fn main() -> pulsecomp::error::Result<()> {
    let z = ComplexVector::from_real(&[1.0])?;
    let (grid, density) = mixed_gamma_posterior(&z, Temperature::new(1.0)?, 1.0, 4001)?;
    let fit = best_gaussian_fit(&grid, &density)?;
    println!("best Gaussian N({:.4}, {:.4}²), Kolmogorov distance {:.4}", fit.mean, fit.sd, fit.kolmogorov_distance);

    let kappa = 0.5;
    for d in [64usize, 128, 256, 512] {
        let mut rng = RngStream::new(8, d as u64).generator();
        let energy: f64 = (0..d).map(|_| kappa * d as f64 * standard_complex(&mut rng).norm_sqr()).sum();
        let post = InverseWishartParams::scalar(1.0 + energy, 3.0 + d as f64)?;
        let draws: Vec<f64> = (0..10_000).map(|_| post.sample(&mut rng)[(0, 0)]).collect();
        let diag = clt_rescale_diagnostic(&draws, d, (kappa, 1.0, 0.0))?;
        println!("d = {d:>3}: Z_d mean {:+.4}, variance {:.4}", diag.mean, diag.variance);
    }
    Ok(())
}
