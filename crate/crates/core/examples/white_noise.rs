//! Circular complex white noise: sample moments and the characteristic
//! function `E exp(i Re(Y'φ)) = exp(-|φ|²/4)`.

use num_complex::Complex64;
use pulsecomp::complex_gaussian::{sample_second_moments, sample_white_noise, ComplexGaussianLaw};
use pulsecomp::linalg::{max_abs_diff, CMatrix, ComplexVector};
use pulsecomp::rng::RngStream;

fn main() -> pulsecomp::error::Result<()> {
    let n = 4;
    let stream = RngStream::new(2024, 0);
    let draws = (0..50_000u64)
        .map(|i| sample_white_noise(n, &mut stream.child(i).generator()).map(ComplexVector::into_dvector))
        .collect::<pulsecomp::error::Result<Vec<_>>>()?;
    let (cov, _) = sample_second_moments(&draws);
    println!("max |sample covariance - I| = {:.4}", max_abs_diff(&cov, &CMatrix::identity(n, n)));

    let phi =
        ComplexVector::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])?;
    let cf = ComplexGaussianLaw::white_noise(n)?.characteristic_function(&phi)?;
    let mc: f64 = draws.iter().map(|y| y.iter().zip(phi.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>().re.cos()).sum::<f64>()
        / draws.len() as f64;
    println!("characteristic function at |φ| = 1: analytic {:.5}, Monte Carlo {mc:.5}", cf.re);
    Ok(())
}
