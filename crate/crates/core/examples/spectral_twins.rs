//! A Barker code and a random-phase twin share `|ε̂|`, hence `AA'`, hence
//! the covariance of the received signal.

use pulsecomp::pulse_codes::PulseCode;
use pulsecomp::rng::RngStream;
use pulsecomp::scatter_model::{signal_covariance, Temperature, VarianceField};

fn main() -> pulsecomp::error::Result<()> {
    let barker = PulseCode::barker(13)?.zero_padded(16)?;
    let twin = barker.random_phase_twin(&mut RngStream::new(7, 0).generator());

    println!("{:>3} {:>10} {:>10} {:>10}", "k", "|ε̂|", "phase", "twin phase");
    let (a, b) = (barker.spectrum(), twin.spectrum());
    for k in 0..barker.d() {
        println!("{k:>3} {:>10.5} {:>10.5} {:>10.5}", a.moduli[k], a.phases[k], b.phases[k]);
    }
    println!("max moduli gap: {:e}", a.max_modulus_gap(&b));

    let field = VarianceField::constant(1.0)?;
    let t = Temperature::new(0.5)?;
    let gap = signal_covariance(&barker, &field, t)?.max_abs_diff(&signal_covariance(&twin, &field, t)?);
    println!("max |Σ_barker - Σ_twin|: {gap:e}");
    println!(
        "twin samples differ by up to {:.3}",
        barker.samples().iter().zip(twin.samples().iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    );
    Ok(())
}
