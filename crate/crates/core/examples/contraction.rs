//! Posterior variance of the signal power shrinking as the lattice grows,
//! Monte Carlo against the fixed-energy closed form.

use pulsecomp::posterior::{analytic_contraction_curve, contraction_curve, is_decreasing_within_jitter, PosteriorOptions};
use pulsecomp::pulse_codes::PulseCode;
use pulsecomp::rng::RngStream;
use pulsecomp::scatter_model::Temperature;
use pulsecomp::wishart::InverseWishartParams;

fn main() -> pulsecomp::error::Result<()> {
    let d_list = [8, 16, 32, 64, 128];
    let prior = InverseWishartParams::scalar(1.0, 3.0)?;
    let rows = contraction_curve(
        PulseCode::dirac,
        Temperature::ZERO,
        1.0,
        &d_list,
        &prior,
        200,
        RngStream::new(4, 0),
        PosteriorOptions::default(),
    )?;
    let analytic = analytic_contraction_curve(&prior, 1.0, &d_list)?;
    println!("{:>5} {:>14} {:>12} {:>14}", "d", "MC post var", "SE", "fixed energy");
    for (r, (_, a)) in rows.iter().zip(&analytic) {
        println!("{:>5} {:>14.6} {:>12.6} {:>14.6}", r.d, r.post_var_mean, r.post_var_se, a);
    }
    println!("decreasing within jitter: {}", is_decreasing_within_jitter(&rows));
    Ok(())
}
