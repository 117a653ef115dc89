//! Analytic lag profile `E[z_t conj(z_t')]` for a boxcar code, checked
//! against simulated signals, first for a constant field and then for a
//! field that varies smoothly along the lattice.

use pulsecomp::complex_gaussian::sample_second_moments;
use pulsecomp::pulse_codes::PulseCode;
use pulsecomp::rng::RngStream;
use pulsecomp::scatter_model::{lag_profile, PartitionOfUnity, SignalSimulator, Temperature, VarianceField};

fn report(label: &str, code: &PulseCode, field: &VarianceField, t: Temperature) -> pulsecomp::error::Result<()> {
    let analytic = lag_profile(code, field, t)?;
    let sim = SignalSimulator::new(code, field, t)?;
    let stream = RngStream::new(11, 0);
    let draws: Vec<_> = (0..40_000u64).map(|i| sim.draw(&mut stream.child(i).generator()).0).collect();
    let (mc, se) = sample_second_moments(&draws);
    let d = code.d();
    println!("{label}");
    for lag in 0..3 {
        let (i, j) = (lag, 0);
        println!("  lag {lag}: analytic {:+.4}  simulated {:+.4} ± {:.4}", analytic[(i, j)].re, mc[(i, j)].re, se[i * d + j]);
    }
    Ok(())
}

fn main() -> pulsecomp::error::Result<()> {
    let code = PulseCode::boxcar(8, 2)?;
    let t = Temperature::new(0.5)?;
    report("constant field, σ₀² = 1", &code, &VarianceField::constant(1.0)?, t)?;

    let partition = PartitionOfUnity::smooth(8, 2)?;
    report("two-window field, σ² = (0.5, 2)", &code, &VarianceField::partitioned(vec![0.5, 2.0], partition)?, t)?;
    Ok(())
}
