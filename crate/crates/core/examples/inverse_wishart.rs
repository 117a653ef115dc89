//! Scalar inverse-Wishart densities for ν = 1, 2, 3 with Ψ = 1, printed as
//! plot-ready columns, plus a Bartlett-sampler check in two dimensions.

use nalgebra::DMatrix;
use pulsecomp::experiment::default_density_grid;
use pulsecomp::rng::RngStream;
use pulsecomp::wishart::InverseWishartParams;

fn main() -> pulsecomp::error::Result<()> {
    let laws: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&nu| InverseWishartParams::scalar(1.0, nu)).collect::<Result<_, _>>()?;
    println!("x,nu1,nu2,nu3");
    for x in default_density_grid().into_iter().step_by(5) {
        let cols: Vec<String> =
            laws.iter().map(|l| l.scalar_log_density(x).map(|v| format!("{:.6}", v.exp()))).collect::<Result<_, _>>()?;
        println!("{x},{}", cols.join(","));
    }

    let psi = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let iw = InverseWishartParams::new(psi.clone(), 9.0)?;
    let stream = RngStream::new(5, 0);
    let n = 20_000;
    let mean = (0..n).map(|i| iw.sample(&mut stream.child(i).generator())).fold(DMatrix::zeros(2, 2), |acc, s| acc + s) / n as f64;
    let expected = iw.mean()?;
    for (k, name) in ["11", "21", "12", "22"].iter().enumerate() {
        println!("Σ_{name}: sample mean {:.4}, Ψ/(ν - p - 1) = {:.4}", mean[k], expected[k]);
    }
    Ok(())
}
