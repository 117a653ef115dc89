//! Smooth raised-cosine windows with `Σ_j χ_j² = 1`, the alternative
//! unit-norm windows, and the structure operator they induce.

use pulsecomp::scatter_model::{PartitionOfUnity, VarianceField, WindowNormalization};

fn main() -> pulsecomp::error::Result<()> {
    let p = PartitionOfUnity::smooth(16, 4)?;
    println!("{:>3} {}", "t", (0..p.count()).map(|j| format!("{:>8}", format!("χ_{j}"))).collect::<String>());
    for t in 0..p.d() {
        let row: String = p.windows().iter().map(|w| format!("{:>8.4}", w[t])).collect();
        println!("{t:>3} {row}   Σχ² = {:.12}", p.sum_of_squares()[t]);
    }

    let u = PartitionOfUnity::smooth_with(16, 4, WindowNormalization::UnitNorm)?;
    let norms: Vec<String> = u.windows().iter().map(|w| format!("{:.6}", w.iter().map(|x| x * x).sum::<f64>())).collect();
    println!("unit-norm windows, ‖χ_j‖²: {}", norms.join(", "));

    let x = VarianceField::partitioned(vec![1.0, 3.0, 1.0, 0.5], p)?.structure_operator(16)?;
    let diag: Vec<String> = (0..16).map(|t| format!("{:.2}", x[(t, t)].re)).collect();
    println!("diag X: {}", diag.join(" "));
    Ok(())
}
