//! Drives the experiment runner from code instead of the `pulsecomp`
//! binary, writing CSVs and a manifest to a temporary directory.

use pulsecomp::experiment::{read_manifest, run, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("pulsecomp-run-config-example");
    let mut config = ExperimentConfig::from_json_str(
        r#"{"experiment":"lagprofile","seed":1,"code":{"kind":"barker","n":7,"d":8},
            "temperature":0.25,"field":{"kind":"constant","sigma0_sq":2.0},"mc_draws":20000}"#,
    )?;
    config.output_dir = out.clone();
    config.workers = 4;
    let files = run(&config)?.files;
    for f in &files {
        println!("wrote {}", out.join(f).display());
    }
    let (version, echoed) = read_manifest(&out)?;
    println!("manifest version {version}, experiment {}", echoed.experiment.name());
    print!("{}", std::fs::read_to_string(out.join("lagprofile.csv"))?.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
