//! Drives an experiment from a TOML configuration, as `sctool` does.

use selfconsistent::experiments::{cmd_fixed_point, ExperimentConfig};

fn main() -> selfconsistent::Result<()> {
    let cfg = ExperimentConfig::from_toml(
        r#"
        seed = 1
        [map]
        a = 0.8
        [solver]
        order = 64
        "#,
    )?;
    let out = std::env::temp_dir().join("sctool_example");
    let run = cmd_fixed_point(&cfg, &out)?;
    println!("{}", cfg.to_toml());
    println!("peak shift {:+.4}, outputs in {}", run.report.peak_shift, out.display());
    Ok(())
}
