//! Runs one experiment from the library and writes its report.
//!
//! Usage: `cargo run --release --example run_experiment -- [name] [out_dir]`

use sphere_cover::experiments::{emit_report, run, ExperimentConfig, ExperimentId};

fn main() -> sphere_cover::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("plane", String::as_str);
    let id = ExperimentId::ALL
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| sphere_cover::Error::Config(format!("unknown experiment {name}")))?;
    let config = ExperimentConfig { seed: 1, fast_mode: true, ..ExperimentConfig::default() };
    let report = run(id, &config)?;
    for row in &report.rows {
        println!("{:<5} {:<50} {:.6e}", if row.pass { "ok" } else { "FAIL" }, row.id, row.estimate);
    }
    let dir = args.get(1).map_or_else(|| std::env::temp_dir().join("scl_example"), Into::into);
    for p in emit_report(&report, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
