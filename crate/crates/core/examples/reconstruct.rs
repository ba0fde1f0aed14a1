//! Recover two point sources from a noisy final-time observation.
//!
//! ```text
//! cargo run --release --example reconstruct [config.json]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use sparse_heat::experiments::{reconstruct, ExperimentConfig};

fn main() -> sparse_heat::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_file(&PathBuf::from(path))?,
        None => ExperimentConfig::from_file(&PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_10_1.json")))?,
    };
    let start = Instant::now();
    let report = reconstruct(&config)?;
    println!(
        "mesh {}x{}, {} steps, alpha {:e}: {} after {} iterations ({:.1?})",
        config.mesh_n,
        config.mesh_n,
        config.time_steps,
        config.alpha,
        if report.converged { "converged" } else { "stopped" },
        report.log.records.len() - 1,
        start.elapsed()
    );
    println!("objective {:.6e}, gap {:.3e}, max |z| {:.6e}", report.objective, report.gap, report.adjoint_max);

    println!("raw support ({} atoms):", report.measure.len());
    for a in report.measure.atoms() {
        println!("  ({:.4}, {:.4})  {:+.4}", a.x[0], a.x[1], a.beta);
    }
    println!("lumped ({} atoms):", report.lumped.measure.len());
    for a in report.lumped.measure.atoms() {
        println!("  ({:.4}, {:.4})  {:+.4}", a.x[0], a.x[1], a.beta);
    }
    if let Some(m) = &report.matching {
        println!(
            "position error {:.4}, coefficient error {:.4}, unmatched {} / {}",
            m.position_error,
            m.coefficient_error,
            m.unmatched_reference.len(),
            m.unmatched_test.len()
        );
    }
    if let Some(dir) = &config.output_dir {
        println!("artifacts in {}", dir.display());
    }
    Ok(())
}
