//! Spatial convergence of the optimal state under uniform refinement.
//!
//! ```text
//! cargo run --release --example space_convergence [config.json]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use sparse_heat::experiments::{study_space, ExperimentConfig};

fn main() -> sparse_heat::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/paper_fig4.json")));
    let config = ExperimentConfig::from_file(&path)?;
    let start = Instant::now();
    let report = study_space(&config)?;
    println!("levels {:?}, M = {} ({:.1?})", config.levels, config.time_steps, start.elapsed());
    println!("{:>12} {:>12} {:>8}", "h", "error", "eoc");
    for row in &report.table.rows {
        let eoc = row.eoc.map(|v| format!("{v:8.3}")).unwrap_or_else(|| format!("{:>8}", "-"));
        println!("{:12.4e} {:12.4e} {eoc}", row.param, row.error);
    }
    println!("fitted slope {:.3} (all rows {:.3})", report.slope, report.table.slope);
    if !report.is_healthy() {
        println!("errors are not monotone");
    }
    Ok(())
}
