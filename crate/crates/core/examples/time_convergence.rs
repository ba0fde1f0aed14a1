//! Temporal convergence of the optimal state for dG(0) and dG(1).
//!
//! ```text
//! cargo run --release --example time_convergence [config.json ...]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use sparse_heat::experiments::{study_time, ExperimentConfig, StudyReport};

fn print_table(report: &StudyReport) {
    println!("{:>12} {:>12} {:>8}", "k", "error", "eoc");
    for row in &report.table.rows {
        let eoc = row.eoc.map(|v| format!("{v:8.3}")).unwrap_or_else(|| format!("{:>8}", "-"));
        println!("{:12.4e} {:12.4e} {eoc}", row.param, row.error);
    }
    println!("fitted slope {:.3} (all rows {:.3})", report.slope, report.table.slope);
}

fn main() -> sparse_heat::Result<()> {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"));
        paths = vec![dir.join("paper_fig5_dg0.json"), dir.join("paper_fig5_dg1.json")];
    }
    for path in paths {
        let config = ExperimentConfig::from_file(&path)?;
        let start = Instant::now();
        let report = study_time(&config)?;
        println!(
            "\ndG({}) on the {n}x{n} mesh, reference M = {} ({:.1?})",
            config.dg_order,
            config.time_steps_list.last().unwrap(),
            start.elapsed(),
            n = config.mesh_n,
        );
        print_table(&report);
    }
    Ok(())
}
