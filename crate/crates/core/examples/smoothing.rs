//! Pointwise error of the homogeneous heat equation at an interior point,
//! under time step refinement (dG(0) and dG(1)) and under mesh refinement.
//!
//! ```text
//! cargo run --release --example smoothing
//! ```

use std::time::Instant;

use sparse_heat::experiments::{study_smoothing, ExperimentConfig, StudyReport, Sweep};

fn show(title: &str, report: &StudyReport) {
    println!("\n{title}");
    println!("{:>12} {:>12} {:>8}", "param", "error", "eoc");
    for row in &report.table.rows {
        let eoc = row.eoc.map(|v| format!("{v:8.3}")).unwrap_or_else(|| format!("{:>8}", "-"));
        println!("{:12.4e} {:12.4e} {eoc}", row.param, row.error);
    }
    println!("fitted slope {:.3} (all rows {:.3})", report.slope, report.table.slope);
}

fn main() -> sparse_heat::Result<()> {
    let mut config = ExperimentConfig {
        mesh_n: 64,
        time_steps_list: vec![16, 32, 64, 128, 256],
        time_steps: 256,
        ..ExperimentConfig::default()
    };
    config.smoothing.x0 = [0.5, 0.5];

    for r in [0, 1] {
        config.dg_order = r;
        config.smoothing.sweep = Sweep::Time;
        let start = Instant::now();
        let report = study_smoothing(&config)?;
        show(&format!("time sweep, dG({r}), {:.1?}", start.elapsed()), &report);
    }

    config.dg_order = 0;
    config.smoothing.sweep = Sweep::Space;
    let start = Instant::now();
    let report = study_smoothing(&config)?;
    show(&format!("space sweep, levels {:?}, {:.1?}", config.smoothing.levels, start.elapsed()), &report);
    Ok(())
}
