//! Experiment drivers: synthetic observations, reconstruction, and
//! convergence studies in space and time.
//!
//! Studies take the finest discretization of their hierarchy as reference.
//! Since that biases the last error entry, the reported slope is the fit
//! without the last row whenever at least two other rows remain.

mod config;
mod eoc;
pub mod noise;
pub mod selftest;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::fem::{load_from_function, FemSpace, NodalField};
use crate::measures::{lump_clusters, match_supports, Atom, DiscreteMeasure, Lumped, SupportMatch};
use crate::pdap::{self, IterationLog, PdapOutcome};
use crate::timestepping::{DgOrder, HeatModel, TimeGrid};
use crate::{Error, Point, Result};

pub use config::{default_truth, ExperimentConfig, InitialValue, SmoothingConfig, Sweep, CONFIG_KEYS};
pub use eoc::{compute_eoc, fit_slope, EocRow, EocTable};

/// Builds the fully discrete model on the uniform `n x n` mesh.
pub fn build_model(n: usize, time_steps: usize, order: DgOrder, final_time: f64) -> Result<HeatModel> {
    let space = Arc::new(FemSpace::uniform(n)?);
    HeatModel::new(space, TimeGrid::uniform(final_time, time_steps)?, order)
}

/// `S q + delta` where `delta` has independent standard normal values at the
/// interior nodes, scaled to `|delta| = noise_level |S q|` in L2. Boundary
/// values stay zero.
pub fn make_observation(model: &HeatModel, q_truth: &DiscreteMeasure, noise_level: f64, seed: u64) -> Result<NodalField> {
    if !(noise_level >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be nonnegative, got {noise_level}")));
    }
    let u = model.forward_dirac(q_truth)?;
    if noise_level == 0.0 {
        return Ok(u);
    }
    let space = model.space();
    let delta = space.scatter(&noise::standard_normals(seed, space.interior().len()));
    let size = space.l2_norm(&delta)?;
    let target = noise_level * space.l2_norm(&u)?;
    if size == 0.0 || target == 0.0 {
        return Ok(u);
    }
    Ok(u.axpy(target / size, &delta))
}

/// Moves each atom to the nearest interior node of the uniform `n x n` mesh.
pub fn snap_to_nodes(q: &DiscreteMeasure, n: usize) -> DiscreteMeasure {
    let snap = |c: f64| ((c * n as f64).round().clamp(1.0, (n - 1) as f64)) / n as f64;
    DiscreteMeasure::new(q.atoms().iter().map(|a| Atom::new([snap(a.x[0]), snap(a.x[1])], a.beta)).collect())
}

/// The true measure of a config, snapped if requested.
pub fn truth_measure(config: &ExperimentConfig) -> DiscreteMeasure {
    let q = DiscreteMeasure::new(config.truth.clone());
    if config.snap_truth {
        snap_to_nodes(&q, config.mesh_n)
    } else {
        q
    }
}

/// `S q` of a solver outcome, assembled from its stored columns.
pub fn optimal_state(model: &HeatModel, outcome: &PdapOutcome) -> NodalField {
    let mut u = NodalField::zeros(model.space().mesh());
    for (col, &b) in outcome.state.columns.iter().zip(&outcome.state.coefficients) {
        u = u.axpy(b, col);
    }
    u
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub truth: DiscreteMeasure,
    /// Solver output on mesh nodes.
    pub measure: DiscreteMeasure,
    pub lumped: Lumped,
    /// `None` when the truth atoms are too close for the matching radius.
    pub matching: Option<SupportMatch>,
    pub adjoint: NodalField,
    pub adjoint_max: f64,
    pub log: IterationLog,
    pub converged: bool,
    pub objective: f64,
    pub gap: f64,
    pub h: f64,
}

/// Recovers the true measure of `config` from its synthetic observation.
pub fn reconstruct(config: &ExperimentConfig) -> Result<ReconstructionReport> {
    config.validate()?;
    let model = build_model(
        config.mesh_n,
        config.time_steps,
        DgOrder::from_degree(config.dg_order)?,
        config.final_time,
    )?;
    let truth = truth_measure(config);
    let u_obs = make_observation(&model, &truth, config.noise_level, config.seed)?;
    let outcome = pdap::run(&model, &u_obs, &config.pdap_config(), &DiscreteMeasure::empty())?;

    let h = model.space().mesh().h();
    let lumped = lump_clusters(&outcome.measure, config.lump_radius.unwrap_or(2.0 * h));
    let matching = match match_supports(&truth, &lumped.measure, config.match_radius) {
        Ok(m) => Some(m),
        Err(Error::AmbiguousReference(..)) => None,
        Err(e) => return Err(e),
    };
    let interior = model.space().interior();
    let adjoint_max = interior.iter().fold(0.0f64, |m, &i| m.max(outcome.adjoint.values[i].abs()));
    let report = ReconstructionReport {
        truth,
        measure: outcome.measure.clone(),
        lumped,
        matching,
        adjoint_max,
        log: outcome.log.clone(),
        converged: outcome.converged,
        objective: outcome.state.objective,
        gap: outcome.state.gap,
        adjoint: outcome.adjoint,
        h,
    };
    if let Some(dir) = &config.output_dir {
        write_reconstruction(dir, &model, &report)?;
    }
    Ok(report)
}

/// Writes `measure.json`, `measure_lumped.json`, `log.csv` and `field.csv`
/// (the adjoint state) into `dir`.
pub fn write_reconstruction(dir: &Path, model: &HeatModel, report: &ReconstructionReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    report.measure.write_json(BufWriter::new(File::create(dir.join("measure.json"))?))?;
    report
        .lumped
        .measure
        .write_json(BufWriter::new(File::create(dir.join("measure_lumped.json"))?))?;
    report.log.write_csv(BufWriter::new(File::create(dir.join("log.csv"))?))?;
    report
        .adjoint
        .write_csv(model.space().mesh(), BufWriter::new(File::create(dir.join("field.csv"))?))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub table: EocTable,
    /// Fitted slope without the reference-biased last row.
    pub slope: f64,
    /// Whether every solver run met its tolerance.
    pub converged: bool,
    /// Number of consecutive pairs where the error grew.
    pub inversions: usize,
}

impl StudyReport {
    fn new(table: EocTable, converged: bool) -> Self {
        let slope = table.slope_without_last.unwrap_or(table.slope);
        let inversions = table.rows.windows(2).filter(|w| w[1].error > w[0].error).count();
        Self {
            table,
            slope,
            converged,
            inversions,
        }
    }

    /// Errors decay up to at most one inversion, and the coarsest error
    /// exceeds the finest.
    pub fn is_healthy(&self) -> bool {
        let rows = &self.table.rows;
        self.inversions <= 1 && rows.first().map(|r| r.error) > rows.last().map(|r| r.error)
    }

    fn write(&self, dir: Option<&Path>) -> Result<()> {
        if let Some(dir) = dir {
            fs::create_dir_all(dir)?;
            self.table.write_csv(BufWriter::new(File::create(dir.join("errors.csv"))?))?;
        }
        Ok(())
    }
}

fn require_levels(count: usize, what: &str) -> Result<()> {
    if count < 3 {
        return Err(Error::InvalidArgument(format!(
            "a study needs at least 3 {what}, got {count}"
        )));
    }
    Ok(())
}

/// Spatial refinement study over `config.levels` with `config.time_steps`
/// steps. The observation is built on the finest mesh as in
/// [`reconstruct`] and L2-projected to coarser meshes. Each coarse optimal state is
/// interpolated to the finest mesh and compared with the finest one there.
pub fn study_space(config: &ExperimentConfig) -> Result<StudyReport> {
    config.validate()?;
    let levels = &config.levels;
    require_levels(levels.len(), "levels")?;
    let finest = *levels.last().unwrap();
    if let Some(n) = levels.iter().find(|&&n| !finest.is_multiple_of(n)) {
        return Err(Error::Config(format!("level {n} is not nested in {finest}")));
    }
    let order = DgOrder::from_degree(config.dg_order)?;
    let pdap_config = config.pdap_config();
    let truth = DiscreteMeasure::new(config.truth.clone());

    let fine_model = build_model(finest, config.time_steps, order, config.final_time)?;
    let u_fine = make_observation(&fine_model, &truth, config.noise_level, config.seed)?;

    let runs: Vec<(HeatModel, PdapOutcome)> = levels
        .par_iter()
        .map(|&n| {
            let model = if n == finest {
                fine_model.clone()
            } else {
                build_model(n, config.time_steps, order, config.final_time)?
            };
            let u_d = if n == finest {
                u_fine.clone()
            } else {
                model.space().project_from_fine(fine_model.space(), &u_fine)?
            };
            let outcome = pdap::run(&model, &u_d, &pdap_config, &DiscreteMeasure::empty())?;
            Ok((model, outcome))
        })
        .collect::<Result<_>>()?;

    let (ref_model, ref_outcome) = runs.last().unwrap();
    let reference = optimal_state(ref_model, ref_outcome);
    let fine_space = ref_model.space();
    let mut params = Vec::new();
    let mut errors = Vec::new();
    for (model, outcome) in &runs[..runs.len() - 1] {
        let u = fine_space.interpolate_from(model.space(), &optimal_state(model, outcome))?;
        params.push(model.space().mesh().h());
        errors.push(fine_space.l2_norm(&u.axpy(-1.0, &reference))?);
    }
    let converged = runs.iter().all(|(_, o)| o.converged);
    let report = StudyReport::new(compute_eoc(&params, &errors)?, converged);
    report.write(config.output_dir.as_deref())?;
    Ok(report)
}

/// Temporal refinement study over `config.time_steps_list` on the
/// `config.mesh_n` mesh. The observation is the final state of the truth
/// with the finest step count.
pub fn study_time(config: &ExperimentConfig) -> Result<StudyReport> {
    config.validate()?;
    let steps = &config.time_steps_list;
    require_levels(steps.len(), "step counts")?;
    let order = DgOrder::from_degree(config.dg_order)?;
    let pdap_config = config.pdap_config();
    let truth = DiscreteMeasure::new(config.truth.clone());
    let space = Arc::new(FemSpace::uniform(config.mesh_n)?);
    let model_for = |m: usize| HeatModel::new(space.clone(), TimeGrid::uniform(config.final_time, m)?, order);

    let u_d = model_for(*steps.last().unwrap())?.forward_dirac(&truth)?;
    let runs: Vec<(HeatModel, PdapOutcome)> = steps
        .par_iter()
        .map(|&m| {
            let model = model_for(m)?;
            let outcome = pdap::run(&model, &u_d, &pdap_config, &DiscreteMeasure::empty())?;
            Ok((model, outcome))
        })
        .collect::<Result<_>>()?;

    let (ref_model, ref_outcome) = runs.last().unwrap();
    let reference = optimal_state(ref_model, ref_outcome);
    let mut params = Vec::new();
    let mut errors = Vec::new();
    for (model, outcome) in &runs[..runs.len() - 1] {
        let u = optimal_state(model, outcome);
        params.push(model.grid().step());
        errors.push(space.l2_norm(&u.axpy(-1.0, &reference))?);
    }
    let converged = runs.iter().all(|(_, o)| o.converged);
    let report = StudyReport::new(compute_eoc(&params, &errors)?, converged);
    report.write(config.output_dir.as_deref())?;
    Ok(report)
}

/// `v_kh(T, x0)` for the initial value `v0`, entering through its L2
/// projection onto the mesh.
pub fn pointwise_final_value(model: &HeatModel, v0: InitialValue, x0: Point) -> Result<f64> {
    let load = load_from_function(model.space().mesh(), |p| v0.eval(p));
    let v = model.forward_load(&load);
    model.space().eval(&v, x0)
}

/// Pointwise error study of the homogeneous heat equation at `x0`.
///
/// A time sweep runs `config.time_steps_list` on the `config.mesh_n` mesh; a
/// space sweep runs `config.smoothing.levels` with `config.time_steps`
/// steps. The finest member of the sweep is the reference.
pub fn study_smoothing(config: &ExperimentConfig) -> Result<StudyReport> {
    config.validate()?;
    let s = &config.smoothing;
    let order = DgOrder::from_degree(config.dg_order)?;
    let x0 = s.x0;
    let boundary_distance = x0[0].min(x0[1]).min(1.0 - x0[0]).min(1.0 - x0[1]);
    let check_distance = |n: usize| {
        let h = std::f64::consts::SQRT_2 / n as f64;
        if boundary_distance > 4.0 * h {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "x0 is within 4h = {} of the boundary on the {n}x{n} mesh",
                4.0 * h
            )))
        }
    };

    let (params, values) = match s.sweep {
        Sweep::Time => {
            let steps = &config.time_steps_list;
            require_levels(steps.len(), "step counts")?;
            check_distance(config.mesh_n)?;
            let space = Arc::new(FemSpace::uniform(config.mesh_n)?);
            let values = steps
                .par_iter()
                .map(|&m| {
                    let model = HeatModel::new(space.clone(), TimeGrid::uniform(config.final_time, m)?, order)?;
                    pointwise_final_value(&model, s.initial, x0)
                })
                .collect::<Result<Vec<_>>>()?;
            let params: Vec<f64> = steps.iter().map(|&m| config.final_time / m as f64).collect();
            (params, values)
        }
        Sweep::Space => {
            require_levels(s.levels.len(), "levels")?;
            for &n in &s.levels {
                check_distance(n)?;
            }
            let values = s
                .levels
                .par_iter()
                .map(|&n| {
                    let model = build_model(n, config.time_steps, order, config.final_time)?;
                    pointwise_final_value(&model, s.initial, x0)
                })
                .collect::<Result<Vec<_>>>()?;
            let params = s.levels.iter().map(|&n| std::f64::consts::SQRT_2 / n as f64).collect();
            (params, values)
        }
    };
    let reference = *values.last().unwrap();
    let errors: Vec<f64> = values[..values.len() - 1].iter().map(|v| (v - reference).abs()).collect();
    let report = StudyReport::new(compute_eoc(&params[..errors.len()], &errors)?, true);
    report.write(config.output_dir.as_deref())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_noise_scaling() {
        let model = build_model(8, 4, DgOrder::Dg0, 0.1).unwrap();
        let q = DiscreteMeasure::new(default_truth());
        let u = model.forward_dirac(&q).unwrap();
        assert_eq!(make_observation(&model, &q, 0.0, 3).unwrap(), u);
        let noisy = make_observation(&model, &q, 0.05, 3).unwrap();
        let space = model.space();
        let rel = space.l2_norm(&noisy.axpy(-1.0, &u)).unwrap() / space.l2_norm(&u).unwrap();
        assert!((rel - 0.05).abs() < 1e-12);
        assert_eq!(noisy, make_observation(&model, &q, 0.05, 3).unwrap());
        assert_ne!(noisy, make_observation(&model, &q, 0.05, 4).unwrap());
        for &b in space.mesh().boundary_mask().iter().zip(&noisy.values).filter(|(b, _)| **b).map(|(_, v)| v) {
            assert_eq!(b, 0.0);
        }
        assert!(make_observation(&model, &q, -1.0, 3).is_err());
    }

    #[test]
    fn snapping() {
        let q = DiscreteMeasure::new(vec![Atom::new([0.26, 0.99], 1.0), Atom::new([0.0, 0.5], 2.0)]);
        let s = snap_to_nodes(&q, 4);
        assert_eq!(s.atoms()[0].x, [0.25, 0.75]);
        assert_eq!(s.atoms()[1].x, [0.25, 0.5]);
    }

    #[test]
    fn zero_truth_gives_empty_reconstruction() {
        let config = ExperimentConfig {
            truth: vec![],
            mesh_n: 8,
            time_steps: 4,
            ..ExperimentConfig::default()
        };
        let report = reconstruct(&config).unwrap();
        assert!(report.measure.is_empty());
        assert!(report.lumped.measure.is_empty());
        assert!(report.converged);
    }

    #[test]
    fn zero_initial_value_gives_zero_errors() {
        let mut config = ExperimentConfig {
            mesh_n: 16,
            time_steps_list: vec![2, 4, 8],
            ..ExperimentConfig::default()
        };
        config.smoothing.initial = InitialValue::Zero;
        let report = study_smoothing(&config).unwrap();
        assert!(report.table.rows.iter().all(|r| r.error == 0.0));
    }

    #[test]
    fn smoothing_rejects_points_near_boundary() {
        let mut config = ExperimentConfig {
            mesh_n: 16,
            time_steps_list: vec![2, 4, 8],
            ..ExperimentConfig::default()
        };
        config.smoothing.x0 = [0.1, 0.5];
        assert!(study_smoothing(&config).is_err());
    }

    #[test]
    fn studies_need_three_levels() {
        let config = ExperimentConfig {
            levels: vec![4, 8],
            time_steps: 2,
            ..ExperimentConfig::default()
        };
        assert!(study_space(&config).is_err());
        let config = ExperimentConfig {
            levels: vec![4, 6, 8],
            time_steps: 2,
            ..ExperimentConfig::default()
        };
        assert!(matches!(study_space(&config), Err(Error::Config(_))));
    }

    #[test]
    fn small_time_study_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            mesh_n: 8,
            time_steps_list: vec![2, 4, 8],
            output_dir: Some(dir.path().to_path_buf()),
            ..ExperimentConfig::default()
        };
        let report = study_time(&config).unwrap();
        assert_eq!(report.table.rows.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
