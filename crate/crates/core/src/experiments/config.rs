use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::measures::Atom;
use crate::pdap::PdapConfig;
use crate::{Error, Point, Result};

/// Which discretization parameter a smoothing study refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Time,
    Space,
}

/// Initial value of a smoothing study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialValue {
    /// `sin(pi x) sin(pi y)`
    Sine,
    Zero,
}

impl InitialValue {
    pub fn eval(self, p: Point) -> f64 {
        match self {
            Self::Sine => (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin(),
            Self::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingConfig {
    /// Evaluation point.
    pub x0: Point,
    pub sweep: Sweep,
    pub initial: InitialValue,
    /// Mesh sizes `n` of a space sweep, ascending; the last one is the
    /// reference.
    pub levels: Vec<usize>,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            x0: [0.5, 0.5],
            sweep: Sweep::Time,
            initial: InitialValue::Sine,
            levels: vec![16, 32, 64, 128, 256],
        }
    }
}

/// Settings shared by all experiment drivers. Field names are the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub final_time: f64,
    /// Atoms of the true initial measure.
    pub truth: Vec<Atom>,
    /// Move each true atom to the nearest interior node of the `mesh_n` mesh.
    pub snap_truth: bool,
    /// Mesh size `n` (an `n x n` lattice) for reconstruction and time studies.
    pub mesh_n: usize,
    /// Mesh sizes of a space study, ascending; the last one is the reference.
    pub levels: Vec<usize>,
    /// Time steps for reconstruction, space studies and space sweeps.
    pub time_steps: usize,
    /// Time steps of a time study or sweep, ascending; the last one is the
    /// reference.
    pub time_steps_list: Vec<usize>,
    /// Polynomial degree in time, 0 or 1.
    pub dg_order: u32,
    pub alpha: f64,
    /// Relative L2 size of the additive noise.
    pub noise_level: f64,
    pub seed: u64,
    pub pdap: PdapConfig,
    /// Clustering radius for lumping; defaults to twice the mesh width.
    pub lump_radius: Option<f64>,
    pub match_radius: f64,
    pub smoothing: SmoothingConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            final_time: 0.1,
            truth: default_truth(),
            snap_truth: false,
            mesh_n: 64,
            levels: vec![8, 16, 32, 64, 128],
            time_steps: 256,
            time_steps_list: vec![16, 32, 64, 128, 256],
            dg_order: 0,
            alpha: 1e-3,
            noise_level: 0.0,
            seed: 1,
            pdap: PdapConfig::default(),
            lump_radius: None,
            match_radius: 0.15,
            smoothing: SmoothingConfig::default(),
            output_dir: None,
        }
    }
}

/// Two sources of opposite sign.
pub fn default_truth() -> Vec<Atom> {
    vec![
        Atom::new([0.263091083266217, 0.258378565204941], -10.0),
        Atom::new([0.76061544960808, 0.734190309666141], 25.0),
    ]
}

/// Every key accepted in a config file, with a one-line description.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("final_time", "final time T (default 0.1)"),
    ("truth", "true measure, list of {\"x\": [x, y], \"beta\": b}"),
    ("snap_truth", "move true atoms to the nearest interior node (default false)"),
    ("mesh_n", "lattice size n of the reconstruction/time-study mesh (default 64)"),
    ("levels", "lattice sizes of a space study, ascending (default [8,16,32,64,128])"),
    ("time_steps", "number of time steps M (default 256)"),
    ("time_steps_list", "step counts of a time study, ascending (default [16,...,256])"),
    ("dg_order", "time degree r, 0 or 1 (default 0)"),
    ("alpha", "regularization weight (default 0.001)"),
    ("noise_level", "relative L2 noise level (default 0)"),
    ("seed", "noise seed (default 1)"),
    ("pdap", "solver block: tol, max_outer_iterations, subproblem_tol, subproblem_max_iterations, prune_threshold"),
    ("lump_radius", "lumping radius (default 2h)"),
    ("match_radius", "support matching radius (default 0.15)"),
    ("smoothing", "smoothing study block: x0, sweep (time|space), initial (sine|zero), levels"),
    ("output_dir", "artifact directory (default: none, --out overrides)"),
];

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
        let config: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Solver settings with `alpha` filled in.
    pub fn pdap_config(&self) -> PdapConfig {
        PdapConfig {
            alpha: self.alpha,
            ..self.pdap.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return bad(format!("final_time must be positive, got {}", self.final_time));
        }
        if self.mesh_n < 2 {
            return bad(format!("mesh_n must be at least 2, got {}", self.mesh_n));
        }
        if self.levels.iter().any(|&n| n < 2) || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return bad("levels must be strictly ascending and at least 2".into());
        }
        if self.smoothing.levels.iter().any(|&n| n < 2)
            || self.smoothing.levels.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("smoothing.levels must be strictly ascending and at least 2".into());
        }
        if self.time_steps == 0 {
            return bad("time_steps must be positive".into());
        }
        if self.time_steps_list.contains(&0)
            || self.time_steps_list.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("time_steps_list must be strictly ascending and positive".into());
        }
        if self.dg_order > 1 {
            return bad(format!("dg_order must be 0 or 1, got {}", self.dg_order));
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return bad(format!("noise_level must be nonnegative, got {}", self.noise_level));
        }
        if let Some(r) = self.lump_radius {
            if !(r >= 0.0) {
                return bad(format!("lump_radius must be nonnegative, got {r}"));
            }
        }
        if !(self.match_radius > 0.0) {
            return bad(format!("match_radius must be positive, got {}", self.match_radius));
        }
        let inside = |p: Point| p.iter().all(|c| (0.0..=1.0).contains(c));
        if !self.truth.iter().all(|a| inside(a.x) && a.beta.is_finite()) {
            return bad("truth atoms must lie in the closed unit square".into());
        }
        if !inside(self.smoothing.x0) {
            return bad("smoothing.x0 must lie in the unit square".into());
        }
        self.pdap_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}
