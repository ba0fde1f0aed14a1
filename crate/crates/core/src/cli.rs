//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 solver did not reach its
//! tolerance, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::experiments::{self, selftest, ExperimentConfig, StudyReport, CONFIG_KEYS};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sparse-heat", version, about = "Sparse initial-data recovery for the heat equation")]
pub struct Cli {
    /// More output on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// No summary line.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover the true measure from its synthetic observation.
    Reconstruct(RunArgs),
    /// Convergence study under mesh refinement.
    StudySpace(RunArgs),
    /// Convergence study under time step refinement.
    StudyTime(RunArgs),
    /// Pointwise error study of the homogeneous heat equation.
    StudySmoothing(RunArgs),
    /// Adjoint identity and eigenmode amplification checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Noise seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Outer solver tolerance (overrides `pdap.tol`).
    #[arg(long)]
    pub tol: Option<f64>,
}

impl RunArgs {
    fn load(&self) -> crate::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::from_file(&self.config)?;
        if let Some(out) = &self.out {
            config.output_dir = Some(out.clone());
        }
        if config.output_dir.is_none() {
            config.output_dir = Some(PathBuf::from("output"));
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(tol) = self.tol {
            config.pdap.tol = tol;
        }
        config.validate()?;
        Ok(config)
    }
}

fn config_keys_help() -> String {
    let mut s = String::from("Config keys (JSON object, unknown keys are rejected):\n");
    for (key, doc) in CONFIG_KEYS {
        s.push_str(&format!("  {key:<16} {doc}\n"));
    }
    s
}

pub fn command() -> clap::Command {
    Cli::command().after_help(config_keys_help())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match command()
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().ansi().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute<W: Write, E: Write>(cli: &Cli, out: &mut W, err: &mut E) -> crate::Result<i32> {
    let args = match &cli.command {
        Command::Selftest { seed } => {
            let mut ok = true;
            for r in selftest::run_all(*seed)? {
                ok &= r.passed();
                if !cli.quiet {
                    let status = if r.passed() { "ok" } else { "FAILED" };
                    writeln!(out, "{}: {status} (max error {:.3e}, tolerance {:.0e})", r.name, r.max_error, r.tolerance)?;
                }
            }
            return Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL });
        }
        Command::Reconstruct(a) | Command::StudySpace(a) | Command::StudyTime(a) | Command::StudySmoothing(a) => a,
    };
    let config = args.load()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Numerical(e.to_string()))?;

    let outcome = pool.install(|| -> crate::Result<Outcome> {
        Ok(match &cli.command {
            Command::Reconstruct(_) => Outcome::Reconstruction(experiments::reconstruct(&config)?),
            Command::StudySpace(_) => Outcome::Study(experiments::study_space(&config)?),
            Command::StudyTime(_) => Outcome::Study(experiments::study_time(&config)?),
            Command::StudySmoothing(_) => Outcome::Study(experiments::study_smoothing(&config)?),
            Command::Selftest { .. } => unreachable!(),
        })
    })?;
    match outcome {
        Outcome::Reconstruction(report) => {
            if cli.verbose > 0 {
                for a in report.lumped.measure.atoms() {
                    writeln!(err, "atom ({:.6}, {:.6}) beta {:.6}", a.x[0], a.x[1], a.beta)?;
                }
            }
            if !cli.quiet {
                writeln!(
                    out,
                    "{} phi={:.3e} objective={:.6e} support={} lumped_atoms={} iterations={}",
                    if report.converged { "converged" } else { "not-converged" },
                    report.gap,
                    report.objective,
                    report.measure.len(),
                    report.lumped.measure.len(),
                    report.log.records.len().saturating_sub(1),
                )?;
            }
            Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Outcome::Study(report) => study_summary(report, cli, out, err),
    }
}

enum Outcome {
    Reconstruction(experiments::ReconstructionReport),
    Study(StudyReport),
}

fn study_summary<W: Write, E: Write>(report: StudyReport, cli: &Cli, out: &mut W, err: &mut E) -> crate::Result<i32> {
    if cli.verbose > 0 {
        for r in &report.table.rows {
            let eoc = r.eoc.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            writeln!(err, "param {:.4e} error {:.4e} eoc {eoc}", r.param, r.error)?;
        }
    }
    if !cli.quiet {
        writeln!(
            out,
            "slope={:.4} slope_all={:.4} rows={}{}",
            report.slope,
            report.table.slope,
            report.table.rows.len(),
            if report.is_healthy() { "" } else { " (non-monotone errors)" },
        )?;
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_lists_commands_and_keys() {
        let (code, out, _) = call(&["sparse-heat", "--help"]);
        assert_eq!(code, 0);
        for word in ["reconstruct", "study-space", "study-time", "study-smoothing", "selftest"] {
            assert!(out.contains(word), "{word}");
        }
        for (key, _) in CONFIG_KEYS {
            assert!(out.contains(key), "{key}");
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["sparse-heat"]).0, 1);
        assert_eq!(call(&["sparse-heat", "bogus"]).0, 1);
        assert_eq!(call(&["sparse-heat", "reconstruct"]).0, 1);
        let (code, _, err) = call(&["sparse-heat", "reconstruct", "--config", "/nonexistent/c.json"]);
        assert_eq!(code, 1);
        assert!(err.contains("cannot open"));
    }

    #[test]
    fn bad_config_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mesh": 4}"#).unwrap();
        let (code, _, _) = call(&["sparse-heat", "study-time", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 1);
    }

    #[test]
    fn small_reconstruction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mesh_n": 8, "time_steps": 4}"#).unwrap();
        let out_dir = dir.path().join("out");
        let (code, out, _) = call(&[
            "sparse-heat",
            "reconstruct",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            "1",
        ]);
        assert_eq!(code, 0, "{out}");
        assert!(out.starts_with("converged"));
        for f in ["measure.json", "measure_lumped.json", "log.csv", "field.csv"] {
            assert!(out_dir.join(f).exists(), "{f}");
        }
    }
}
