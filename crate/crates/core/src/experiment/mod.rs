//! Batch experiment driver: reads a config, runs the selected pipelines and
//! writes CSV/plain-text artifacts plus `verdict.txt`.

mod circle;
pub mod config;
mod torus;
pub mod verdict;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{CircleSection, ConfigError, ExperimentConfig, MapKind, Pipeline, RunSection, Task, TorusSection};
pub use verdict::{fmt_f64, Verdict, SKIPPED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{operation}: {source}")]
    Numerical {
        operation: &'static str,
        source: crate::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical { .. } => EXIT_NUMERICAL,
            // an unwritable output directory is a usage problem, not a numerical one
            RunError::Io { .. } => EXIT_CONFIG,
        }
    }
}

/// Tags a module error with the operation that raised it.
pub(crate) trait Op<T> {
    fn op(self, operation: &'static str) -> Result<T, RunError>;
}

impl<T> Op<T> for crate::Result<T> {
    fn op(self, operation: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numerical { operation, source })
    }
}

/// Output directory for one run.
pub(crate) struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub(crate) fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Rows of numbers joined by commas under a header line.
pub(crate) fn csv<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub verdict: Verdict,
    /// File names written into the output directory, in order.
    pub artifacts: Vec<String>,
}

/// Runs `config`, writing artifacts into `out`. The verdict is written last.
pub fn run_config(config: &ExperimentConfig, out: &Path) -> Result<RunReport, RunError> {
    let mut artifacts = Artifacts::new(out)?;
    let mut body = || match config.run.kind {
        MapKind::Circle => circle::run(config, config.circle.as_ref().expect("validated"), &mut artifacts),
        MapKind::Toral => torus::run(config, config.torus.as_ref().expect("validated"), &mut artifacts),
    };
    let verdict = if config.run.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.threads)
            .build()
            .map_err(|e| RunError::Config(ConfigError::Invalid(format!("thread pool: {e}"))))?;
        pool.install(body)?
    } else {
        body()?
    };
    artifacts.write("verdict.txt", &verdict.render())?;
    Ok(RunReport { verdict, artifacts: artifacts.written })
}

/// Loads the config at `path` and runs it.
pub fn run(path: &Path, out: &Path) -> Result<RunReport, RunError> {
    let config = ExperimentConfig::load(path)?;
    run_config(&config, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_circle_full_report() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[run]\nkind = \"circle\"\n[circle]\nperiods = 6\nbins = 256\nlevel = 8\node_steps = 256\n";
        let config = ExperimentConfig::from_toml(text).unwrap();
        let report = run_config(&config, dir.path()).unwrap();
        let v = &report.verdict;
        assert_eq!(v.get("CONSTANT_DATA"), Some("yes"));
        assert_eq!(v.get("LOG_D_MATCH"), Some("yes"));
        assert!(v.get("LOG_D_GAP").unwrap().parse::<f64>().unwrap() < 1e-15);
        assert!((v.get("REGULARITY_ALPHA").unwrap().parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(v.get("BILIPSCHITZ"), Some("yes"));
        assert!(v.entries().iter().all(|(_, val)| val != SKIPPED));
        assert!(dir.path().join("verdict.txt").exists());
    }

    #[test]
    fn missing_pipelines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[run]\nkind = \"circle\"\npipelines = [\"periodic\"]\n[circle]\nperiods = 4\n";
        let config = ExperimentConfig::from_toml(text).unwrap();
        let v = run_config(&config, dir.path()).unwrap().verdict;
        assert_eq!(v.get("CONSTANT_DATA"), Some("yes"));
        assert_eq!(v.get("ACIM_EXPONENT"), Some(SKIPPED));
        assert_eq!(v.get("REGULARITY_ALPHA"), Some(SKIPPED));
    }

    #[test]
    fn numerical_errors_name_the_operation() {
        let dir = tempfile::tempdir().unwrap();
        // strong perturbation: the linear cone field is not invariant
        let text = r#"
[run]
kind = "toral"
pipelines = ["periodic"]
[torus]
matrix = [[2, 1], [1, 1]]
epsilon = 0.5
modes = [[0, 1.0, 0.0, [0, 1]], [1, 0.5, 0.3, [1, 0]]]
"#;
        let config = ExperimentConfig::from_toml(text).unwrap();
        let err = run_config(&config, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_NUMERICAL);
        assert!(err.to_string().starts_with("cone_certify"), "{err}");
    }
}
