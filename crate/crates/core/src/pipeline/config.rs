use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DEFAULT_SPARSE_FEATURE_FRACTION;
use crate::error::{Error, Result};
use crate::metrics::PageRankParams;
use crate::scheme::DEFAULT_MAX_SCHEMES;

/// Environment variable consulted when the config leaves `jobs` unset.
pub const JOBS_ENV: &str = "GRAPHFEAT_JOBS";

/// Prediction task, which decides what rows and labels go into each fold file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Predict the feedback value; rows are predicted instances labeled with it.
    Regression,
    /// Like/dislike; training rows add sampled negatives labeled `0`.
    Binary,
    /// Rank candidate sets; test rows are candidate pairs.
    Ranking,
}

fn default_folds() -> usize {
    5
}
fn default_prune() -> usize {
    5
}
fn default_positives() -> usize {
    10
}
fn default_max_schemes() -> usize {
    DEFAULT_MAX_SCHEMES
}
fn default_sparse() -> Option<f64> {
    Some(DEFAULT_SPARSE_FEATURE_FRACTION)
}

/// A pipeline run. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: PathBuf,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pagerank: PageRankParams,
    pub task: Task,
    /// Required for ranking, rejected otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_sizes: Option<Vec<usize>>,
    #[serde(default = "default_positives")]
    pub positives_per_set: usize,
    /// Required for binary, rejected otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_ratio: Option<f64>,
    /// Worker threads; falls back to `GRAPHFEAT_JOBS`, then to the number of CPUs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default = "default_prune")]
    pub prune_threshold: usize,
    #[serde(default = "default_max_schemes")]
    pub max_schemes: usize,
    /// `null` disables the sparse categorical feature filter.
    #[serde(default = "default_sparse")]
    pub sparse_feature_fraction: Option<f64>,
    #[serde(default)]
    pub export_graphs: bool,
}

impl RunConfig {
    /// A config with defaults for everything but paths and task.
    pub fn new(
        schema: impl Into<PathBuf>,
        data_dir: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        task: Task,
    ) -> Self {
        RunConfig {
            schema: schema.into(),
            data_dir: data_dir.into(),
            output_dir: output_dir.into(),
            n_folds: default_folds(),
            seed: 0,
            pagerank: PageRankParams::default(),
            task,
            candidate_sizes: None,
            positives_per_set: default_positives(),
            negative_ratio: None,
            jobs: None,
            prune_threshold: default_prune(),
            max_schemes: default_max_schemes(),
            sparse_feature_fraction: default_sparse(),
            export_graphs: false,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.schema, &mut self.data_dir, &mut self.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_folds < 2 {
            return fail(format!("n_folds must be at least 2, got {}", self.n_folds));
        }
        self.pagerank.validate()?;
        match (self.task, &self.candidate_sizes) {
            (Task::Ranking, None) => return fail("ranking requires candidate_sizes".into()),
            (Task::Ranking, Some(sizes)) => {
                if sizes.is_empty() {
                    return fail("candidate_sizes is empty".into());
                }
                if self.positives_per_set == 0 {
                    return fail("positives_per_set must be positive".into());
                }
                if let Some(s) = sizes.iter().find(|&&s| s < self.positives_per_set) {
                    return fail(format!(
                        "candidate size {s} is smaller than positives_per_set {}",
                        self.positives_per_set
                    ));
                }
            }
            (_, Some(_)) => return fail("candidate_sizes is only valid for the ranking task".into()),
            _ => {}
        }
        match (self.task, self.negative_ratio) {
            (Task::Binary, None) => return fail("binary requires negative_ratio".into()),
            (Task::Binary, Some(r)) if !(r.is_finite() && r >= 0.0) => {
                return fail(format!("negative_ratio must be a non-negative number, got {r}"))
            }
            (Task::Regression | Task::Ranking, Some(_)) => {
                return fail("negative_ratio is only valid for the binary task".into())
            }
            _ => {}
        }
        if self.jobs == Some(0) {
            return fail("jobs must be positive".into());
        }
        if self.max_schemes == 0 {
            return fail("max_schemes must be positive".into());
        }
        if let Some(f) = self.sparse_feature_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return fail(format!("sparse_feature_fraction must be in (0, 1], got {f}"));
            }
        }
        Ok(())
    }

    /// Thread count from the config, then `GRAPHFEAT_JOBS`; `None` means the rayon default.
    pub fn effective_jobs(&self) -> Result<Option<usize>> {
        if let Some(j) = self.jobs {
            return Ok(Some(j));
        }
        match std::env::var(JOBS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(Error::Config(format!(
                    "{JOBS_ENV} must be a positive integer, got `{v}`"
                ))),
            },
            Err(_) => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"schema": "s.json", "data_dir": "data", "output_dir": "out", "task": "regression"}"#;

    #[test]
    fn defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.n_folds, 5);
        assert_eq!(c.prune_threshold, 5);
        assert_eq!(c.max_schemes, 1024);
        assert_eq!(c.pagerank, PageRankParams::default());
        assert_eq!(c.sparse_feature_fraction, Some(0.5));
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::from_json(MINIMAL).unwrap();
        c.task = Task::Ranking;
        c.candidate_sizes = Some(vec![50, 100]);
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn task_specific_fields() {
        let with = |extra: &str, task: &str| {
            RunConfig::from_json(&format!(
                r#"{{"schema": "s", "data_dir": "d", "output_dir": "o", "task": "{task}"{extra}}}"#
            ))
        };
        assert!(with("", "ranking").is_err());
        assert!(with(r#", "candidate_sizes": [100]"#, "ranking").is_ok());
        assert!(with(r#", "candidate_sizes": [5]"#, "ranking").is_err());
        assert!(with(r#", "candidate_sizes": [10]"#, "ranking").is_ok());
        assert!(with(r#", "candidate_sizes": [100]"#, "regression").is_err());
        assert!(with("", "binary").is_err());
        assert!(with(r#", "negative_ratio": 1"#, "binary").is_ok());
        assert!(with(r#", "negative_ratio": -1"#, "binary").is_err());
        assert!(with(r#", "negative_ratio": 1"#, "ranking").is_err());
        assert!(with(r#", "n_folds": 1"#, "regression").is_err());
        assert!(with(r#", "unknown_key": 1"#, "regression").is_err());
        assert_eq!(with(r#", "jobs": 0"#, "regression").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, MINIMAL).unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.schema, dir.path().join("s.json"));
        assert_eq!(c.output_dir, dir.path().join("out"));
    }

    #[test]
    fn missing_config_is_config_error() {
        assert_eq!(RunConfig::load("/nonexistent/run.json").unwrap_err().exit_code(), 2);
    }
}
