//! Run configuration: one TOML file covering every subcommand, with
//! command-line flags overriding file values, which override the
//! defaults (flags > file > defaults).
//!
//! The resolved configuration is echoed verbatim into each command's
//! manifest, so a run can always be reproduced from its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use resopp_core::datagen::GenConfig;
use resopp_core::domain::Term;
use resopp_core::eval::{ExperimentConfig, Method};
use resopp_core::features::{Level, Task, TextConfig};
use resopp_core::ingest::SchemaConfig;
use resopp_core::models::Hyperparams;

use crate::CliError;

/// Everything a run needs. Field names match the TOML keys; see the
/// README for the full schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset directory: where `datagen` writes the seven CSV tables
    /// and every other command reads them.
    pub dataset: PathBuf,
    /// Output directory for artifacts and manifests.
    pub out: PathBuf,
    /// Temporal cutoff: training uses records strictly before it.
    pub cutoff: Term,
    pub tasks: Vec<Task>,
    pub methods: Vec<Method>,
    pub task1_features: Vec<Level>,
    pub task2_features: Vec<Level>,
    /// MAP@k cut-offs; `recommend` uses the first entry as its list
    /// length.
    pub k: Vec<usize>,
    /// Negatives sampled per positive when training Task-2 models.
    pub neg_ratio: f64,
    /// Base seed for negative sampling and the random-ranking baseline.
    pub seed: u64,
    /// Let `eval` train any model file it cannot find.
    pub train_if_missing: bool,
    pub hyper: Hyperparams,
    pub text: TextConfig,
    /// Synthetic-generator settings, used by `datagen`. Its `gpa_scale`
    /// also bounds GPA validation when loading any dataset.
    pub gen: GenConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let experiment = ExperimentConfig::default();
        RunConfig {
            dataset: PathBuf::from("data"),
            out: PathBuf::from("out"),
            cutoff: experiment.cutoff,
            tasks: experiment.tasks,
            methods: experiment.methods,
            task1_features: experiment.task1_levels,
            task2_features: experiment.task2_levels,
            k: experiment.k_grid,
            neg_ratio: experiment.neg_ratio,
            seed: experiment.seed,
            train_if_missing: false,
            hyper: experiment.hyper,
            text: experiment.text,
            gen: GenConfig::default(),
        }
    }
}

/// Values collected from command-line flags; `None`/empty means "not
/// given, keep the file value".
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cutoff: Option<String>,
    pub tasks: Vec<u8>,
    pub methods: Vec<String>,
    pub features: Vec<String>,
    pub k: Vec<usize>,
    pub seed: Option<u64>,
    pub train_if_missing: bool,
}

impl RunConfig {
    /// Reads the TOML file (when given), then applies flag overrides.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
        let mut config = match path {
            Some(path) => {
                let raw = fs::read_to_string(path).map_err(|e| {
                    CliError::Input(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&raw).map_err(|e| {
                    CliError::Input(format!("invalid config {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };
        config.apply(overrides)?;
        Ok(config)
    }

    fn apply(&mut self, overrides: &Overrides) -> Result<(), CliError> {
        if let Some(dataset) = &overrides.dataset {
            self.dataset = dataset.clone();
        }
        if let Some(out) = &overrides.out {
            self.out = out.clone();
        }
        if let Some(cutoff) = &overrides.cutoff {
            self.cutoff = Term::parse(cutoff)
                .map_err(|e| CliError::Input(format!("--cutoff: {e}")))?;
        }
        if !overrides.tasks.is_empty() {
            self.tasks = overrides
                .tasks
                .iter()
                .map(|&n| {
                    Task::from_number(n)
                        .ok_or_else(|| CliError::Input(format!("--task must be 1 or 2, got {n}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if !overrides.methods.is_empty() {
            self.methods = overrides
                .methods
                .iter()
                .map(|name| {
                    name.parse::<Method>().map_err(|e| CliError::Input(format!("--method: {e}")))
                })
                .collect::<Result<_, _>>()?;
        }
        if !overrides.features.is_empty() {
            let levels: Vec<Level> = overrides
                .features
                .iter()
                .map(|slug| {
                    Level::from_slug(slug).ok_or_else(|| {
                        CliError::Input(format!(
                            "--features: unknown feature set '{slug}', expected base, \
                             base_plus or base_plus_plus"
                        ))
                    })
                })
                .collect::<Result<_, _>>()?;
            self.task1_features = levels.clone();
            self.task2_features = levels;
        }
        if !overrides.k.is_empty() {
            self.k = overrides.k.clone();
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
            self.gen.seed = seed;
        }
        self.train_if_missing |= overrides.train_if_missing;
        Ok(())
    }

    pub fn schema(&self) -> SchemaConfig {
        SchemaConfig { gpa_scale: self.gen.gpa_scale }
    }

    pub fn to_experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            cutoff: self.cutoff,
            tasks: self.tasks.clone(),
            methods: self.methods.clone(),
            task1_levels: self.task1_features.clone(),
            task2_levels: self.task2_features.clone(),
            k_grid: self.k.clone(),
            neg_ratio: self.neg_ratio,
            seed: self.seed,
            hyper: self.hyper,
            text: self.text.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_experiment_defaults() {
        let config = RunConfig::default();
        let experiment = ExperimentConfig::default();
        assert_eq!(config.to_experiment(), experiment);
        assert_eq!(config.out, PathBuf::from("out"));
        assert_eq!(config.dataset, PathBuf::from("data"));
    }

    #[test]
    fn toml_round_trips() {
        let config = RunConfig::default();
        let raw = toml::to_string(&config).expect("serialize");
        let back: RunConfig = toml::from_str(&raw).expect("parse");
        assert_eq!(config, back);
    }

    #[test]
    fn flags_override_file_values() {
        let overrides = Overrides {
            dataset: Some(PathBuf::from("elsewhere")),
            cutoff: Some("2015.2".to_string()),
            tasks: vec![2],
            methods: vec!["logreg".to_string()],
            features: vec!["base_plus".to_string()],
            k: vec![7],
            seed: Some(99),
            ..Overrides::default()
        };
        let mut config = RunConfig::default();
        config.apply(&overrides).expect("apply");
        assert_eq!(config.dataset, PathBuf::from("elsewhere"));
        assert_eq!(config.cutoff, Term::parse("2015.2").unwrap());
        assert_eq!(config.tasks, vec![Task::Two]);
        assert_eq!(config.methods, vec![Method::LogReg]);
        assert_eq!(config.task1_features, vec![Level::BasePlus]);
        assert_eq!(config.task2_features, vec![Level::BasePlus]);
        assert_eq!(config.k, vec![7]);
        assert_eq!(config.seed, 99);
        assert_eq!(config.gen.seed, 99, "--seed also drives the generator");
    }

    #[test]
    fn bad_flag_values_are_input_errors() {
        let mut config = RunConfig::default();
        let bad_cutoff =
            Overrides { cutoff: Some("2014".to_string()), ..Overrides::default() };
        assert!(matches!(config.apply(&bad_cutoff), Err(CliError::Input(_))));
        let bad_task = Overrides { tasks: vec![3], ..Overrides::default() };
        assert!(matches!(config.apply(&bad_task), Err(CliError::Input(_))));
        let bad_method =
            Overrides { methods: vec!["quantum".to_string()], ..Overrides::default() };
        assert!(matches!(config.apply(&bad_method), Err(CliError::Input(_))));
        let bad_features =
            Overrides { features: vec!["everything".to_string()], ..Overrides::default() };
        assert!(matches!(config.apply(&bad_features), Err(CliError::Input(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("cutofff = \"2014.1\"").unwrap_err();
        assert!(err.to_string().contains("cutofff"));
    }
}
