use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{SynthConfig, TabularSchema};
use crate::error::{Error, Result};
use crate::fis::FisConfig;
use crate::model::{AdamWConfig, Architecture};
use crate::types::SplitFractions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthConfig),
    Csv {
        path: PathBuf,
        schema: TabularSchema,
    },
    Jsonl {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Unweighted mean cross-entropy.
    Erm,
    #[default]
    Fis,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Erm => "erm",
            Method::Fis => "fis",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erm" => Ok(Method::Erm),
            "fis" => Ok(Method::Fis),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Which epoch's parameters a run reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    BestValAuc,
    LastEpoch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub selection: Selection,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 10,
            selection: Selection::BestValAuc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default)]
    pub model: Architecture,
    #[serde(default)]
    pub optimizer: AdamWConfig,
    #[serde(default)]
    pub training: TrainSettings,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub fis: FisConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

fn default_threshold() -> f64 {
    0.5
}

/// Seed of the default synthetic dataset; runs vary only the split and init.
pub const TESTBED_DATA_SEED: u64 = 2023;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic(SynthConfig::disparity_testbed(TESTBED_DATA_SEED)),
            split: SplitFractions::default(),
            model: Architecture::default(),
            optimizer: AdamWConfig::default(),
            training: TrainSettings::default(),
            method: Method::default(),
            fis: FisConfig::default(),
            seeds: default_seeds(),
            threshold: default_threshold(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.optimizer.validate()?;
        self.fis.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("need at least one seed".into()));
        }
        if self.training.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_training_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!(c.optimizer.lr, 1e-4);
        assert_eq!(c.optimizer.weight_decay, 0.0);
        assert_eq!(c.training.epochs, 10);
        assert_eq!(c.training.batch_size, 10);
        assert_eq!((c.fis.c, c.fis.tau), (0.5, 1.0));
        assert_eq!(c.seeds.len(), 3);
        assert_eq!(c.split, SplitFractions::default());
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);

        let text = r#"
            method = "erm"
            seeds = [7]
            [data]
            kind = "csv"
            path = "x.csv"
            schema = { label_column = "y", group_column = "race" }
            [model]
            kind = "linear"
            [fis]
            c = 0.25
        "#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.method, Method::Erm);
        assert_eq!(c.model, Architecture::Linear);
        assert_eq!(c.fis.c, 0.25);
        assert_eq!(c.fis.tau, 1.0);
        assert_eq!(c.training.epochs, 10);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::default();
        c.seeds.clear();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.fis.c = 2.0;
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("nonsense = [").is_err());
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
            method = "fis"
            seeds = [0, 1, 2]
            threshold = 0.5
            [data]
            kind = "csv"
            path = "cohort.csv"
            schema = { label_column = "label", group_column = "race" }
            [model]
            kind = "one_hidden"
            width = 32
            [optimizer]
            lr = 1e-4
            weight_decay = 0.0
            [training]
            epochs = 10
            batch_size = 10
            selection = "best_val_auc"
            [fis]
            c = 0.5
            tau = 1.0
            beta_lr = 0.01
            memory = "memory"
            gradient = "through_softmax"
        "#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.model, Architecture::OneHidden { width: 32 });
        assert_eq!(c.fis.gradient, crate::fis::GradientMode::ThroughSoftmax);
        assert_eq!(c.training.selection, Selection::BestValAuc);
    }
}
