use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method};
use super::record::{summary, MetricSummary, RunRecord, SeedRun};
use super::train::{evaluate, load_data, prepare, train_on};
use crate::error::{Error, Result};
use crate::fis::FisConfig;
use crate::types::Dataset;

/// Trains and evaluates one seed on an already loaded dataset.
pub fn run_seed(config: &ExperimentConfig, ds: &Dataset, seed: u64) -> Result<SeedRun> {
    let started = Instant::now();
    let data = prepare(ds, config, seed)?;
    let outcome = train_on(config, &data, seed)?;
    let val = evaluate(&outcome.model, &data.val, config.threshold)?;
    let test_predictions = outcome.model.predict(&data.test)?;
    let test = evaluate(&outcome.model, &data.test, config.threshold)?;
    Ok(SeedRun {
        seed,
        method: config.method.name().into(),
        selected_epoch: outcome.selected_epoch,
        val,
        test,
        beta: outcome.fis.beta().to_vec(),
        loss_curve: outcome.loss_curve,
        scaled_loss_curve: outcome.scaled_loss_curve,
        val_auc_curve: outcome.val_auc_curve,
        duration_ms: started.elapsed().as_millis() as u64,
        flags: outcome.flags,
        model: Some(outcome.model),
        test_predictions,
    })
}

/// Every configured seed, in parallel. Results are ordered as `config.seeds`.
pub fn run_experiment(config: &ExperimentConfig, name: &str) -> Result<RunRecord> {
    config.validate()?;
    let ds = load_data(&config.data)?;
    run_experiment_on(config, &ds, name)
}

pub fn run_experiment_on(config: &ExperimentConfig, ds: &Dataset, name: &str) -> Result<RunRecord> {
    config.validate()?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, ds, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunRecord::new(name, config.clone(), runs))
}

/// A named training method for a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub method: Method,
    pub fis: FisConfig,
}

impl MethodSpec {
    pub fn erm() -> Self {
        Self {
            name: "erm".into(),
            method: Method::Erm,
            fis: FisConfig::default(),
        }
    }

    pub fn fis(name: &str, fis: FisConfig) -> Self {
        Self {
            name: name.into(),
            method: Method::Fis,
            fis,
        }
    }

    fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            method: self.method,
            fis: self.fis,
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub summaries: Vec<MetricSummary>,
    /// Seeds that produced a test report.
    pub seeds: usize,
    /// `best_auc`, `best_mean_psd`, `best_max_psd` where this row leads.
    pub marks: Vec<String>,
}

impl ComparisonRow {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        summary(&self.summaries, metric).and_then(|s| s.mean)
    }

    pub fn std(&self, metric: &str) -> Option<f64> {
        summary(&self.summaries, metric).and_then(|s| s.std)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl ComparisonTable {
    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// `method,<metric>_mean,<metric>_std,...,seeds,marks`.
    pub fn to_csv(&self) -> String {
        let metrics: Vec<String> = self
            .rows
            .first()
            .map(|r| r.summaries.iter().map(|s| s.metric.clone()).collect())
            .unwrap_or_default();
        let mut out = String::from("method");
        for m in &metrics {
            write!(out, ",{m}_mean,{m}_std").unwrap();
        }
        out.push_str(",seeds,marks\n");
        for row in &self.rows {
            out.push_str(&row.name);
            for m in &metrics {
                let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                write!(out, ",{},{}", cell(row.mean(m)), cell(row.std(m))).unwrap();
            }
            writeln!(out, ",{},{}", row.seeds, row.marks.join(";")).unwrap();
        }
        out
    }

    /// `comparison.csv`, `comparison.json` and one subdirectory per method.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("comparison.csv"), self.to_csv())?;
        fs::write(
            dir.join("comparison.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        for record in &self.records {
            record.write_to(&dir.join(&record.name))?;
        }
        Ok(())
    }
}

/// Runs each method over the same data and seeds.
pub fn compare(config: &ExperimentConfig, methods: &[MethodSpec]) -> Result<ComparisonTable> {
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods to compare".into()));
    }
    config.validate()?;
    let ds = load_data(&config.data)?;
    let records = methods
        .iter()
        .map(|m| run_experiment_on(&m.apply(config), &ds, &m.name))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ComparisonRow> = records
        .iter()
        .map(|r| ComparisonRow {
            name: r.name.clone(),
            summaries: r.aggregate_test.clone(),
            seeds: r.runs.len(),
            marks: vec![],
        })
        .collect();
    mark_best(&mut rows, "overall_auc", "best_auc", true);
    mark_best(&mut rows, "mean_psd", "best_mean_psd", false);
    mark_best(&mut rows, "max_psd", "best_max_psd", false);
    Ok(ComparisonTable { rows, records })
}

fn mark_best(rows: &mut [ComparisonRow], metric: &str, mark: &str, higher: bool) {
    let best =
        rows.iter()
            .filter_map(|r| r.mean(metric))
            .fold(None, |acc: Option<f64>, v| match acc {
                Some(a) if (higher && a >= v) || (!higher && a <= v) => Some(a),
                _ => Some(v),
            });
    if let Some(best) = best {
        for row in rows.iter_mut() {
            if row.mean(metric) == Some(best) {
                row.marks.push(mark.into());
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    C,
    Tau,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::C => "c",
            SweepParam::Tau => "tau",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(SweepParam::C),
            "tau" => Ok(SweepParam::Tau),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub auc_mean: Option<f64>,
    pub auc_std: Option<f64>,
    pub mean_psd_mean: Option<f64>,
    pub mean_psd_std: Option<f64>,
    pub max_psd_mean: Option<f64>,
    pub max_psd_std: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{},auc_mean,auc_std,mean_psd_mean,mean_psd_std,max_psd_mean,max_psd_std\n",
            self.param.name()
        );
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.value,
                cell(r.auc_mean),
                cell(r.auc_std),
                cell(r.mean_psd_mean),
                cell(r.mean_psd_std),
                cell(r.max_psd_mean),
                cell(r.max_psd_std)
            )
            .unwrap();
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sweep.csv"), self.to_csv())?;
        fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// FIS runs with one parameter varied over `values`, all else from `config`.
pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("no sweep values".into()));
    }
    config.validate()?;
    let ds = load_data(&config.data)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut records = Vec::with_capacity(values.len());
    for &value in values {
        let mut fis = config.fis;
        match param {
            SweepParam::C => fis.c = value,
            SweepParam::Tau => fis.tau = value,
        }
        let cfg = ExperimentConfig {
            method: Method::Fis,
            fis,
            ..config.clone()
        };
        let record = run_experiment_on(&cfg, &ds, &format!("{}={value}", param.name()))?;
        let get = |metric: &str| {
            summary(&record.aggregate_test, metric).map_or((None, None), |s| (s.mean, s.std))
        };
        let (auc_mean, auc_std) = get("overall_auc");
        let (mean_psd_mean, mean_psd_std) = get("mean_psd");
        let (max_psd_mean, max_psd_std) = get("max_psd");
        rows.push(SweepRow {
            value,
            auc_mean,
            auc_std,
            mean_psd_mean,
            mean_psd_std,
            max_psd_mean,
            max_psd_std,
        });
        records.push(record);
    }
    Ok(SweepTable {
        param,
        rows,
        records,
    })
}
