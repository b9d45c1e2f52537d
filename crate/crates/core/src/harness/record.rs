use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::train::TrainedModel;
use crate::error::{Error, Result};
use crate::types::{MetricsReport, ScoredPrediction};

/// One seed of one method.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub method: String,
    pub selected_epoch: usize,
    pub val: MetricsReport,
    pub test: MetricsReport,
    /// Final FIS group weights (all zero for ERM).
    pub beta: Vec<f64>,
    pub loss_curve: Vec<f64>,
    pub scaled_loss_curve: Vec<f64>,
    pub val_auc_curve: Vec<Option<f64>>,
    pub duration_ms: u64,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub model: Option<TrainedModel>,
    #[serde(skip)]
    pub test_predictions: Vec<ScoredPrediction>,
}

/// Mean and population standard deviation of one metric over seeds where
/// it was defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Number of seeds contributing.
    pub n: usize,
}

pub fn aggregate(reports: &[MetricsReport]) -> Vec<MetricSummary> {
    let Some(first) = reports.first() else {
        return vec![];
    };
    let names: Vec<String> = first.metric_values().into_iter().map(|(k, _)| k).collect();
    names
        .into_iter()
        .enumerate()
        .map(|(col, metric)| {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.metric_values().get(col).and_then(|(_, v)| *v))
                .collect();
            let n = values.len();
            let (mean, std) = if n == 0 {
                (None, None)
            } else {
                let m = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
                (Some(m), Some(var.sqrt()))
            };
            MetricSummary {
                metric,
                mean,
                std,
                n,
            }
        })
        .collect()
}

pub fn summary<'a>(summaries: &'a [MetricSummary], metric: &str) -> Option<&'a MetricSummary> {
    summaries.iter().find(|s| s.metric == metric)
}

/// All seeds of one configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
    pub aggregate_test: Vec<MetricSummary>,
    pub aggregate_val: Vec<MetricSummary>,
}

impl RunRecord {
    pub fn new(name: impl Into<String>, config: ExperimentConfig, runs: Vec<SeedRun>) -> Self {
        let test: Vec<MetricsReport> = runs.iter().map(|r| r.test.clone()).collect();
        let val: Vec<MetricsReport> = runs.iter().map(|r| r.val.clone()).collect();
        Self {
            name: name.into(),
            config,
            aggregate_test: aggregate(&test),
            aggregate_val: aggregate(&val),
            runs,
        }
    }

    /// `run_<seed>.json`, plus `checkpoint_<seed>.txt` and
    /// `predictions_<seed>.csv` when the model was kept.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for run in &self.runs {
            let file = File::create(dir.join(format!("run_{}.json", run.seed)))?;
            serde_json::to_writer_pretty(BufWriter::new(file), run)?;
            if let Some(model) = &run.model {
                let file = File::create(dir.join(format!("checkpoint_{}.txt", run.seed)))?;
                model.write_checkpoint(BufWriter::new(file))?;
            }
            if !run.test_predictions.is_empty() {
                let file = File::create(dir.join(format!("predictions_{}.csv", run.seed)))?;
                write_predictions(&run.test_predictions, BufWriter::new(file))?;
            }
        }
        let file = File::create(dir.join("record.json"))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }
}

/// Header `id,label,group,p0..p{K-1}`.
pub fn write_predictions<W: Write>(preds: &[ScoredPrediction], writer: W) -> Result<()> {
    let k = preds.first().map_or(2, |p| p.probs.len());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec!["id".into(), "label".into(), "group".into()];
    header.extend((0..k).map(|c| format!("p{c}")));
    w.write_record(&header)?;
    for p in preds {
        let mut row = vec![
            p.sample_id.to_string(),
            p.label.to_string(),
            p.group.to_string(),
        ];
        row.extend(p.probs.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_predictions`]. A file with a single `score`
/// column instead of `p*` columns is read as binary scores.
pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<ScoredPrediction>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (id_col, label_col, group_col) = (find("id")?, find("label")?, find("group")?);
    let prob_cols: Vec<usize> = (0..)
        .map_while(|c| headers.iter().position(|h| *h == format!("p{c}")))
        .collect();
    let score_col = if prob_cols.is_empty() {
        Some(find("score")?)
    } else {
        None
    };

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 2, |p| p.line());
        let get = |col: usize| -> Result<&str> {
            record
                .get(col)
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::MissingValue {
                    line,
                    column: headers[col].clone(),
                })
        };
        let parse_err = |col: usize, v: &str| Error::Parse {
            line,
            column: headers[col].clone(),
            value: v.into(),
        };
        let int = |col: usize| -> Result<u64> {
            let v = get(col)?;
            v.parse().map_err(|_| parse_err(col, v))
        };
        let float = |col: usize| -> Result<f64> {
            let v = get(col)?;
            v.parse().map_err(|_| parse_err(col, v))
        };
        let sample_id = int(id_col)?;
        let label = int(label_col)? as usize;
        let group = int(group_col)? as usize;
        let pred = match score_col {
            Some(c) => ScoredPrediction::binary(sample_id, float(c)?, label, group),
            None => ScoredPrediction {
                sample_id,
                probs: prob_cols.iter().map(|&c| float(c)).collect::<Result<_>>()?,
                label,
                group,
            },
        };
        out.push(pred);
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<ScoredPrediction>> {
    read_predictions(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(auc: f64, psd: Option<f64>) -> MetricsReport {
        MetricsReport {
            overall_auc: Some(auc),
            group_auc: vec![Some(auc), None],
            mean_psd: psd,
            threshold_used: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn aggregate_uses_population_std() {
        let s = aggregate(&[
            report(0.7, Some(1.0)),
            report(0.8, None),
            report(0.9, Some(3.0)),
        ]);
        let auc = summary(&s, "overall_auc").unwrap();
        assert!((auc.mean.unwrap() - 0.8).abs() < 1e-12);
        assert!((auc.std.unwrap() - (0.02f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(auc.n, 3);
        let psd = summary(&s, "mean_psd").unwrap();
        assert_eq!((psd.mean, psd.std, psd.n), (Some(2.0), Some(1.0), 2));
        let g1 = summary(&s, "auc_g1").unwrap();
        assert_eq!((g1.mean, g1.n), (None, 0));
    }

    #[test]
    fn predictions_round_trip() {
        let preds = vec![
            ScoredPrediction::binary(3, 0.25, 0, 1),
            ScoredPrediction::binary(9, 0.75, 1, 0),
        ];
        let mut buf = Vec::new();
        write_predictions(&preds, &mut buf).unwrap();
        assert_eq!(read_predictions(buf.as_slice()).unwrap(), preds);

        let scores = "id,label,group,score\n1,1,0,0.9\n2,0,1,0.2\n";
        let back = read_predictions(scores.as_bytes()).unwrap();
        assert_eq!(back[1], ScoredPrediction::binary(2, 0.2, 0, 1));
        let bad = "id,label,group,score\n1,1,0,high\n";
        assert!(matches!(
            read_predictions(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn seed_run_json_keeps_undefined_metrics() {
        let run = SeedRun {
            seed: 4,
            method: "fis".into(),
            selected_epoch: 2,
            val: report(0.6, None),
            test: report(0.7, Some(2.5)),
            beta: vec![0.1, -0.1],
            loss_curve: vec![0.7, 0.6],
            scaled_loss_curve: vec![0.7, 0.6],
            val_auc_curve: vec![Some(0.6), None],
            duration_ms: 12,
            flags: vec![],
            model: None,
            test_predictions: vec![],
        };
        let text = serde_json::to_string(&run).unwrap();
        let back: SeedRun = serde_json::from_str(&text).unwrap();
        assert_eq!(back.test, run.test);
        assert_eq!(back.val.mean_psd, None);
        assert_eq!(back.val_auc_curve, run.val_auc_curve);
    }
}
