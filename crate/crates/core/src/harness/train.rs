use std::io::{BufRead, Write};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DataSource, ExperimentConfig, Method, Selection};
use crate::data::{generate_synthetic, load_jsonl, load_tabular};
use crate::error::{Error, Result};
use crate::fis::{fis_scaled_loss, fis_weights, gradient_coefficients, FisConfig, FisState};
use crate::metrics::{full_report, overall_auc, EvalSet};
use crate::model::{
    backward_tape, per_sample_ce, softmax_rows, ModelParams, OptimizerState, TensorFile,
};
use crate::types::{split_dataset, Dataset, MetricsReport, Sample, SampleId, ScoredPrediction};

/// Seed offset separating the split stream from the init/shuffle stream.
const SPLIT_STREAM: u64 = 0x005e_ed0f_5911;

pub fn load_data(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Synthetic(cfg) => generate_synthetic(cfg),
        DataSource::Csv { path, schema } => load_tabular(path, schema),
        DataSource::Jsonl { path } => load_jsonl(path),
    }
}

/// Per-feature affine map to zero mean and unit variance, fitted on one split.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Reciprocal standard deviation; 1 for constant features.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.feature_dim();
        let n = ds.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for s in ds.samples() {
            for (m, x) in mean.iter_mut().zip(&s.features) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for s in ds.samples() {
            for ((v, x), m) in var.iter_mut().zip(&s.features).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    /// Standardized feature matrix for `samples`.
    pub fn matrix(&self, samples: &[Sample]) -> Array2<f64> {
        let d = self.mean.len();
        Array2::from_shape_fn((samples.len(), d), |(i, j)| {
            (samples[i].features[j] - self.mean[j]) * self.scale[j]
        })
    }
}

/// Parameters plus the input standardization they were trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub standardizer: Standardizer,
}

impl TrainedModel {
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<ScoredPrediction>> {
        if ds.feature_dim() != self.params.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.params.input_dim(),
                found: ds.feature_dim(),
            });
        }
        let x = self.standardizer.matrix(ds.samples());
        let probs = softmax_rows(self.params.forward(x.view())?.view());
        Ok(ds
            .samples()
            .iter()
            .zip(probs.axis_iter(Axis(0)))
            .map(|(s, p)| ScoredPrediction {
                sample_id: s.id,
                probs: p.to_vec(),
                label: s.label,
                group: s.group,
            })
            .collect())
    }

    /// Checkpoint with two extra tensors, `input.mean` and `input.scale`.
    pub fn write_checkpoint<W: Write>(&self, w: W) -> Result<()> {
        let mut file = self.params.to_tensor_file();
        let d = self.standardizer.mean.len();
        file.tensors
            .push(("input.mean".into(), vec![d], self.standardizer.mean.clone()));
        file.tensors.push((
            "input.scale".into(),
            vec![d],
            self.standardizer.scale.clone(),
        ));
        file.write(w)
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Self> {
        let file = TensorFile::read(r)?;
        let params = ModelParams::from_tensor_file(&file)?;
        let standardizer = match (file.tensor("input.mean"), file.tensor("input.scale")) {
            (Some((_, m)), Some((_, s))) => Standardizer {
                mean: m.to_vec(),
                scale: s.to_vec(),
            },
            _ => Standardizer::identity(params.input_dim()),
        };
        if standardizer.mean.len() != params.input_dim()
            || standardizer.scale.len() != params.input_dim()
        {
            return Err(Error::Checkpoint(
                "input standardization has wrong length".into(),
            ));
        }
        Ok(Self {
            params,
            standardizer,
        })
    }
}

/// Raw splits for one seed plus the standardization fitted on train.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub standardizer: Standardizer,
}

pub fn prepare(ds: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<PreparedData> {
    let (train, val, test) = split_dataset(ds, config.split, seed ^ SPLIT_STREAM)?;
    let standardizer = Standardizer::fit(&train);
    Ok(PreparedData {
        train,
        val,
        test,
        standardizer,
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters chosen by the configured selection rule.
    pub model: TrainedModel,
    /// Parameters after the last epoch.
    pub final_params: ModelParams,
    pub fis: FisState,
    /// Mean unweighted training cross-entropy per epoch.
    pub loss_curve: Vec<f64>,
    /// Mean objective actually minimized per epoch (equals `loss_curve` for ERM).
    pub scaled_loss_curve: Vec<f64>,
    pub val_auc_curve: Vec<Option<f64>>,
    /// 1-based epoch of the selected parameters; 0 means the initialization.
    pub selected_epoch: usize,
    pub flags: Vec<String>,
}

/// Load, split and train one seed.
pub fn train(config: &ExperimentConfig, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let ds = load_data(&config.data)?;
    let data = prepare(&ds, config, seed)?;
    train_on(config, &data, seed)
}

/// Mini-batch training on prepared splits.
///
/// Per batch: detached per-sample losses, scaling weights (FIS) or unit
/// weights (ERM), weighted backward pass, AdamW step, then the FIS group
/// weight and loss memory updates.
pub fn train_on(config: &ExperimentConfig, data: &PreparedData, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let train = &data.train;
    let std = &data.standardizer;
    let x_all = std.matrix(train.samples());
    let labels: Vec<usize> = train.samples().iter().map(|s| s.label).collect();
    let groups: Vec<usize> = train.samples().iter().map(|s| s.group).collect();
    let ids: Vec<SampleId> = train.samples().iter().map(|s| s.id).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(
        config.model,
        train.feature_dim(),
        train.num_classes(),
        &mut rng,
    )?;
    let mut opt = OptimizerState::new(config.optimizer, &params)?;
    let fis_config = match config.method {
        Method::Fis => config.fis,
        Method::Erm => FisConfig::default(),
    };
    let mut fis = FisState::new(fis_config, train.num_groups())?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.training.epochs);
    let mut scaled_loss_curve = Vec::with_capacity(config.training.epochs);
    let mut val_auc_curve = Vec::with_capacity(config.training.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut flags = Vec::new();

    for epoch in 1..=config.training.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut scaled_sum = 0.0;
        for (step, chunk) in order.chunks(config.training.batch_size).enumerate() {
            let diverged = || Error::Diverged { epoch, step };
            let x = x_all.select(Axis(0), chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let tape = params.forward_tape(x.view()).map_err(|_| diverged())?;
            let losses = per_sample_ce(tape.logits.view(), &y).map_err(|_| diverged())?;
            loss_sum += losses.iter().sum::<f64>();

            let coefficients = match config.method {
                Method::Erm => {
                    scaled_sum += losses.iter().sum::<f64>();
                    vec![1.0; chunk.len()]
                }
                Method::Fis => {
                    let batch: Vec<(SampleId, usize)> =
                        chunk.iter().map(|&i| (ids[i], groups[i])).collect();
                    let weights = fis_weights(&fis, &batch, &losses)?;
                    scaled_sum += fis_scaled_loss(&weights, &losses)? * chunk.len() as f64;
                    gradient_coefficients(&fis.config, &weights, &losses)
                }
            };
            let grads = backward_tape(&params, x.view(), &tape, &y, &coefficients)?;
            opt.apply(&mut params, &grads).map_err(|_| diverged())?;

            if config.method == Method::Fis {
                let g: Vec<usize> = chunk.iter().map(|&i| groups[i]).collect();
                let b: Vec<SampleId> = chunk.iter().map(|&i| ids[i]).collect();
                fis.update_beta(&g, &losses)?;
                fis.update_loss_memory(&b, &losses)?;
            }
        }
        loss_curve.push(loss_sum / train.len() as f64);
        scaled_loss_curve.push(scaled_sum / train.len() as f64);

        let val_auc = validation_auc(&params, std, &data.val, config.threshold);
        val_auc_curve.push(val_auc);
        if let Some(v) = val_auc {
            if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                best = Some((v, epoch, params.clone()));
            }
        }
    }

    let epochs = config.training.epochs;
    let (selected_epoch, selected) = match (config.training.selection, best) {
        (_, _) if epochs == 0 => (0, params.clone()),
        (Selection::BestValAuc, Some((_, e, p))) => (e, p),
        (Selection::BestValAuc, None) => {
            flags.push("selection_fallback:validation_auc_undefined".into());
            (epochs, params.clone())
        }
        (Selection::LastEpoch, _) => (epochs, params.clone()),
    };

    Ok(TrainOutcome {
        model: TrainedModel {
            params: selected,
            standardizer: std.clone(),
        },
        final_params: params,
        fis,
        loss_curve,
        scaled_loss_curve,
        val_auc_curve,
        selected_epoch,
        flags,
    })
}

fn validation_auc(
    params: &ModelParams,
    std: &Standardizer,
    val: &Dataset,
    threshold: f64,
) -> Option<f64> {
    if val.is_empty() {
        return None;
    }
    let model = TrainedModel {
        params: params.clone(),
        standardizer: std.clone(),
    };
    let preds = model.predict(val).ok()?;
    let eval = EvalSet::new(preds, val.num_classes(), val.num_groups(), threshold).ok()?;
    overall_auc(&eval).ok()
}

/// Forward pass on a split, then the full metric report.
pub fn evaluate(model: &TrainedModel, split: &Dataset, threshold: f64) -> Result<MetricsReport> {
    let preds = model.predict(split)?;
    let eval = EvalSet::new(preds, split.num_classes(), split.num_groups(), threshold)?;
    Ok(full_report(&eval))
}
