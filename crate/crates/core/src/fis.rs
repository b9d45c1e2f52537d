//! Fair identity scaling.
//!
//! Each sample in a mini-batch `B` gets a loss weight
//!
//! ```text
//! score_i = c · beta[group_i] + (1 - c) · prior_loss_i
//! w_i     = |B| · softmax(score / tau)_i
//! ```
//!
//! and the batch objective is `(1/|B|) Σ w_i · loss_i`. The weights always
//! average to one, so `tau → ∞` recovers the plain mean loss. `c = 1` scales
//! by group only; `c = 0` scales by each sample's own prior loss only.
//!
//! `beta` holds one learnable weight per group. It is raised by gradient
//! ascent on the group's mean batch loss and re-centered to mean zero, so
//! groups the model currently serves worst gain weight.
//!
//! `prior_loss_i` comes from a per-sample loss memory holding the last loss
//! observed for that sample. On first encounter (or when
//! [`LossMemoryMode::Current`] is selected) the sample's current detached
//! loss is used instead.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SampleId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMemoryMode {
    /// Last observed loss per sample, falling back to the current loss.
    #[default]
    Memory,
    /// Always the current detached loss.
    Current,
}

/// Whether the softmax coefficient passes gradient back into the model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Weights are constants.
    #[default]
    Detached,
    /// Differentiate through the softmax for samples whose prior loss is the
    /// current loss.
    ThroughSoftmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FisConfig {
    /// Fusion weight in `[0, 1]`: 1 = group scaling only, 0 = individual only.
    pub c: f64,
    /// Softmax temperature, `> 0`.
    pub tau: f64,
    /// Step size of the group-weight ascent.
    pub beta_lr: f64,
    pub memory: LossMemoryMode,
    pub gradient: GradientMode,
}

impl Default for FisConfig {
    fn default() -> Self {
        Self {
            c: 0.5,
            tau: 1.0,
            beta_lr: 0.01,
            memory: LossMemoryMode::Memory,
            gradient: GradientMode::Detached,
        }
    }
}

impl FisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(Error::InvalidFusionWeight(self.c));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::InvalidTemperature(self.tau));
        }
        if !self.beta_lr.is_finite() || self.beta_lr < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "beta_lr must be finite and non-negative, got {}",
                self.beta_lr
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisState {
    pub config: FisConfig,
    beta: Vec<f64>,
    #[serde(skip)]
    loss_memory: HashMap<SampleId, f64>,
}

/// Per-sample loss weights for one batch; they average to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingWeights {
    pub weights: Vec<f64>,
    /// `true` where the prior loss was the sample's current loss.
    pub live: Vec<bool>,
}

impl FisState {
    /// Fresh state with all group weights at zero.
    pub fn new(config: FisConfig, num_groups: usize) -> Result<Self> {
        config.validate()?;
        if num_groups == 0 {
            return Err(Error::InvalidConfig("need at least one group".into()));
        }
        Ok(Self {
            config,
            beta: vec![0.0; num_groups],
            loss_memory: HashMap::new(),
        })
    }

    pub fn with_beta(config: FisConfig, beta: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(config, beta.len())?;
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::NonFinite("group weights"));
        }
        s.beta = beta;
        Ok(s)
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn num_groups(&self) -> usize {
        self.beta.len()
    }

    pub fn remembered_loss(&self, id: SampleId) -> Option<f64> {
        self.loss_memory.get(&id).copied()
    }

    pub fn memory_len(&self) -> usize {
        self.loss_memory.len()
    }

    fn check_batch(
        &self,
        groups: impl Iterator<Item = usize>,
        losses: &[f64],
        n: usize,
    ) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        if losses.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: losses.len(),
            });
        }
        if losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::NonFinite("batch losses"));
        }
        for g in groups {
            if g >= self.beta.len() {
                return Err(Error::InvalidGroup {
                    group: g,
                    groups: self.beta.len(),
                });
            }
        }
        Ok(())
    }

    /// Group ascent followed by re-centering to mean zero. Groups absent from
    /// the batch keep their pre-centering value.
    pub fn update_beta(&mut self, groups: &[usize], losses: &[f64]) -> Result<()> {
        self.check_batch(groups.iter().copied(), losses, groups.len())?;
        let g_count = self.beta.len();
        let mut sum = vec![0.0; g_count];
        let mut count = vec![0usize; g_count];
        for (&g, &l) in groups.iter().zip(losses) {
            sum[g] += l;
            count[g] += 1;
        }
        for g in 0..g_count {
            if count[g] > 0 {
                self.beta[g] += self.config.beta_lr * sum[g] / count[g] as f64;
            }
        }
        let mean = self.beta.iter().sum::<f64>() / g_count as f64;
        for b in &mut self.beta {
            *b -= mean;
        }
        Ok(())
    }

    /// Last-write-wins memory of each sample's loss.
    pub fn update_loss_memory(&mut self, ids: &[SampleId], losses: &[f64]) -> Result<()> {
        if ids.len() != losses.len() {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: losses.len(),
            });
        }
        for (&id, &l) in ids.iter().zip(losses) {
            self.loss_memory.insert(id, l);
        }
        Ok(())
    }
}

/// Scaling weights for a batch of `(sample_id, group)` pairs.
pub fn fis_weights(
    state: &FisState,
    batch: &[(SampleId, usize)],
    current_losses: &[f64],
) -> Result<ScalingWeights> {
    let cfg = &state.config;
    if cfg.tau.is_nan() || cfg.tau <= 0.0 {
        return Err(Error::InvalidTemperature(cfg.tau));
    }
    state.check_batch(batch.iter().map(|&(_, g)| g), current_losses, batch.len())?;

    let mut live = Vec::with_capacity(batch.len());
    let scores: Vec<f64> = batch
        .iter()
        .zip(current_losses)
        .map(|(&(id, g), &current)| {
            let remembered = match cfg.memory {
                LossMemoryMode::Memory => state.loss_memory.get(&id).copied(),
                LossMemoryMode::Current => None,
            };
            live.push(remembered.is_none());
            let prior = remembered.unwrap_or(current);
            (cfg.c * state.beta[g] + (1.0 - cfg.c) * prior) / cfg.tau
        })
        .collect();

    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let n = batch.len() as f64;
    let weights = exps.iter().map(|e| n * e / total).collect();
    Ok(ScalingWeights { weights, live })
}

/// `(1/|B|) Σ w_i · loss_i`.
pub fn fis_scaled_loss(weights: &ScalingWeights, current_losses: &[f64]) -> Result<f64> {
    let w = &weights.weights;
    if w.len() != current_losses.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: current_losses.len(),
        });
    }
    if w.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(w.iter()
        .zip(current_losses)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / w.len() as f64)
}

/// Per-sample multipliers on `∇loss_i` for the batch objective.
///
/// Detached mode returns the weights unchanged. Through-softmax mode adds the
/// softmax's own derivative for live samples:
/// `w_k · (1 + (1-c)/tau · (loss_k - Σ_i p_i loss_i))` with `p = w / |B|`.
/// Non-live samples' prior losses are constants, so they keep `w_k`.
pub fn gradient_coefficients(
    config: &FisConfig,
    weights: &ScalingWeights,
    current_losses: &[f64],
) -> Vec<f64> {
    match config.gradient {
        GradientMode::Detached => weights.weights.clone(),
        GradientMode::ThroughSoftmax => {
            let n = weights.weights.len() as f64;
            let mean: f64 = weights
                .weights
                .iter()
                .zip(current_losses)
                .map(|(w, l)| w / n * l)
                .sum();
            let slope = (1.0 - config.c) / config.tau;
            weights
                .weights
                .iter()
                .zip(current_losses)
                .zip(&weights.live)
                .map(|((&w, &l), &live)| {
                    if live {
                        w * (1.0 + slope * (l - mean))
                    } else {
                        w
                    }
                })
                .collect()
        }
    }
}
