use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, Sample};

/// Binary classification data with per-group difficulty.
///
/// Features are unit-covariance Gaussian. Class means sit at
/// `±(separation_g / 2) · u_g`, where `u_g = cos(t_g)·e_0 + sin(t_g)·e_{g+1}`
/// and `t_g` is the group's `direction_tilt` (radians). With all tilts zero
/// every group shares the axis `e_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub feature_dim: usize,
    pub num_groups: usize,
    pub group_proportions: Vec<f64>,
    pub positive_rate: Vec<f64>,
    pub class_separation: Vec<f64>,
    pub label_noise: Vec<f64>,
    #[serde(default)]
    pub direction_tilt: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// Two groups, 80/20, separations 3.0 and 0.5; the minority's signal is
    /// rotated 60° away from the majority's.
    pub fn disparity_testbed(seed: u64) -> Self {
        Self {
            feature_dim: 8,
            num_groups: 2,
            group_proportions: vec![0.8, 0.2],
            positive_rate: vec![0.5, 0.5],
            class_separation: vec![3.0, 0.5],
            label_noise: vec![0.0, 0.0],
            direction_tilt: vec![0.0, std::f64::consts::FRAC_PI_3],
            n_samples: 10_000,
            seed,
        }
    }

    fn tilt(&self, g: usize) -> f64 {
        self.direction_tilt.get(g).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let g = self.num_groups;
        if self.feature_dim == 0 || g == 0 {
            return bad("feature_dim and num_groups must be positive".into());
        }
        for (name, len) in [
            ("group_proportions", self.group_proportions.len()),
            ("positive_rate", self.positive_rate.len()),
            ("class_separation", self.class_separation.len()),
            ("label_noise", self.label_noise.len()),
        ] {
            if len != g {
                return bad(format!("{name} has {len} entries, expected {g}"));
            }
        }
        if !self.direction_tilt.is_empty() && self.direction_tilt.len() != g {
            return bad(format!("direction_tilt must be empty or have {g} entries"));
        }
        if self
            .group_proportions
            .iter()
            .any(|p| p.is_nan() || *p <= 0.0)
        {
            return bad("group proportions must be positive".into());
        }
        let total: f64 = self.group_proportions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("group proportions sum to {total}"));
        }
        if self.positive_rate.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return bad("positive rates must lie in (0, 1)".into());
        }
        if self
            .class_separation
            .iter()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return bad("class separations must be positive".into());
        }
        if self.label_noise.iter().any(|q| !(0.0..=0.5).contains(q)) {
            return bad("label noise must lie in [0, 0.5]".into());
        }
        if self.direction_tilt.iter().any(|t| !t.is_finite()) {
            return bad("direction tilts must be finite".into());
        }
        if self.direction_tilt.iter().any(|t| *t != 0.0) && self.feature_dim < g + 1 {
            return bad(format!("tilted directions need feature_dim >= {}", g + 1));
        }
        if self.n_samples < 10 * g {
            return bad(format!("need at least {} samples", 10 * g));
        }
        Ok(())
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let group_dist = WeightedIndex::new(&cfg.group_proportions)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let directions: Vec<(f64, f64)> = (0..cfg.num_groups)
        .map(|g| (cfg.tilt(g).cos(), cfg.tilt(g).sin()))
        .collect();

    let samples = (0..cfg.n_samples)
        .map(|i| {
            let group = group_dist.sample(&mut rng);
            let positive = rng.random_bool(cfg.positive_rate[group]);
            let sign = if positive { 1.0 } else { -1.0 };
            let offset = sign * cfg.class_separation[group] / 2.0;
            let mut features: Vec<f64> = (0..cfg.feature_dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let (along, across) = directions[group];
            features[0] += offset * along;
            if across != 0.0 {
                features[group + 1] += offset * across;
            }
            let flipped = rng.random_bool(cfg.label_noise[group]);
            Sample {
                id: i as u64,
                features,
                label: usize::from(positive != flipped),
                group,
            }
        })
        .collect();
    Dataset::with_indexed_names(samples, 2, cfg.num_groups)
}
