//! Domain model shared by the model, metrics, data and harness modules.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub type SampleId = u64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: SampleId,
    pub features: Vec<f64>,
    pub label: usize,
    pub group: usize,
}

/// A validated collection of samples with a fixed feature dimension.
///
/// Datasets built through [`Dataset::new`] contain every group at least once.
/// Splits produced by [`split_dataset`] keep the parent's class and group
/// tables but may lack a group when the split is small.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    num_classes: usize,
    group_names: Vec<String>,
    class_names: Vec<String>,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(
        samples: Vec<Sample>,
        class_names: Vec<String>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self::from_parts(samples, class_names, group_names)?;
        let mut seen = vec![false; ds.num_groups()];
        for s in &ds.samples {
            seen[s.group] = true;
        }
        if let Some(g) = seen.iter().position(|&s| !s) {
            return Err(Error::EmptyGroup(g));
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] but without requiring every group to be present.
    pub fn from_parts(
        samples: Vec<Sample>,
        class_names: Vec<String>,
        group_names: Vec<String>,
    ) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let feature_dim = first.features.len();
        let num_classes = class_names.len();
        let num_groups = group_names.len();
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            if s.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    found: s.features.len(),
                });
            }
            if s.label >= num_classes {
                return Err(Error::InvalidLabel {
                    label: s.label,
                    classes: num_classes,
                });
            }
            if s.group >= num_groups {
                return Err(Error::InvalidGroup {
                    group: s.group,
                    groups: num_groups,
                });
            }
            if !s.features.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("sample features"));
            }
            if !ids.insert(s.id) {
                return Err(Error::DuplicateId(s.id));
            }
        }
        Ok(Self {
            samples,
            num_classes,
            group_names,
            class_names,
            feature_dim,
        })
    }

    /// Integer class and group tables named after their index.
    pub fn with_indexed_names(
        samples: Vec<Sample>,
        num_classes: usize,
        num_groups: usize,
    ) -> Result<Self> {
        Self::new(
            samples,
            (0..num_classes).map(|k| k.to_string()).collect(),
            (0..num_groups).map(|g| format!("g{g}")).collect(),
        )
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_groups(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Same tables, different samples. Used for splits and standardized copies.
    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> Self {
        Self {
            samples,
            num_classes: self.num_classes,
            group_names: self.group_names.clone(),
            class_names: self.class_names.clone(),
            feature_dim: self.feature_dim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.1,
            test: 0.3,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::InvalidFractions(format!(
                "fractions must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidFractions(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for `n` samples; the rounding remainder goes to train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon absorbs products like 0.3 * 10 = 3.0000000000000004 vs 2.9999999999999996.
        let count = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
        let val = count(self.val);
        let test = count(self.test);
        (n - val - test, val, test)
    }
}

/// Random `(train, val, test)` partition. Pure function of `(ds, fractions, seed)`.
pub fn split_dataset(
    ds: &Dataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    fractions.validate()?;
    let (n_train, n_val, _) = fractions.sizes(ds.len());
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let take = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        ds.with_samples(idx.into_iter().map(|i| ds.samples[i].clone()).collect())
    };
    let train = take(&order[..n_train]);
    let val = take(&order[n_train..n_train + n_val]);
    let test = take(&order[n_train + n_val..]);
    Ok((train, val, test))
}

/// Model output for one sample. `probs` holds one probability per class; a
/// binary score `s` is stored as `[1 - s, s]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub sample_id: SampleId,
    pub probs: Vec<f64>,
    pub label: usize,
    pub group: usize,
}

impl ScoredPrediction {
    pub fn binary(sample_id: SampleId, score: f64, label: usize, group: usize) -> Self {
        Self {
            sample_id,
            probs: vec![1.0 - score, score],
            label,
            group,
        }
    }

    /// Probability of the positive class (class 1).
    pub fn score(&self) -> f64 {
        self.probs[1]
    }

    /// Highest-probability class; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }

    pub fn validate(&self, num_classes: usize, num_groups: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidPrediction {
            id: self.sample_id,
            reason,
        };
        if self.probs.len() != num_classes || num_classes < 2 {
            return Err(bad(format!(
                "expected {num_classes} class probabilities, got {}",
                self.probs.len()
            )));
        }
        if self
            .probs
            .iter()
            .any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
        {
            return Err(bad("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad(format!("probabilities sum to {total}")));
        }
        if self.label >= num_classes {
            return Err(bad(format!("label {} out of range", self.label)));
        }
        if self.group >= num_groups {
            return Err(bad(format!("group {} out of range", self.group)));
        }
        Ok(())
    }
}

/// Evaluation summary. Percent-valued fields (`mean_psd`, `max_psd`) are in
/// percent; AUCs and rate gaps are fractions in `[0, 1]`. `None` marks a
/// metric that is undefined for this evaluation set; `flags` says why.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricsReport {
    pub overall_auc: Option<f64>,
    pub group_auc: Vec<Option<f64>>,
    pub mean_psd: Option<f64>,
    pub max_psd: Option<f64>,
    pub dpd: Option<f64>,
    pub deo: Option<f64>,
    pub deodds: Option<f64>,
    pub threshold_used: f64,
    pub flags: Vec<String>,
}

impl MetricsReport {
    /// Column order shared by the flat JSON object and the CSV row.
    pub fn columns(num_groups: usize) -> Vec<String> {
        let mut cols = vec!["overall_auc".to_string()];
        cols.extend((0..num_groups).map(|g| format!("auc_g{g}")));
        cols.extend(
            [
                "mean_psd",
                "max_psd",
                "dpd",
                "deo",
                "deodds",
                "threshold",
                "flags",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        cols
    }

    /// Metric values in column order, without `threshold` and `flags`.
    pub fn metric_values(&self) -> Vec<(String, Option<f64>)> {
        let mut out = vec![("overall_auc".to_string(), self.overall_auc)];
        out.extend(
            self.group_auc
                .iter()
                .enumerate()
                .map(|(g, v)| (format!("auc_g{g}"), *v)),
        );
        out.push(("mean_psd".into(), self.mean_psd));
        out.push(("max_psd".into(), self.max_psd));
        out.push(("dpd".into(), self.dpd));
        out.push(("deo".into(), self.deo));
        out.push(("deodds".into(), self.deodds));
        out
    }

    /// Flat JSON object: one key per column, `null` for undefined metrics.
    pub fn to_flat_json(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in self.metric_values() {
            map.insert(k, v.map_or(Value::Null, Value::from));
        }
        map.insert("threshold".into(), Value::from(self.threshold_used));
        map.insert(
            "flags".into(),
            Value::Array(self.flags.iter().cloned().map(Value::from).collect()),
        );
        Value::Object(map)
    }

    pub fn from_flat_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidConfig("metrics report must be a JSON object".into()))?;
        let num = |key: &str| obj.get(key).and_then(Value::as_f64);
        let mut group_auc = Vec::new();
        while let Some(v) = obj.get(&format!("auc_g{}", group_auc.len())) {
            group_auc.push(v.as_f64());
        }
        Ok(Self {
            overall_auc: num("overall_auc"),
            group_auc,
            mean_psd: num("mean_psd"),
            max_psd: num("max_psd"),
            dpd: num("dpd"),
            deo: num("deo"),
            deodds: num("deodds"),
            threshold_used: num("threshold").unwrap_or(f64::NAN),
            flags: obj
                .get("flags")
                .and_then(Value::as_array)
                .map(|a| {
                    a.iter()
                        .filter_map(|f| f.as_str().map(str::to_string))
                        .collect()
                })
                .unwrap_or_default(),
        })
    }

    pub fn csv_header(&self) -> String {
        Self::columns(self.group_auc.len()).join(",")
    }

    /// One CSV row; undefined metrics are empty cells, flags are `;`-joined.
    pub fn csv_row(&self) -> String {
        let mut cells: Vec<String> = self
            .metric_values()
            .into_iter()
            .map(|(_, v)| v.map(|x| x.to_string()).unwrap_or_default())
            .collect();
        cells.push(self.threshold_used.to_string());
        cells.push(self.flags.join(";").replace(',', " "));
        cells.join(",")
    }
}

impl Serialize for MetricsReport {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_flat_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetricsReport {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Self::from_flat_json(&value).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let samples = (0..n)
            .map(|i| Sample {
                id: i as u64,
                features: vec![i as f64],
                label: i % 2,
                group: i % 3,
            })
            .collect();
        Dataset::with_indexed_names(samples, 2, 3).unwrap()
    }

    fn ids(ds: &Dataset) -> Vec<u64> {
        ds.samples().iter().map(|s| s.id).collect()
    }

    #[test]
    fn split_sizes_match_reported_protocol() {
        let f = SplitFractions::default();
        assert_eq!(f.sizes(10_000), (6000, 1000, 3000));
        assert_eq!(f.sizes(10), (6, 1, 3));
        // 0.1 * 7 = 0.7 -> 0, 0.3 * 7 = 2.1 -> 2, remainder to train.
        assert_eq!(f.sizes(7), (5, 0, 2));
    }

    #[test]
    fn split_is_a_partition() {
        let ds = toy(10_000);
        let (tr, va, te) = split_dataset(&ds, SplitFractions::default(), 3).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (6000, 1000, 3000));
        let mut all: Vec<u64> = [ids(&tr), ids(&va), ids(&te)].concat();
        all.sort_unstable();
        assert_eq!(all, ids(&ds));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let ds = toy(10);
        let a = split_dataset(&ds, SplitFractions::default(), 11).unwrap();
        let b = split_dataset(&ds, SplitFractions::default(), 11).unwrap();
        assert_eq!(ids(&a.0), ids(&b.0));
        assert_eq!(ids(&a.2), ids(&b.2));
        let c = split_dataset(&ds, SplitFractions::default(), 12).unwrap();
        assert!(ids(&a.0) != ids(&c.0) || ids(&a.1) != ids(&c.1) || ids(&a.2) != ids(&c.2));
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = toy(10);
        let bad = SplitFractions {
            train: 0.6,
            val: 0.1,
            test: 0.2,
        };
        assert!(matches!(
            split_dataset(&ds, bad, 0),
            Err(Error::InvalidFractions(_))
        ));
        let neg = SplitFractions {
            train: 1.1,
            val: -0.1,
            test: 0.0,
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn dataset_rejects_invariant_violations() {
        let s = |id, f: Vec<f64>, label, group| Sample {
            id,
            features: f,
            label,
            group,
        };
        assert!(matches!(
            Dataset::with_indexed_names(vec![], 2, 1),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::with_indexed_names(vec![s(0, vec![1.0], 0, 0), s(0, vec![2.0], 1, 0)], 2, 1),
            Err(Error::DuplicateId(0))
        ));
        assert!(matches!(
            Dataset::with_indexed_names(
                vec![s(0, vec![1.0], 0, 0), s(1, vec![2.0, 3.0], 1, 0)],
                2,
                1
            ),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Dataset::with_indexed_names(vec![s(0, vec![1.0], 2, 0)], 2, 1),
            Err(Error::InvalidLabel { .. })
        ));
        assert!(matches!(
            Dataset::with_indexed_names(vec![s(0, vec![1.0], 0, 0)], 2, 2),
            Err(Error::EmptyGroup(1))
        ));
    }

    #[test]
    fn prediction_validation() {
        assert!(ScoredPrediction::binary(0, 0.3, 1, 0)
            .validate(2, 1)
            .is_ok());
        assert!(ScoredPrediction::binary(0, 1.3, 1, 0)
            .validate(2, 1)
            .is_err());
        let p = ScoredPrediction {
            sample_id: 1,
            probs: vec![0.2, 0.3, 0.4],
            label: 0,
            group: 0,
        };
        assert!(p.validate(3, 1).is_err());
        assert_eq!(p.argmax(), 2);
    }

    #[test]
    fn report_flat_json_round_trip() {
        let r = MetricsReport {
            overall_auc: Some(0.8),
            group_auc: vec![Some(0.9), None],
            mean_psd: Some(1.5),
            max_psd: None,
            dpd: Some(0.1),
            deo: Some(0.0),
            deodds: None,
            threshold_used: 0.5,
            flags: vec!["auc_undefined:g1".into()],
        };
        let back = MetricsReport::from_flat_json(&r.to_flat_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            r.csv_header(),
            "overall_auc,auc_g0,auc_g1,mean_psd,max_psd,dpd,deo,deodds,threshold,flags"
        );
        assert_eq!(r.csv_row(), "0.8,0.9,,1.5,,0.1,0,,0.5,auc_undefined:g1");
    }
}
