//! Performance and fairness metrics over scored predictions.

mod auc;
mod disparity;
mod psd;

pub use auc::auc;
pub use disparity::{deo, deodds, dpd, spread};
pub use psd::{max_psd, mean_psd};

use crate::error::{Error, Result};
use crate::types::{MetricsReport, ScoredPrediction};

/// Flag attached to multiclass reports.
pub const MULTICLASS_FLAG: &str = "multiclass:macro_one_vs_rest";

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSet {
    predictions: Vec<ScoredPrediction>,
    num_classes: usize,
    num_groups: usize,
    threshold: f64,
}

/// One binary view of an evaluation set: the whole set for K = 2, or one
/// class against the rest for K > 2.
pub(crate) struct Binarized {
    pub truth: Vec<bool>,
    pub predicted: Vec<bool>,
    pub score: Vec<f64>,
}

impl EvalSet {
    /// `threshold` binarizes the positive-class probability (`score >=
    /// threshold` predicts positive). It is ignored for K > 2, where argmax
    /// decides.
    pub fn new(
        predictions: Vec<ScoredPrediction>,
        num_classes: usize,
        num_groups: usize,
        threshold: f64,
    ) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        for p in &predictions {
            p.validate(num_classes, num_groups)?;
        }
        Ok(Self {
            predictions,
            num_classes,
            num_groups,
            threshold,
        })
    }

    pub fn predictions(&self) -> &[ScoredPrediction] {
        &self.predictions
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_multiclass(&self) -> bool {
        self.num_classes > 2
    }

    pub(crate) fn groups(&self) -> Vec<usize> {
        self.predictions.iter().map(|p| p.group).collect()
    }

    pub(crate) fn binarized(&self) -> Vec<Binarized> {
        binarize(&self.predictions, self.num_classes, self.threshold)
    }
}

fn binarize(preds: &[ScoredPrediction], num_classes: usize, threshold: f64) -> Vec<Binarized> {
    if num_classes == 2 {
        return vec![Binarized {
            truth: preds.iter().map(|p| p.label == 1).collect(),
            predicted: preds.iter().map(|p| p.score() >= threshold).collect(),
            score: preds.iter().map(|p| p.score()).collect(),
        }];
    }
    (0..num_classes)
        .map(|k| Binarized {
            truth: preds.iter().map(|p| p.label == k).collect(),
            predicted: preds.iter().map(|p| p.argmax() == k).collect(),
            score: preds.iter().map(|p| p.probs[k]).collect(),
        })
        .collect()
}

/// Binary AUC, or the unweighted mean of the defined one-vs-rest AUCs.
fn macro_auc(preds: &[ScoredPrediction], num_classes: usize, threshold: f64) -> Result<f64> {
    let per_class: Vec<f64> = binarize(preds, num_classes, threshold)
        .iter()
        .filter_map(|b| auc(&b.score, &b.truth).ok())
        .collect();
    if per_class.is_empty() {
        return Err(Error::UndefinedAuc);
    }
    Ok(per_class.iter().sum::<f64>() / per_class.len() as f64)
}

pub fn overall_auc(eval: &EvalSet) -> Result<f64> {
    macro_auc(&eval.predictions, eval.num_classes, eval.threshold)
}

/// AUC within each group; `None` where the group's labels are degenerate.
pub fn group_auc(eval: &EvalSet) -> Vec<Option<f64>> {
    (0..eval.num_groups)
        .map(|g| {
            let subset: Vec<ScoredPrediction> = eval
                .predictions
                .iter()
                .filter(|p| p.group == g)
                .cloned()
                .collect();
            macro_auc(&subset, eval.num_classes, eval.threshold).ok()
        })
        .collect()
}

/// Every metric in one report. Component failures become `None` plus a flag.
pub fn full_report(eval: &EvalSet) -> MetricsReport {
    let mut flags = Vec::new();
    if eval.is_multiclass() {
        flags.push(MULTICLASS_FLAG.to_string());
    }

    let overall = overall_auc(eval).ok();
    if overall.is_none() {
        flags.push("overall_auc_undefined".into());
    }

    let group = group_auc(eval);
    let mut defined = Vec::new();
    for (g, v) in group.iter().enumerate() {
        match v {
            Some(x) => defined.push(*x),
            None => flags.push(format!("group_auc_undefined:g{g}")),
        }
    }
    if defined.len() < group.len() && defined.len() >= 2 {
        flags.push("psd_excludes_undefined_groups".into());
    }

    let (mean, max) = match overall {
        Some(o) => (mean_psd(&defined, o), max_psd(&defined, o)),
        None => (Err(Error::UndefinedAuc), Err(Error::UndefinedAuc)),
    };
    let mut keep = |name: &str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            flags.push(format!("{name}_undefined:{}", e.kind()));
            None
        }
    };
    let mean_psd = keep("mean_psd", mean);
    let max_psd = keep("max_psd", max);
    let dpd = keep("dpd", dpd(eval));
    let deo = keep("deo", deo(eval));
    let deodds = keep("deodds", deodds(eval));

    MetricsReport {
        overall_auc: overall,
        group_auc: group,
        mean_psd,
        max_psd,
        dpd,
        deo,
        deodds,
        threshold_used: eval.threshold,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symmetric_set() -> EvalSet {
        let rows = [(0.9, 1), (0.7, 0), (0.6, 1), (0.2, 0), (0.4, 1), (0.1, 0)];
        let mut preds = Vec::new();
        for g in 0..2 {
            for (i, &(s, y)) in rows.iter().enumerate() {
                preds.push(ScoredPrediction::binary((g * 10 + i) as u64, s, y, g));
            }
        }
        EvalSet::new(preds, 2, 2, 0.5).unwrap()
    }

    #[test]
    fn symmetric_report_has_no_disparity() {
        let r = full_report(&symmetric_set());
        assert_eq!(r.group_auc[0], r.group_auc[1]);
        assert_eq!(r.dpd, Some(0.0));
        assert_eq!(r.deo, Some(0.0));
        assert_eq!(r.deodds, Some(0.0));
        assert_eq!(r.mean_psd, Some(0.0));
        assert_eq!(r.max_psd, Some(0.0));
        assert!(r.flags.is_empty());
    }

    #[test]
    fn single_group_matches_overall() {
        let preds: Vec<_> = [(0.3, 1), (0.5, 0), (0.8, 1), (0.1, 0), (0.5, 1)]
            .iter()
            .enumerate()
            .map(|(i, &(s, y))| ScoredPrediction::binary(i as u64, s, y, 0))
            .collect();
        let e = EvalSet::new(preds, 2, 1, 0.5).unwrap();
        assert_eq!(group_auc(&e)[0], Some(overall_auc(&e).unwrap()));
        let r = full_report(&e);
        assert_eq!(r.deo, Some(0.0));
        assert!(r.mean_psd.is_none());
        assert!(r.flags.iter().any(|f| f.starts_with("mean_psd_undefined")));
    }

    #[test]
    fn degenerate_group_is_flagged_not_fatal() {
        let mut preds = vec![
            ScoredPrediction::binary(0, 0.9, 1, 0),
            ScoredPrediction::binary(1, 0.2, 0, 0),
            ScoredPrediction::binary(2, 0.7, 1, 1),
            ScoredPrediction::binary(3, 0.6, 0, 1),
        ];
        // group 2 has only negatives
        preds.push(ScoredPrediction::binary(4, 0.3, 0, 2));
        let r = full_report(&EvalSet::new(preds, 2, 3, 0.5).unwrap());
        assert_eq!(r.group_auc[2], None);
        assert!(r.flags.contains(&"group_auc_undefined:g2".to_string()));
        assert!(r
            .flags
            .contains(&"psd_excludes_undefined_groups".to_string()));
        assert_eq!(r.max_psd, Some(0.0));
        assert!(r.deo.is_none());
        assert!(r.dpd.is_some());
    }

    #[test]
    fn multiclass_uses_macro_one_vs_rest() {
        let p = |id, probs: [f64; 3], label, group| ScoredPrediction {
            sample_id: id,
            probs: probs.to_vec(),
            label,
            group,
        };
        let preds = vec![
            p(0, [0.7, 0.2, 0.1], 0, 0),
            p(1, [0.2, 0.6, 0.2], 1, 0),
            p(2, [0.1, 0.3, 0.6], 2, 0),
            p(3, [0.5, 0.4, 0.1], 1, 1),
            p(4, [0.3, 0.3, 0.4], 0, 1),
            p(5, [0.2, 0.2, 0.6], 2, 1),
        ];
        let e = EvalSet::new(preds.clone(), 3, 2, 0.5).unwrap();
        let r = full_report(&e);
        assert!(r.flags.contains(&MULTICLASS_FLAG.to_string()));
        let manual: f64 = (0..3)
            .map(|k| {
                let s: Vec<f64> = preds.iter().map(|q| q.probs[k]).collect();
                let t: Vec<bool> = preds.iter().map(|q| q.label == k).collect();
                auc(&s, &t).unwrap()
            })
            .sum::<f64>()
            / 3.0;
        assert!((r.overall_auc.unwrap() - manual).abs() < 1e-15);
        // Group 0 is classified perfectly.
        assert_eq!(r.group_auc[0], Some(1.0));
    }

    #[test]
    fn eval_set_validation() {
        assert!(EvalSet::new(vec![], 2, 1, 0.5).is_err());
        let p = vec![ScoredPrediction::binary(0, 0.5, 1, 3)];
        assert!(EvalSet::new(p.clone(), 2, 2, 0.5).is_err());
        let ok = vec![ScoredPrediction::binary(0, 0.5, 1, 0)];
        assert!(EvalSet::new(ok, 2, 1, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn report_is_internally_consistent(
            rows in prop::collection::vec((0.0..1.0f64, 0..2usize, 0..3usize), 12..150)
        ) {
            let preds: Vec<_> = rows.iter().enumerate()
                .map(|(i, &(s, y, g))| ScoredPrediction::binary(i as u64, s, y, g))
                .collect();
            let e = EvalSet::new(preds, 2, 3, 0.5).unwrap();
            let r = full_report(&e);
            for v in [r.dpd, r.deo, r.deodds].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if let (Some(o), Some(m)) = (r.overall_auc, r.mean_psd) {
                let defined: Vec<f64> = r.group_auc.iter().flatten().copied().collect();
                prop_assert_eq!(m, mean_psd(&defined, o).unwrap());
                prop_assert_eq!(r.max_psd.unwrap(), max_psd(&defined, o).unwrap());
                prop_assert!(m >= 0.0);
            }
        }
    }
}
