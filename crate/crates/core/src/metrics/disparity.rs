//! Threshold-based group disparities: DPD, DEO and DEOdds.
//!
//! Each is the max − min spread of a per-group rate. Multiclass sets are
//! scored one-vs-rest on argmax predictions and macro-averaged over classes.

use super::{Binarized, EvalSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
    fn positives(&self) -> usize {
        self.tp + self.fn_
    }
    fn negatives(&self) -> usize {
        self.fp + self.tn
    }
    fn selection_rate(&self) -> f64 {
        (self.tp + self.fp) as f64 / self.total() as f64
    }
    fn tpr(&self) -> f64 {
        self.tp as f64 / self.positives() as f64
    }
    fn fpr(&self) -> f64 {
        self.fp as f64 / self.negatives() as f64
    }
}

pub(crate) fn confusion_by_group(
    b: &Binarized,
    groups: &[usize],
    num_groups: usize,
) -> Vec<Confusion> {
    let mut out = vec![Confusion::default(); num_groups];
    for ((&truth, &pred), &g) in b.truth.iter().zip(&b.predicted).zip(groups) {
        let c = &mut out[g];
        match (truth, pred) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    out
}

/// `max - min`; zero for a single value.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        0.0
    } else {
        max - min
    }
}

fn macro_average(eval: &EvalSet, per_class: impl Fn(&[Confusion]) -> Result<f64>) -> Result<f64> {
    let groups = eval.groups();
    let bins = eval.binarized();
    let mut total = 0.0;
    for b in &bins {
        total += per_class(&confusion_by_group(b, &groups, eval.num_groups()))?;
    }
    Ok(total / bins.len() as f64)
}

/// Demographic parity difference: spread of `P(ŷ = 1 | group)`.
pub fn dpd(eval: &EvalSet) -> Result<f64> {
    macro_average(eval, |table| {
        let mut rates = Vec::with_capacity(table.len());
        for (g, c) in table.iter().enumerate() {
            if c.total() == 0 {
                return Err(Error::EmptyGroup(g));
            }
            rates.push(c.selection_rate());
        }
        Ok(spread(&rates))
    })
}

/// Difference in equal opportunity: spread of per-group true positive rates.
pub fn deo(eval: &EvalSet) -> Result<f64> {
    macro_average(eval, |table| {
        let mut rates = Vec::with_capacity(table.len());
        for (g, c) in table.iter().enumerate() {
            if c.positives() == 0 {
                return Err(Error::UndefinedGroup {
                    group: g,
                    reason: "no positive labels",
                });
            }
            rates.push(c.tpr());
        }
        Ok(spread(&rates))
    })
}

/// Difference in equalized odds: the larger of the TPR spread and FPR spread.
pub fn deodds(eval: &EvalSet) -> Result<f64> {
    macro_average(eval, |table| {
        let mut tprs = Vec::with_capacity(table.len());
        let mut fprs = Vec::with_capacity(table.len());
        for (g, c) in table.iter().enumerate() {
            if c.positives() == 0 || c.negatives() == 0 {
                return Err(Error::UndefinedGroup {
                    group: g,
                    reason: "needs both positive and negative labels",
                });
            }
            tprs.push(c.tpr());
            fprs.push(c.fpr());
        }
        Ok(spread(&tprs).max(spread(&fprs)))
    })
}
