use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ForestModel, Model, TreeError, TreeNode};
use crate::dataset::{LabeledRecord, N_FEATURES};
use crate::rng::seeded;
use crate::traceio::Priority;

/// Anything that maps a feature vector to a priority.
pub trait Classifier {
    fn classify(&self, features: &[f64; N_FEATURES]) -> Priority;
}

impl Classifier for TreeNode {
    fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        TreeNode::classify(self, features)
    }
}

impl Classifier for ForestModel {
    fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        ForestModel::classify(self, features)
    }
}

impl Classifier for Model {
    fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        Model::classify(self, features)
    }
}

impl<F: Fn(&[f64; N_FEATURES]) -> Priority> Classifier for F {
    fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        self(features)
    }
}

/// Binary classification metrics with WF as the positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl EvalMetrics {
    pub fn from_confusion(tp: u64, fp: u64, fn_: u64, tn: u64) -> EvalMetrics {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        EvalMetrics {
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            precision,
            recall,
            f1: f1_of(precision, recall),
        }
    }

    pub fn evaluate<C: Classifier + ?Sized>(model: &C, records: &[LabeledRecord]) -> EvalMetrics {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for r in records {
            match (model.classify(&r.features), r.label) {
                (Priority::WF, Priority::WF) => tp += 1,
                (Priority::WF, Priority::LF) => fp += 1,
                (Priority::LF, Priority::WF) => fn_ += 1,
                (Priority::LF, Priority::LF) => tn += 1,
            }
        }
        EvalMetrics::from_confusion(tp, fp, fn_, tn)
    }

    /// Mean accuracy, precision and recall over folds; F1 is recomputed from the means.
    pub fn mean(folds: &[EvalMetrics]) -> EvalMetrics {
        let n = folds.len().max(1) as f64;
        let avg = |g: fn(&EvalMetrics) -> f64| folds.iter().map(g).sum::<f64>() / n;
        let precision = avg(|m| m.precision);
        let recall = avg(|m| m.recall);
        EvalMetrics {
            accuracy: avg(|m| m.accuracy),
            precision,
            recall,
            f1: f1_of(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFoldReport {
    pub folds: Vec<EvalMetrics>,
    pub mean: EvalMetrics,
}

/// Stratified, seeded k-fold cross-validation. `learner` is trained on k-1 folds and scored
/// on the remaining one.
pub fn kfold_evaluate<C, L>(records: &[LabeledRecord], learner: L, k: usize, seed: u64) -> Result<KFoldReport, TreeError>
where
    C: Classifier,
    L: Fn(&[LabeledRecord]) -> C + Sync,
{
    if k < 2 {
        return Err(TreeError::Folds(k));
    }
    let mut fold_of = vec![0usize; records.len()];
    let mut rng = seeded(seed);
    for class in [Priority::WF, Priority::LF] {
        let mut members: Vec<usize> = (0..records.len()).filter(|&i| records[i].label == class).collect();
        if members.len() < k {
            return Err(TreeError::ClassTooSmall {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    let folds: Vec<EvalMetrics> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let split = |in_fold: bool| -> Vec<LabeledRecord> {
                records
                    .iter()
                    .zip(&fold_of)
                    .filter(|(_, &f)| (f == fold) == in_fold)
                    .map(|(r, _)| r.clone())
                    .collect()
            };
            let (train, test) = (split(false), split(true));
            let model = learner(&train);
            EvalMetrics::evaluate(&model, &test)
        })
        .collect();
    let mean = EvalMetrics::mean(&folds);
    Ok(KFoldReport { folds, mean })
}
