//! Information-gain-ratio decision trees, bagged forests, reduced-error pruning, stratified
//! k-fold evaluation and a line-oriented model format.

mod build;
mod eval;
mod forest;
mod prune;
mod serial;
mod split;

use thiserror::Error;

use crate::dataset::{LabeledRecord, N_FEATURES};
use crate::traceio::Priority;

pub use self::build::{build_tree, TreeParams};
pub use self::eval::{kfold_evaluate, Classifier, EvalMetrics, KFoldReport};
pub use self::forest::{train_forest, train_serving_model, ForestModel, ForestParams, ServingParams};
pub use self::prune::{prune_forest, prune_tree};
pub use self::serial::{deserialize_model, serialize_model};
pub use self::split::{candidate_thresholds, igr, igr_from_counts, MAX_EXACT_DISTINCT};

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("feature vector has {0} values, expected {N_FEATURES}")]
    FeatureLength(usize),
    #[error("no training records")]
    Empty,
    #[error("class {class} has {count} records, fewer than the {k} folds")]
    ClassTooSmall { class: Priority, count: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    Folds(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Records with `features[feature] <= threshold` go left.
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    /// `counts` is `[wf, lf]` over the training records reaching the leaf.
    Leaf { label: Priority, counts: [u64; 2] },
}

impl TreeNode {
    pub fn leaf(label: Priority, counts: [u64; 2]) -> TreeNode {
        TreeNode::Leaf { label, counts }
    }

    pub fn internal(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> TreeNode {
        TreeNode::Internal {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Summed training counts of all leaves under this node.
    pub fn counts(&self) -> [u64; 2] {
        match self {
            TreeNode::Leaf { counts, .. } => *counts,
            TreeNode::Internal { left, right, .. } => {
                let (l, r) = (left.counts(), right.counts());
                [l[0] + r[0], l[1] + r[1]]
            }
        }
    }
}

/// Majority class of `counts`, with `tie` breaking equal counts.
pub fn majority(counts: [u64; 2], tie: Priority) -> Priority {
    use std::cmp::Ordering::*;
    match counts[0].cmp(&counts[1]) {
        Greater => Priority::WF,
        Less => Priority::LF,
        Equal => tie,
    }
}

pub fn class_counts(records: &[LabeledRecord]) -> [u64; 2] {
    let mut c = [0u64; 2];
    for r in records {
        c[r.label.index()] += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tree(TreeNode),
    Forest(ForestModel),
}

impl Model {
    pub fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        match self {
            Model::Tree(t) => t.classify(features),
            Model::Forest(f) => f.classify(features),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Model::Tree(t) => t.node_count(),
            Model::Forest(f) => f.trees.iter().map(TreeNode::node_count).sum(),
        }
    }
}

/// Checked prediction for feature vectors of unknown length.
pub fn predict(model: &Model, features: &[f64]) -> Result<Priority, TreeError> {
    let f: &[f64; N_FEATURES] = features
        .try_into()
        .map_err(|_| TreeError::FeatureLength(features.len()))?;
    Ok(model.classify(f))
}
