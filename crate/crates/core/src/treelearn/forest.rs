use rand::Rng;
use rayon::prelude::*;

use super::build::{build_on, global_majority, TreeParams};
use super::prune::prune_tree;
use super::split::Prepared;
use super::{Model, TreeError, TreeNode};
use crate::dataset::{LabeledRecord, N_FEATURES};
use crate::rng::{derive_seed, seeded};
use crate::traceio::Priority;

/// Features drawn per node in forests: `ceil(sqrt(12))`.
pub const FOREST_FEATURE_SUBSET: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_trees: usize,
    pub seed: u64,
    pub global_majority: Priority,
}

impl ForestModel {
    pub fn classify(&self, features: &[f64; N_FEATURES]) -> Priority {
        let mut votes = [0usize; 2];
        for t in &self.trees {
            votes[t.classify(features).index()] += 1;
        }
        super::majority([votes[0] as u64, votes[1] as u64], self.global_majority)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Per-tree parameters; each tree's seed is replaced by `seed + tree_index`.
    pub tree: TreeParams,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(n_trees: usize, seed: u64) -> ForestParams {
        ForestParams {
            n_trees,
            tree: TreeParams {
                feature_subset: Some(FOREST_FEATURE_SUBSET),
                ..TreeParams::default()
            },
            bootstrap: true,
            seed,
        }
    }
}

const BOOTSTRAP_TAG: u64 = 0xB007;

pub fn train_forest(records: &[LabeledRecord], params: &ForestParams) -> Result<ForestModel, TreeError> {
    if records.is_empty() {
        return Err(TreeError::Empty);
    }
    let n_trees = params.n_trees.max(1);
    let data = Prepared::new(records);
    let n = records.len();
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let tree_seed = params.seed.wrapping_add(i as u64);
            let mut idx: Vec<usize> = if params.bootstrap {
                let mut rng = seeded(derive_seed(tree_seed, BOOTSTRAP_TAG));
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let tp = TreeParams {
                seed: tree_seed,
                ..params.tree
            };
            build_on(&data, &mut idx, &tp)
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_trees,
        seed: params.seed,
        global_majority: global_majority(records),
    })
}

/// Settings for the model SmartPS serves at run time: a forest trained on most of the
/// available records and pruned against the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServingParams {
    pub forest: ForestParams,
    /// Fraction of records held out for pruning; 0 disables pruning.
    pub validation_fraction: f64,
}

impl Default for ServingParams {
    fn default() -> Self {
        ServingParams {
            forest: ForestParams::new(50, 0),
            validation_fraction: 0.2,
        }
    }
}

pub fn train_serving_model(records: &[LabeledRecord], params: &ServingParams) -> Result<Model, TreeError> {
    if records.is_empty() {
        return Err(TreeError::Empty);
    }
    let n_val = (records.len() as f64 * params.validation_fraction).floor() as usize;
    if n_val == 0 || n_val >= records.len() {
        return train_forest(records, &params.forest).map(Model::Forest);
    }
    // Every k-th record is held out so the split is deterministic and spread over time.
    let stride = records.len() / n_val;
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (i, r) in records.iter().enumerate() {
        if i % stride == stride - 1 && val.len() < n_val {
            val.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    let mut forest = train_forest(&train, &params.forest)?;
    forest.trees = forest.trees.iter().map(|t| prune_tree(t, &val)).collect();
    Ok(Model::Forest(forest))
}
