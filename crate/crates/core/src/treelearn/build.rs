use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::split::{best_split_on, Prepared, Split};
use super::{class_counts, majority, TreeNode};
use crate::dataset::{LabeledRecord, N_FEATURES};
use crate::rng::seeded;
use crate::traceio::Priority;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub min_igr: f64,
    /// Number of features drawn (without replacement) at each node; `None` uses all.
    pub feature_subset: Option<usize>,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_leaf: 20,
            min_igr: 1e-3,
            feature_subset: None,
            seed: 0,
        }
    }
}

pub fn build_tree(records: &[LabeledRecord], params: &TreeParams) -> TreeNode {
    let data = Prepared::new(records);
    let mut idx: Vec<usize> = (0..records.len()).collect();
    build_on(&data, &mut idx, params)
}

/// Grows a tree over rows `idx` (duplicates allowed) of a prepared training set.
pub(crate) fn build_on(data: &Prepared, idx: &mut [usize], params: &TreeParams) -> TreeNode {
    let mut totals = [0u64; 2];
    for &i in idx.iter() {
        totals[data.labels[i]] += 1;
    }
    let mut grower = Grower {
        data,
        params,
        rng: seeded(params.seed),
        tie: majority(totals, Priority::WF),
    };
    grower.grow(idx, 0)
}

struct Grower<'a> {
    data: &'a Prepared,
    params: &'a TreeParams,
    rng: ChaCha8Rng,
    tie: Priority,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> TreeNode {
        let mut counts = [0u64; 2];
        for &i in idx.iter() {
            counts[self.data.labels[i]] += 1;
        }
        let leaf = TreeNode::leaf(majority(counts, self.tie), counts);
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf.max(1) {
            return leaf;
        }
        let Some(split) = self.best_split(idx) else {
            return leaf;
        };
        if split.igr < self.params.min_igr {
            return leaf;
        }
        let values = &self.data.values[split.feature];
        let mut mid = 0;
        for k in 0..idx.len() {
            if values[idx[k]] <= split.threshold {
                idx.swap(k, mid);
                mid += 1;
            }
        }
        if mid == 0 || mid == idx.len() {
            return leaf;
        }
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        TreeNode::internal(split.feature, split.threshold, left, right)
    }

    /// With a feature subset, features are visited in a seeded random order: the first `k`
    /// are always evaluated, and further ones only until some feature admits a valid split.
    fn best_split(&mut self, idx: &[usize]) -> Option<Split> {
        let mut found: Vec<Split> = Vec::new();
        match self.params.feature_subset {
            Some(k) if k < N_FEATURES => {
                let mut order: Vec<usize> = (0..N_FEATURES).collect();
                order.shuffle(&mut self.rng);
                for (visited, f) in order.into_iter().enumerate() {
                    if visited >= k.max(1) && !found.is_empty() {
                        break;
                    }
                    found.extend(best_split_on(self.data, f, idx, self.params.min_leaf.max(1)));
                }
                found.sort_by_key(|s| s.feature);
            }
            _ => {
                for f in 0..N_FEATURES {
                    found.extend(best_split_on(self.data, f, idx, self.params.min_leaf.max(1)));
                }
            }
        }
        let mut best: Option<Split> = None;
        for s in found {
            if best.is_none_or(|b| s.igr > b.igr) {
                best = Some(s);
            }
        }
        best
    }
}

/// Majority class of a training set, WF on a tie.
pub(crate) fn global_majority(records: &[LabeledRecord]) -> Priority {
    majority(class_counts(records), Priority::WF)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(x: f64, label: Priority) -> LabeledRecord {
        let mut features = [0.0; N_FEATURES];
        features[0] = x;
        LabeledRecord { features, label }
    }

    #[test]
    fn pure_records_give_single_leaf() {
        let r: Vec<_> = (0..50).map(|i| rec(i as f64, Priority::WF)).collect();
        assert_eq!(build_tree(&r, &TreeParams::default()), TreeNode::leaf(Priority::WF, [50, 0]));
    }

    #[test]
    fn four_record_example() {
        use Priority::*;
        let r = vec![rec(1.0, WF), rec(2.0, WF), rec(3.0, LF), rec(4.0, LF)];
        let params = TreeParams {
            min_leaf: 1,
            ..TreeParams::default()
        };
        let t = build_tree(&r, &params);
        assert_eq!(
            t,
            TreeNode::internal(0, 2.5, TreeNode::leaf(WF, [2, 0]), TreeNode::leaf(LF, [0, 2]))
        );
        assert!(r.iter().all(|x| t.classify(&x.features) == x.label));
    }

    #[test]
    fn leaf_tie_uses_global_majority() {
        use Priority::*;
        let r = vec![rec(0.0, WF), rec(0.0, LF), rec(10.0, LF), rec(10.0, LF), rec(10.0, LF)];
        let t = build_tree(&r, &TreeParams { min_leaf: 1, ..TreeParams::default() });
        assert_eq!(
            t,
            TreeNode::internal(0, 5.0, TreeNode::leaf(LF, [1, 1]), TreeNode::leaf(LF, [0, 3]))
        );
    }

    #[test]
    fn max_depth_respected() {
        let r: Vec<_> = (0..400)
            .map(|i| rec(i as f64, Priority::from_index((i / 7) % 2)))
            .collect();
        for d in 0..5 {
            let t = build_tree(&r, &TreeParams { max_depth: d, min_leaf: 1, ..TreeParams::default() });
            assert!(t.depth() <= d);
        }
    }
}
