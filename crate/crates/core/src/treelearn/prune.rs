use super::{majority, ForestModel, TreeNode};
use crate::dataset::LabeledRecord;
use crate::traceio::Priority;

/// Reduced-error pruning: bottom-up, a subtree becomes a leaf (majority of its training
/// counts) whenever that does not increase validation errors.
pub fn prune_tree(tree: &TreeNode, validation: &[LabeledRecord]) -> TreeNode {
    let tie = majority(tree.counts(), Priority::WF);
    let refs: Vec<&LabeledRecord> = validation.iter().collect();
    prune_node(tree, &refs, tie).0
}

pub fn prune_forest(forest: &ForestModel, validation: &[LabeledRecord]) -> ForestModel {
    ForestModel {
        trees: forest.trees.iter().map(|t| prune_tree(t, validation)).collect(),
        ..forest.clone()
    }
}

fn errors(label: Priority, val: &[&LabeledRecord]) -> usize {
    val.iter().filter(|r| r.label != label).count()
}

fn prune_node(node: &TreeNode, val: &[&LabeledRecord], tie: Priority) -> (TreeNode, usize) {
    match node {
        TreeNode::Leaf { label, .. } => (node.clone(), errors(*label, val)),
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let (lv, rv): (Vec<&LabeledRecord>, Vec<&LabeledRecord>) =
                val.iter().partition(|r| r.features[*feature] <= *threshold);
            let (l, le) = prune_node(left, &lv, tie);
            let (r, re) = prune_node(right, &rv, tie);
            let counts = node.counts();
            let label = majority(counts, tie);
            let leaf_errors = errors(label, val);
            if leaf_errors <= le + re {
                (TreeNode::leaf(label, counts), leaf_errors)
            } else {
                (TreeNode::internal(*feature, *threshold, l, r), le + re)
            }
        }
    }
}
