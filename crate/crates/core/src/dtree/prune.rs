use ndarray::ArrayView2;

use super::{majority_class, DecisionTree, TreeNode};
use crate::error::{Error, Result};

/// Reduced-error pruning.
///
/// Split nodes are visited deepest first (preorder among equal depths). A node
/// is replaced by a leaf predicting the majority class of its training rows
/// whenever that does not lower accuracy against `y_val` on the validation
/// rows. Passes repeat until nothing changes.
///
/// Accuracy is additive over the disjoint regions of a tree, so comparing the
/// correct counts inside the candidate subtree is equivalent to comparing the
/// accuracy of the whole tree.
pub(crate) fn prune_tree(tree: &DecisionTree, x_val: ArrayView2<f64>, y_val: &[usize]) -> Result<DecisionTree> {
    tree.check_width(&x_val)?;
    if x_val.nrows() == 0 {
        return Err(Error::Input("pruning needs a non-empty validation set".into()));
    }
    if x_val.nrows() != y_val.len() {
        return Err(Error::Shape(format!(
            "{} validation rows for {} targets",
            x_val.nrows(),
            y_val.len()
        )));
    }

    let nodes = tree.nodes();
    let n = nodes.len();
    if let Some(&bad) = y_val.iter().find(|&&c| c >= tree.n_classes()) {
        return Err(Error::Input(format!("validation target {bad} out of range")));
    }
    // validation target histogram per node, over the rows routed through it
    let mut reach = vec![vec![0usize; tree.n_classes()]; n];
    for (row, &target) in x_val.rows().into_iter().zip(y_val) {
        let mut idx = 0;
        loop {
            reach[idx][target] += 1;
            match &nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if row[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => break,
            }
        }
    }

    let depths = tree.node_depths();
    let mut order: Vec<usize> = (0..n).filter(|&i| !nodes[i].is_leaf()).collect();
    order.sort_by(|&a, &b| depths[b].cmp(&depths[a]).then(a.cmp(&b)));

    let mut as_leaf = vec![false; n];
    loop {
        let mut changed = false;
        for &i in &order {
            if as_leaf[i] || inside_collapsed(nodes, &as_leaf, i) {
                continue;
            }
            let as_is = subtree_correct(nodes, &as_leaf, &reach, i);
            let majority = majority_class(nodes[i].class_counts());
            let collapsed = reach[i][majority];
            if collapsed >= as_is {
                as_leaf[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(tree.rebuild(&as_leaf))
}

fn subtree_correct(nodes: &[TreeNode], as_leaf: &[bool], reach: &[Vec<usize>], i: usize) -> usize {
    match &nodes[i] {
        TreeNode::Split {
            left,
            right,
            class_counts,
            ..
        } => {
            if as_leaf[i] {
                reach[i][majority_class(class_counts)]
            } else {
                subtree_correct(nodes, as_leaf, reach, *left) + subtree_correct(nodes, as_leaf, reach, *right)
            }
        }
        TreeNode::Leaf { class_label, .. } => reach[i][*class_label],
    }
}

/// True when some proper ancestor of `i` is already collapsed.
fn inside_collapsed(nodes: &[TreeNode], as_leaf: &[bool], target: usize) -> bool {
    let mut idx = 0;
    while idx != target {
        if as_leaf[idx] {
            return true;
        }
        match &nodes[idx] {
            TreeNode::Split { left, right, .. } => {
                // preorder: the right subtree starts at `right`
                idx = if target < *right { *left } else { *right };
            }
            TreeNode::Leaf { .. } => return false,
        }
    }
    false
}
