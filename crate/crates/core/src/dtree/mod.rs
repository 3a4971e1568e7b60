//! Binary CART classification trees.
//!
//! Trees are stored as a preorder arena: node 0 is the root and every split
//! node precedes its left subtree, which precedes its right subtree. A sample
//! goes left iff `x[feature] <= threshold`.

mod export;
mod fit;
mod prune;

pub use export::{format_threshold, TreeDocument, TREE_FORMAT, TREE_VERSION};
pub use fit::{fit_tree, weighted_gini, DtParams};

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Training class histogram of the rows reaching this node.
        class_counts: Vec<usize>,
    },
    Leaf {
        class_label: usize,
        class_counts: Vec<usize>,
    },
}

impl TreeNode {
    pub fn class_counts(&self) -> &[usize] {
        match self {
            TreeNode::Split { class_counts, .. } | TreeNode::Leaf { class_counts, .. } => class_counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// Index of the largest count; ties go to the lowest class.
pub fn majority_class(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    n_features: usize,
    n_classes: usize,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

pub fn default_feature_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

pub fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl DecisionTree {
    /// Build a tree from a preorder arena, checking its structure.
    pub fn from_nodes(nodes: Vec<TreeNode>, n_features: usize, n_classes: usize) -> Result<Self> {
        let tree = Self {
            nodes,
            n_features,
            n_classes,
            feature_names: default_feature_names(n_features),
            class_names: default_class_names(n_classes),
        };
        tree.validate()?;
        Ok(tree)
    }

    /// A one-node tree predicting `class_label` everywhere.
    pub fn constant(class_label: usize, class_counts: Vec<usize>, n_features: usize) -> Result<Self> {
        let n_classes = class_counts.len();
        Self::from_nodes(
            vec![TreeNode::Leaf {
                class_label,
                class_counts,
            }],
            n_features,
            n_classes,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Input("tree has no nodes".into()));
        }
        let mut next = 0usize;
        self.validate_from(0, &mut next)?;
        if next != self.nodes.len() {
            return Err(Error::Input(format!(
                "tree arena has {} nodes but only {next} are reachable in preorder",
                self.nodes.len()
            )));
        }
        Ok(())
    }

    fn validate_from(&self, idx: usize, next: &mut usize) -> Result<()> {
        if idx != *next || idx >= self.nodes.len() {
            return Err(Error::Input(format!("node {idx} is out of preorder position")));
        }
        *next += 1;
        let node = &self.nodes[idx];
        if node.class_counts().len() != self.n_classes {
            return Err(Error::Input(format!(
                "node {idx} has {} class counts, tree has {} classes",
                node.class_counts().len(),
                self.n_classes
            )));
        }
        match node {
            TreeNode::Leaf { class_label, .. } => {
                if *class_label >= self.n_classes {
                    return Err(Error::Input(format!("leaf {idx} predicts unknown class {class_label}")));
                }
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if *feature >= self.n_features || !threshold.is_finite() {
                    return Err(Error::Input(format!("node {idx} has an invalid test")));
                }
                self.validate_from(*left, next)?;
                self.validate_from(*right, next)?;
            }
        }
        Ok(())
    }

    pub fn with_names(mut self, feature_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        if feature_names.len() != self.n_features {
            return Err(Error::Input(format!(
                "{} feature names for {} features",
                feature_names.len(),
                self.n_features
            )));
        }
        if class_names.len() != self.n_classes {
            return Err(Error::Input(format!(
                "{} class names for {} classes",
                class_names.len(),
                self.n_classes
            )));
        }
        self.feature_names = feature_names;
        self.class_names = class_names;
        Ok(self)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Maximum number of split nodes on a root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn check_width(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.n_features {
            return Err(Error::Shape(format!(
                "input has {} columns, tree expects {}",
                x.ncols(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Leaf index reached by `row` and the number of split nodes passed.
    pub fn route(&self, row: ArrayView1<f64>) -> (usize, usize) {
        let mut idx = 0;
        let mut tests = 0;
        while let TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = &self.nodes[idx]
        {
            idx = if row[*feature] <= *threshold { *left } else { *right };
            tests += 1;
        }
        (idx, tests)
    }

    fn leaf_class(&self, leaf: usize) -> usize {
        match &self.nodes[leaf] {
            TreeNode::Leaf { class_label, .. } => *class_label,
            TreeNode::Split { .. } => unreachable!("route always ends at a leaf"),
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        self.check_width(&x)?;
        Ok(x.rows()
            .into_iter()
            .map(|row| self.leaf_class(self.route(row).0))
            .collect())
    }

    /// Leaf class frequencies, `N × n_classes`.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_width(&x)?;
        let mut out = Array2::zeros((x.nrows(), self.n_classes));
        for (i, row) in x.rows().into_iter().enumerate() {
            let leaf = self.route(row).0;
            let counts = self.nodes[leaf].class_counts();
            let total: usize = counts.iter().sum();
            for (c, &n) in counts.iter().enumerate() {
                out[[i, c]] = if total == 0 {
                    f64::from(u8::from(c == self.leaf_class(leaf)))
                } else {
                    n as f64 / total as f64
                };
            }
        }
        Ok(out)
    }

    /// Average path length: mean number of split nodes passed per row of `x`.
    pub fn apl(&self, x: ArrayView2<f64>) -> Result<f64> {
        self.check_width(&x)?;
        if x.nrows() == 0 {
            return Err(Error::Input("APL of an empty set is undefined".into()));
        }
        let total: usize = x.rows().into_iter().map(|row| self.route(row).1).sum();
        Ok(total as f64 / x.nrows() as f64)
    }

    /// Reduced-error pruning against validation targets; see [`prune::prune_tree`].
    pub fn prune(&self, x_val: ArrayView2<f64>, y_val: &[usize]) -> Result<DecisionTree> {
        prune::prune_tree(self, x_val, y_val)
    }

    /// Replace the subtree at `idx` by a leaf and compact the arena.
    pub fn collapse(&self, idx: usize) -> DecisionTree {
        let mut collapsed = vec![false; self.nodes.len()];
        collapsed[idx] = true;
        self.rebuild(&collapsed)
    }

    /// Copy of the tree with every node flagged in `as_leaf` turned into a majority leaf.
    pub(crate) fn rebuild(&self, as_leaf: &[bool]) -> DecisionTree {
        fn go(src: &DecisionTree, as_leaf: &[bool], i: usize, out: &mut Vec<TreeNode>) -> usize {
            let slot = out.len();
            match &src.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    class_counts,
                } if !as_leaf[i] => {
                    out.push(TreeNode::Split {
                        feature: *feature,
                        threshold: *threshold,
                        left: 0,
                        right: 0,
                        class_counts: class_counts.clone(),
                    });
                    let l = go(src, as_leaf, *left, out);
                    let r = go(src, as_leaf, *right, out);
                    if let TreeNode::Split { left, right, .. } = &mut out[slot] {
                        *left = l;
                        *right = r;
                    }
                }
                TreeNode::Split { class_counts, .. } => out.push(TreeNode::Leaf {
                    class_label: majority_class(class_counts),
                    class_counts: class_counts.clone(),
                }),
                leaf @ TreeNode::Leaf { .. } => out.push(leaf.clone()),
            }
            slot
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        go(self, as_leaf, 0, &mut nodes);
        DecisionTree { nodes, ..self.clone() }
    }

    /// Depth of every node (root = 0), indexed like [`nodes`](Self::nodes).
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = vec![0; self.nodes.len()];
        for i in 0..self.nodes.len() {
            if let TreeNode::Split { left, right, .. } = &self.nodes[i] {
                depths[*left] = depths[i] + 1;
                depths[*right] = depths[i] + 1;
            }
        }
        depths
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    pub(crate) fn one_split_tree() -> DecisionTree {
        DecisionTree::from_nodes(
            vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 1.5,
                    left: 1,
                    right: 2,
                    class_counts: vec![2, 2],
                },
                TreeNode::Leaf {
                    class_label: 0,
                    class_counts: vec![2, 0],
                },
                TreeNode::Leaf {
                    class_label: 1,
                    class_counts: vec![0, 2],
                },
            ],
            1,
            2,
        )
        .unwrap()
    }

    #[test]
    fn routing_and_predictions() {
        let t = one_split_tree();
        assert_eq!(t.predict(array![[1.4], [1.5], [1.6]].view()).unwrap(), vec![0, 0, 1]);
        assert!(matches!(t.predict(array![[1.0, 2.0]].view()), Err(Error::Shape(_))));
    }

    #[test]
    fn single_leaf_is_constant_with_zero_apl() {
        let t = DecisionTree::constant(1, vec![3, 5], 2).unwrap();
        let x = array![[0.0, 1.0], [-5.0, 9.0]];
        assert_eq!(t.predict(x.view()).unwrap(), vec![1, 1]);
        assert_eq!(t.apl(x.view()).unwrap(), 0.0);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn one_test_node_has_apl_one() {
        let t = one_split_tree();
        assert_eq!(t.apl(array![[0.0], [7.0], [1.5]].view()).unwrap(), 1.0);
        assert!(t.apl(Array2::zeros((0, 1)).view()).is_err());
    }

    #[test]
    fn malformed_arenas_rejected() {
        let bad_child = vec![
            TreeNode::Split {
                feature: 0,
                threshold: 0.0,
                left: 2,
                right: 1,
                class_counts: vec![1, 1],
            },
            TreeNode::Leaf {
                class_label: 0,
                class_counts: vec![1, 0],
            },
            TreeNode::Leaf {
                class_label: 1,
                class_counts: vec![0, 1],
            },
        ];
        assert!(DecisionTree::from_nodes(bad_child, 1, 2).is_err());
        let bad_feature = vec![TreeNode::Split {
            feature: 3,
            threshold: 0.0,
            left: 1,
            right: 2,
            class_counts: vec![1, 1],
        }];
        assert!(DecisionTree::from_nodes(bad_feature, 1, 2).is_err());
    }

    #[test]
    fn proba_uses_leaf_frequencies() {
        let t = DecisionTree::from_nodes(
            vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                    class_counts: vec![4, 4],
                },
                TreeNode::Leaf {
                    class_label: 0,
                    class_counts: vec![3, 1],
                },
                TreeNode::Leaf {
                    class_label: 1,
                    class_counts: vec![1, 3],
                },
            ],
            1,
            2,
        )
        .unwrap();
        let p = t.predict_proba(array![[-1.0], [1.0]].view()).unwrap();
        assert_eq!(p, array![[0.75, 0.25], [0.25, 0.75]]);
    }

    #[test]
    fn majority_ties_pick_lowest_class() {
        assert_eq!(majority_class(&[2, 5, 5]), 1);
        assert_eq!(majority_class(&[0, 0]), 0);
    }
}
