use std::cmp::Ordering;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{majority_class, DecisionTree, TreeNode};
use crate::error::{Error, Result};

/// Growth controls for [`fit_tree`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DtParams {
    pub min_samples_leaf: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

impl Default for DtParams {
    fn default() -> Self {
        Self {
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

impl DtParams {
    pub fn new(min_samples_leaf: usize, max_depth: Option<usize>) -> Self {
        Self {
            min_samples_leaf,
            max_depth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be positive when set".into()));
        }
        Ok(())
    }
}

/// Weighted Gini impurity `(n_l·gini_l + n_r·gini_r) / n` of a two-way partition.
pub fn weighted_gini(left: &[usize], right: &[usize]) -> f64 {
    fn gini(counts: &[usize]) -> (f64, f64) {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return (0.0, 0.0);
        }
        let n = n as f64;
        (n, 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
    }
    let (nl, gl) = gini(left);
    let (nr, gr) = gini(right);
    (nl * gl + nr * gr) / (nl + nr)
}

/// Exact split score `Σc_l²/n_l + Σc_r²/n_r` kept as a fraction.
///
/// Weighted Gini equals `1 − score/n`, so a larger score is a better split.
/// Comparing fractions by cross-multiplication keeps tie-breaking exact.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(sq_left: u128, n_left: u128, sq_right: u128, n_right: u128) -> Self {
        Self {
            num: sq_left * n_right + sq_right * n_left,
            den: n_left * n_right,
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    // adjacent floats: keep `a` on the left
    if mid >= b {
        a
    } else {
        mid
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    n_classes: usize,
    params: &'a DtParams,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1;
        }
        counts
    }

    fn best_split(&self, rows: &[usize]) -> Option<Candidate> {
        let msl = self.params.min_samples_leaf;
        let n = rows.len();
        let mut best: Option<Candidate> = None;
        let mut order = rows.to_vec();
        for feature in 0..self.x.ncols() {
            let col = self.x.column(feature);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            let mut left = vec![0u128; self.n_classes];
            let mut right: Vec<u128> = self.counts(rows).into_iter().map(|c| c as u128).collect();
            let mut sq_left: u128 = 0;
            let mut sq_right: u128 = right.iter().map(|c| c * c).sum();
            for i in 0..n - 1 {
                let c = self.y[order[i]];
                // moving one row of class c: (k+1)² − k² = 2k + 1
                sq_left += 2 * left[c] + 1;
                left[c] += 1;
                sq_right -= 2 * right[c] - 1;
                right[c] -= 1;

                let n_left = i + 1;
                let n_right = n - n_left;
                let (a, b) = (col[order[i]], col[order[i + 1]]);
                if a == b || n_left < msl || n_right < msl {
                    continue;
                }
                let score = Score::new(sq_left, n_left as u128, sq_right, n_right as u128);
                // strict improvement keeps the lowest feature, then smallest threshold
                if best.is_none_or(|cand| score.cmp(&cand.score) == Ordering::Greater) {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(a, b),
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.counts(rows);
        let slot = self.nodes.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        let too_small = rows.len() < 2 * self.params.min_samples_leaf;
        let split = if pure || depth_capped || too_small {
            None
        } else {
            self.best_split(rows)
        };
        let Some(split) = split else {
            self.nodes.push(TreeNode::Leaf {
                class_label: majority_class(&counts),
                class_counts: counts,
            });
            return slot;
        };
        self.nodes.push(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
            class_counts: counts,
        });
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, split.feature]] <= split.threshold);
        let l = self.grow(&left_rows, depth + 1);
        let r = self.grow(&right_rows, depth + 1);
        if let TreeNode::Split { left, right, .. } = &mut self.nodes[slot] {
            *left = l;
            *right = r;
        }
        slot
    }
}

/// Greedy CART on Gini impurity.
///
/// At each node the (feature, threshold) pair with the lowest weighted child
/// impurity is chosen among midpoints between consecutive distinct values,
/// subject to both children keeping at least `min_samples_leaf` rows. Ties go
/// to the lowest feature index, then the smallest threshold. Growth stops at
/// pure nodes, at `max_depth`, or when no admissible split exists.
pub fn fit_tree(x: ArrayView2<f64>, y: &[usize], n_classes: usize, params: &DtParams) -> Result<DecisionTree> {
    params.validate()?;
    if x.nrows() == 0 || y.is_empty() {
        return Err(Error::Input("cannot fit a tree on an empty dataset".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", x.nrows(), y.len())));
    }
    if x.ncols() == 0 {
        return Err(Error::Input("dataset has no features".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("features contain non-finite values".into()));
    }
    let mut builder = Builder {
        x,
        y,
        n_classes,
        params,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..x.nrows()).collect();
    builder.grow(&rows, 0);
    DecisionTree::from_nodes(builder.nodes, x.ncols(), n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pure_data_gives_single_leaf() {
        let x = array![[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]];
        let t = fit_tree(x.view(), &[1, 1, 1], 2, &DtParams::default()).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(array![[9.0, 9.0]].view()).unwrap(), vec![1]);
    }

    #[test]
    fn one_dimensional_split_at_midpoint() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let t = fit_tree(x.view(), &[0, 0, 1, 1], 2, &DtParams::default()).unwrap();
        assert_eq!(t.n_nodes(), 3);
        match &t.nodes()[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert!(t.nodes()[1..].iter().all(|n| n.is_leaf()));
        assert_eq!(t.predict(array![[1.4], [1.6]].view()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ties_prefer_lowest_feature_then_smallest_threshold() {
        // both features separate identically; feature 0 must win
        let x = array![[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0]];
        let t = fit_tree(x.view(), &[0, 0, 1, 1], 2, &DtParams::default()).unwrap();
        assert!(matches!(t.nodes()[0], TreeNode::Split { feature: 0, .. }));

        // 0 1 0 1 ... symmetric candidates at 0.5 and 2.5 tie; the smaller wins
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let t = fit_tree(x.view(), &[0, 1, 1, 0], 2, &DtParams::new(1, Some(1))).unwrap();
        match &t.nodes()[0] {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 0.5),
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn leaf_and_depth_limits_hold() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]];
        let y = [0, 1, 0, 1, 0, 1];
        let t = fit_tree(x.view(), &y, 2, &DtParams::new(3, None)).unwrap();
        for node in t.nodes() {
            if node.is_leaf() {
                assert!(node.class_counts().iter().sum::<usize>() >= 3);
            }
        }
        let t = fit_tree(x.view(), &y, 2, &DtParams::new(1, Some(2))).unwrap();
        assert!(t.depth() <= 2);
    }

    #[test]
    fn memorizes_conflict_free_training_data() {
        let x = array![[0.1, 0.9], [0.4, 0.2], [0.5, 0.5], [0.9, 0.1], [0.3, 0.3], [0.7, 0.8]];
        let y = [0, 1, 2, 1, 0, 2];
        let t = fit_tree(x.view(), &y, 3, &DtParams::default()).unwrap();
        assert_eq!(t.predict(x.view()).unwrap(), y.to_vec());
    }

    #[test]
    fn rejects_invalid_inputs() {
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            fit_tree(empty.view(), &[], 2, &DtParams::default()),
            Err(Error::Input(_))
        ));
        let x = array![[0.0], [1.0]];
        assert!(fit_tree(x.view(), &[0, 2], 2, &DtParams::default()).is_err());
        assert!(fit_tree(x.view(), &[0, 1], 2, &DtParams::new(0, None)).is_err());
    }

    #[test]
    fn weighted_gini_hand_values() {
        assert_eq!(weighted_gini(&[2, 0], &[0, 2]), 0.0);
        // left {A, B}: 0.5, right {B}: 0 → (2·0.5 + 0)/3
        assert!((weighted_gini(&[1, 1], &[0, 1]) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn adjacent_float_midpoint_stays_left() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
    }
}
