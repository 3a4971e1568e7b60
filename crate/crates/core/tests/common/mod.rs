//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use l1o_core::dtree::{DecisionTree, TreeNode};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central-difference derivative of `f` with respect to every entry of `w`.
pub fn numeric_gradient(w: &Array2<f64>, h: f64, mut f: impl FnMut(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut grad = Array2::zeros(w.raw_dim());
    let mut probe = w.clone();
    for idx in 0..w.len() {
        let (i, j) = (idx / w.ncols(), idx % w.ncols());
        let orig = probe[[i, j]];
        probe[[i, j]] = orig + h;
        let up = f(&probe);
        probe[[i, j]] = orig - h;
        let down = f(&probe);
        probe[[i, j]] = orig;
        grad[[i, j]] = (up - down) / (2.0 * h);
    }
    grad
}

/// Largest entrywise `|a − b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(a: &Array2<f64>, b: &Array2<f64>, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
}

/// Gini impurity of a class histogram.
fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|&c| (c as f64 / n as f64).powi(2)).sum::<f64>()
}

/// Minimum weighted child impurity over every admissible axis split of the
/// rows, found by trying every observed value as a `<=` cut point.
pub fn exhaustive_min_impurity(
    x: ArrayView2<f64>,
    y: &[usize],
    rows: &[usize],
    n_classes: usize,
    min_leaf: usize,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in 0..x.ncols() {
        for &cut_row in rows {
            let cut = x[[cut_row, f]];
            let mut left = vec![0; n_classes];
            let mut right = vec![0; n_classes];
            for &r in rows {
                if x[[r, f]] <= cut {
                    left[y[r]] += 1;
                } else {
                    right[y[r]] += 1;
                }
            }
            let (nl, nr): (usize, usize) = (left.iter().sum(), right.iter().sum());
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let imp = (nl as f64 * gini(&left) + nr as f64 * gini(&right)) / (nl + nr) as f64;
            best = Some(best.map_or(imp, |b: f64| b.min(imp)));
        }
    }
    best
}

/// Number of split nodes passed by `row`, walking child links directly.
pub fn path_length(tree: &DecisionTree, row: ArrayView1<f64>) -> usize {
    let mut node = 0;
    let mut steps = 0;
    loop {
        match &tree.nodes()[node] {
            TreeNode::Leaf { .. } => return steps,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                steps += 1;
                node = if row[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}

/// Mann–Whitney AUC by counting every positive/negative pair.
pub fn pair_count_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Random valid preorder tree over `n_features` features and `n_classes` classes.
pub fn random_tree(rng: &mut ChaCha8Rng, n_features: usize, n_classes: usize, max_depth: usize) -> DecisionTree {
    fn grow(rng: &mut ChaCha8Rng, nf: usize, nc: usize, depth: usize, out: &mut Vec<TreeNode>) -> usize {
        let slot = out.len();
        let counts: Vec<usize> = (0..nc).map(|_| rng.gen_range(0..5)).collect();
        if depth == 0 || rng.gen_bool(0.3) {
            out.push(TreeNode::Leaf {
                class_label: rng.gen_range(0..nc),
                class_counts: counts,
            });
            return slot;
        }
        out.push(TreeNode::Split {
            feature: rng.gen_range(0..nf),
            threshold: rng.gen_range(-1.0..1.0),
            left: 0,
            right: 0,
            class_counts: counts,
        });
        let l = grow(rng, nf, nc, depth - 1, out);
        let r = grow(rng, nf, nc, depth - 1, out);
        if let TreeNode::Split { left, right, .. } = &mut out[slot] {
            *left = l;
            *right = r;
        }
        slot
    }
    let mut nodes = Vec::new();
    grow(rng, n_features, n_classes, max_depth, &mut nodes);
    DecisionTree::from_nodes(nodes, n_features, n_classes).unwrap()
}

/// Reference fidelity: plain loop over paired predictions.
pub fn agreement_rate(a: &[usize], b: &[usize]) -> f64 {
    let same = (0..a.len()).filter(|&i| a[i] == b[i]).count();
    same as f64 / a.len() as f64
}
