mod common;

use common::*;
use l1o_core::data::{generate_parabola_with, ParabolaConfig};
use l1o_core::dtree::{fit_tree, majority_class, DecisionTree, DtParams, TreeNode};
use l1o_core::metrics::{agreement, auc, binary_auc, unanimity, FidelityReport};
use l1o_core::nn::{accuracy, init_model, MlpArchitecture};
use l1o_core::regularizers::{l1_penalty, ldd_penalty, ortho_penalty_frobenius, ortho_penalty_l1, DEFAULT_LDD_JITTER};
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random orthogonal `n × n` matrix from the Q factor of a Gaussian-like draw.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    Array2::from_shape_fn((n, n), |(i, j)| q[(i, j)])
}

fn random_layers(rng: &mut ChaCha8Rng) -> Vec<Array2<f64>> {
    (0..rng.gen_range(1..=3))
        .map(|_| {
            let cols = rng.gen_range(1..=5);
            let rows = rng.gen_range(cols..=7);
            uniform_matrix(rng, rows, cols, 2.0)
        })
        .collect()
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, n_classes: usize) -> (Array2<f64>, Vec<usize>) {
    let x = Array2::from_shape_simple_fn((n, d), || (rng.gen_range(0..8) as f64) * 0.5);
    let y = (0..n).map(|_| rng.gen_range(0..n_classes)).collect();
    (x, y)
}

fn tree_accuracy(tree: &DecisionTree, x: ArrayView2<f64>, y: &[usize]) -> f64 {
    accuracy(&tree.predict(x).unwrap(), y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penalties_are_non_negative(seed in any::<u64>()) {
        let layers = random_layers(&mut rng(seed));
        prop_assert!(l1_penalty(&layers) >= 0.0);
        prop_assert!(ortho_penalty_l1(&layers) >= 0.0);
        prop_assert!(ortho_penalty_frobenius(&layers) >= 0.0);
        let ldd = ldd_penalty(&layers, DEFAULT_LDD_JITTER).unwrap().value;
        prop_assert!(ldd >= 0.0);
    }

    #[test]
    fn penalties_vanish_at_canonical_minimizers(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7) {
        let mut rng = rng(seed);
        prop_assert_eq!(l1_penalty(&[Array2::zeros((rows, cols))]), 0.0);
        let k = cols.min(rows);
        let q = random_orthogonal(&mut rng, rows);
        let w = q.slice(ndarray::s![.., ..k]).to_owned();
        prop_assert!(ortho_penalty_l1(std::slice::from_ref(&w)) < 1e-12);
        prop_assert!(ortho_penalty_frobenius(&[w]) < 1e-24);
    }

    #[test]
    fn l1_is_absolutely_homogeneous(seed in any::<u64>(), c in -10.0f64..10.0) {
        let layers = random_layers(&mut rng(seed));
        let scaled: Vec<Array2<f64>> = layers.iter().map(|w| w * c).collect();
        let expected = c.abs() * l1_penalty(&layers);
        prop_assert!((l1_penalty(&scaled) - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn orthogonality_penalties_ignore_left_rotations(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let cols = rng.gen_range(1..=5);
        let rows = rng.gen_range(1..=7);
        let w = uniform_matrix(&mut rng, rows, cols, 1.0);
        let rotated = random_orthogonal(&mut rng, rows).dot(&w);
        prop_assert!((ortho_penalty_l1(std::slice::from_ref(&w)) - ortho_penalty_l1(std::slice::from_ref(&rotated))).abs() < 1e-9);
        prop_assert!((ortho_penalty_frobenius(&[w]) - ortho_penalty_frobenius(&[rotated])).abs() < 1e-9);
    }

    #[test]
    fn softmax_rows_sum_to_one(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = rng(seed);
        let arch = MlpArchitecture::new(3, vec![rng.gen_range(1..=6)], rng.gen_range(3..=5)).unwrap();
        let model = init_model(&arch, rng.gen()).unwrap();
        let x = uniform_matrix(&mut rng, 12, 3, scale);
        let probs = model.predict_proba(x.view()).unwrap();
        for row in probs.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn apl_lies_between_zero_and_depth(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let tree = random_tree(&mut rng, 3, 2, 6);
        let x = uniform_matrix(&mut rng, 25, 3, 1.2);
        let apl = tree.apl(x.view()).unwrap();
        prop_assert!(apl >= 0.0 && apl <= tree.depth() as f64);
    }

    #[test]
    fn fitting_is_deterministic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (x, y) = random_dataset(&mut rng, 30, 3, 3);
        let params = DtParams::new(2, None);
        prop_assert_eq!(fit_tree(x.view(), &y, 3, &params).unwrap(), fit_tree(x.view(), &y, 3, &params).unwrap());
    }

    #[test]
    fn deeper_trees_fit_training_targets_at_least_as_well(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (x, y) = random_dataset(&mut rng, 40, 3, 3);
        let msl = rng.gen_range(1..=4);
        let full = fit_tree(x.view(), &y, 3, &DtParams::new(msl, None)).unwrap();
        let full_acc = tree_accuracy(&full, x.view(), &y);
        for depth in 1..=full.depth() {
            let capped = fit_tree(x.view(), &y, 3, &DtParams::new(msl, Some(depth))).unwrap();
            prop_assert!(full_acc >= tree_accuracy(&capped, x.view(), &y));
        }
    }

    #[test]
    fn pruning_never_hurts_validation_or_grows(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (x, y) = random_dataset(&mut rng, 40, 2, 2);
        let (xv, yv) = random_dataset(&mut rng, 15, 2, 2);
        let tree = fit_tree(x.view(), &y, 2, &DtParams::new(1, None)).unwrap();
        let pruned = tree.prune(xv.view(), &yv).unwrap();
        prop_assert!(tree_accuracy(&pruned, xv.view(), &yv) >= tree_accuracy(&tree, xv.view(), &yv));
        prop_assert!(pruned.n_nodes() <= tree.n_nodes());
    }

    #[test]
    fn exports_mirror_tree_structure(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let tree = random_tree(&mut rng, 2, 3, 5);
        let names = vec!["a".to_string(), "b".to_string()];
        let dot = tree.export_dot(&names).unwrap();
        prop_assert_eq!(dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count(), tree.n_nodes());
        prop_assert_eq!(dot.matches("->").count(), tree.n_nodes() - 1);
        let rules = tree.export_rules(&names).unwrap();
        prop_assert_eq!(rules.lines().count(), tree.n_leaves());
    }

    #[test]
    fn binary_auc_matches_pair_counting(seed in any::<u64>(), n in 2usize..=50) {
        let mut rng = rng(seed);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..10) as f64 / 10.0).collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        positive[0] = true;
        positive[1] = false;
        let got = binary_auc(&scores, &positive).unwrap();
        prop_assert!((got - pair_count_auc(&scores, &positive)).abs() < 1e-12);
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert!((binary_auc(&warped, &positive).unwrap() - got).abs() < 1e-12);
    }

    #[test]
    fn multiclass_auc_is_invariant_under_increasing_maps(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = 30;
        let scores = Array2::from_shape_simple_fn((n, 3), || rng.gen_range(0..20) as f64 / 20.0);
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let base = auc(scores.view(), &labels).unwrap();
        let warped = scores.mapv(|s| s.powi(3) + 2.0 * s);
        prop_assert!((auc(warped.view(), &labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn agreement_counts_matches(seed in any::<u64>(), n in 1usize..60) {
        let mut rng = rng(seed);
        let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let base = agreement(&a, &b).unwrap();
        prop_assert!((base - agreement_rate(&a, &b)).abs() < 1e-15);
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.push(1);
        b2.push(1);
        prop_assert!(agreement(&a2, &b2).unwrap() >= base);
    }

    #[test]
    fn consistency_shrinks_as_sessions_are_added(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let sessions: Vec<Vec<usize>> = (0..6)
            .map(|_| (0..40).map(|_| usize::from(rng.gen_bool(0.15))).collect())
            .collect();
        let values: Vec<f64> = (2..=sessions.len()).map(|s| unanimity(&sessions[..s]).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fidelity_report_summarizes_runs(runs in proptest::collection::vec(0.0f64..=1.0, 1..10)) {
        let r = FidelityReport::from_runs(runs.clone()).unwrap();
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        prop_assert!((r.mean - mean).abs() < 1e-12);
        prop_assert!(r.std >= 0.0);
    }
}

/// Whole-tree validation accuracy with the split nodes flagged in `as_leaf`
/// answering with their majority class.
fn masked_accuracy(tree: &DecisionTree, as_leaf: &[bool], x: &Array2<f64>, y: &[usize]) -> usize {
    let nodes = tree.nodes();
    (0..x.nrows())
        .filter(|&r| {
            let mut i = 0;
            let label = loop {
                match &nodes[i] {
                    TreeNode::Leaf { class_label, .. } => break *class_label,
                    TreeNode::Split { class_counts, .. } if as_leaf[i] => break majority_class(class_counts),
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => i = if x[[r, *feature]] <= *threshold { *left } else { *right },
                }
            };
            label == y[r]
        })
        .count()
}

fn inside_masked(tree: &DecisionTree, as_leaf: &[bool], target: usize) -> bool {
    fn search(tree: &DecisionTree, as_leaf: &[bool], i: usize, target: usize, masked: bool) -> bool {
        if i == target {
            return masked;
        }
        match &tree.nodes()[i] {
            TreeNode::Split { left, right, .. } => {
                let m = masked || as_leaf[i];
                search(tree, as_leaf, *left, target, m) || search(tree, as_leaf, *right, target, m)
            }
            TreeNode::Leaf { .. } => false,
        }
    }
    search(tree, as_leaf, 0, target, false)
}

/// Deepest-first reduced-error pruning judged by whole-tree accuracy.
fn greedy_prune_mask(tree: &DecisionTree, x: &Array2<f64>, y: &[usize]) -> Vec<bool> {
    let depths = tree.node_depths();
    let mut order: Vec<usize> = (0..tree.n_nodes()).filter(|&i| !tree.nodes()[i].is_leaf()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(depths[i]), i));
    let mut mask = vec![false; tree.n_nodes()];
    loop {
        let mut changed = false;
        for &i in &order {
            if mask[i] || inside_masked(tree, &mask, i) {
                continue;
            }
            let before = masked_accuracy(tree, &mask, x, y);
            mask[i] = true;
            if masked_accuracy(tree, &mask, x, y) >= before {
                changed = true;
            } else {
                mask[i] = false;
            }
        }
        if !changed {
            return mask;
        }
    }
}

#[test]
fn pruning_matches_greedy_replay_and_exhaustive_bound() {
    let mut rng = rng(77);
    let mut checked = 0;
    while checked < 150 {
        let tree = random_tree(&mut rng, 2, 2, 4);
        let internal: Vec<usize> = (0..tree.n_nodes()).filter(|&i| !tree.nodes()[i].is_leaf()).collect();
        if internal.is_empty() || internal.len() > 7 {
            continue;
        }
        checked += 1;
        let x = uniform_matrix(&mut rng, 20, 2, 1.2);
        let y: Vec<usize> = (0..20).map(|_| rng.gen_range(0..2)).collect();
        let pruned = tree.prune(x.view(), &y).unwrap();
        let got = masked_accuracy(&pruned, &vec![false; pruned.n_nodes()], &x, &y);

        let original = masked_accuracy(&tree, &vec![false; tree.n_nodes()], &x, &y);
        let best = (0u32..1 << internal.len())
            .map(|bits| {
                let mut mask = vec![false; tree.n_nodes()];
                for (k, &i) in internal.iter().enumerate() {
                    mask[i] = bits >> k & 1 == 1;
                }
                masked_accuracy(&tree, &mask, &x, &y)
            })
            .max()
            .unwrap();
        assert!(got >= original && got <= best);

        let replay = greedy_prune_mask(&tree, &x, &y);
        assert_eq!(got, masked_accuracy(&tree, &replay, &x, &y));
        let kept = (0..tree.n_nodes())
            .filter(|&i| !inside_masked(&tree, &replay, i))
            .count();
        assert_eq!(pruned.n_nodes(), kept);
        let probe = uniform_matrix(&mut rng, 50, 2, 1.5);
        let expected: Vec<usize> = probe
            .rows()
            .into_iter()
            .map(|row| {
                let mut i = 0;
                loop {
                    match &tree.nodes()[i] {
                        TreeNode::Leaf { class_label, .. } => break *class_label,
                        TreeNode::Split { class_counts, .. } if replay[i] => break majority_class(class_counts),
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                            ..
                        } => i = if row[*feature] <= *threshold { *left } else { *right },
                    }
                }
            })
            .collect();
        assert_eq!(pruned.predict(probe.view()).unwrap(), expected);
    }
}

#[test]
fn rule_antecedents_average_to_apl() {
    let mut rng = rng(5);
    for _ in 0..50 {
        let tree = random_tree(&mut rng, 2, 2, 5);
        let x = uniform_matrix(&mut rng, 30, 2, 1.2);
        let rules = tree.export_rules(&["a".to_string(), "b".to_string()]).unwrap();
        let lengths: Vec<usize> = rules
            .lines()
            .map(|l| {
                if l.starts_with("if true") {
                    0
                } else {
                    l.matches(" and ").count() + 1
                }
            })
            .collect();
        let leaves: Vec<usize> = (0..tree.n_nodes()).filter(|&i| tree.nodes()[i].is_leaf()).collect();
        let weighted: usize = x
            .rows()
            .into_iter()
            .map(|row| lengths[leaves.iter().position(|&l| l == tree.route(row).0).unwrap()])
            .sum();
        let apl = tree.apl(x.view()).unwrap();
        assert!((weighted as f64 / x.nrows() as f64 - apl).abs() < 1e-12);
    }
}

#[test]
fn unflipped_parabola_is_separable_by_boundary_and_memorized_by_cart() {
    let cfg = ParabolaConfig {
        flip_fraction: 0.0,
        ..ParabolaConfig::new(500, 9)
    };
    let (ds, info) = generate_parabola_with(&cfg);
    assert!(info.flipped.is_empty());
    for (row, &label) in ds.x.rows().into_iter().zip(&ds.y) {
        let above = row[1] > 5.0 * (row[0] - 0.5).powi(2) + 0.4;
        assert_eq!(label, usize::from(above));
    }
    let tree = fit_tree(ds.x.view(), &ds.y, 2, &DtParams::new(1, None)).unwrap();
    assert_eq!(tree_accuracy(&tree, ds.x.view(), &ds.y), 1.0);
}
