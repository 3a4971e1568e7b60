//! Evaluation metrics: ROC AUC, tree/network fidelity and cross-session
//! consistency.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dtree::DecisionTree;
use crate::error::{Error, Result};
use crate::nn::MlpModel;

/// Binary ROC AUC as the Mann–Whitney statistic with midranks for ties.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Input("scores contain NaN".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc("labels contain a single class".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of 1-based midranks over the positives
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + end + 1) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| positive[i]).count();
        rank_sum += midrank * tied_pos as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// ROC AUC of a probability matrix against class labels.
///
/// One column (or two) is read as the binary positive-class score. With more
/// columns the result is the unweighted mean of one-vs-rest AUCs over the
/// classes that occur in `labels`; at least two must occur.
pub fn auc(scores: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    if scores.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} score rows for {} labels",
            scores.nrows(),
            labels.len()
        )));
    }
    let cols = scores.ncols();
    if cols == 0 {
        return Err(Error::Shape("score matrix has no columns".into()));
    }
    if cols <= 2 {
        if let Some(&bad) = labels.iter().find(|&&c| c > 1) {
            return Err(Error::Input(format!("label {bad} in a binary problem")));
        }
        let column = scores.column(cols - 1).to_vec();
        let positive: Vec<bool> = labels.iter().map(|&c| c == 1).collect();
        return binary_auc(&column, &positive);
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= cols) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {cols} score columns"
        )));
    }
    let present: Vec<usize> = (0..cols).filter(|c| labels.contains(c)).collect();
    if present.len() < 2 {
        return Err(Error::UndefinedAuc("labels contain a single class".into()));
    }
    let mut total = 0.0;
    for &c in &present {
        let positive: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        total += binary_auc(&scores.column(c).to_vec(), &positive)?;
    }
    Ok(total / present.len() as f64)
}

/// Fraction of positions where two label sequences agree.
pub fn agreement(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("{} predictions against {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Input("agreement of empty sequences is undefined".into()));
    }
    Ok(a.iter().zip(b).filter(|(p, q)| p == q).count() as f64 / a.len() as f64)
}

/// Share of rows on which the tree, reading original features, predicts the
/// network's argmax class on the standardized features.
pub fn fidelity(tree: &DecisionTree, model: &MlpModel, x_raw: ArrayView2<f64>, x_std: ArrayView2<f64>) -> Result<f64> {
    if x_raw.nrows() != x_std.nrows() {
        return Err(Error::Input(format!(
            "{} raw rows against {} standardized rows",
            x_raw.nrows(),
            x_std.nrows()
        )));
    }
    agreement(&tree.predict(x_raw)?, &model.predict(x_std)?)
}

/// Share of rows on which every prediction sequence gives the same class.
pub fn unanimity(predictions: &[Vec<usize>]) -> Result<f64> {
    if predictions.len() < 2 {
        return Err(Error::Input(format!(
            "consistency needs at least 2 sessions, got {}",
            predictions.len()
        )));
    }
    let n = predictions[0].len();
    if n == 0 || predictions.iter().any(|p| p.len() != n) {
        return Err(Error::Input(
            "prediction sequences must be non-empty and equally long".into(),
        ));
    }
    let unanimous = (0..n)
        .filter(|&i| predictions.iter().all(|p| p[i] == predictions[0][i]))
        .count();
    Ok(unanimous as f64 / n as f64)
}

/// Share of rows of `x` classified identically by all `trees`.
pub fn consistency(trees: &[DecisionTree], x: ArrayView2<f64>) -> Result<f64> {
    if trees.len() < 2 {
        return Err(Error::Input(format!(
            "consistency needs at least 2 trees, got {}",
            trees.len()
        )));
    }
    let preds = trees.iter().map(|t| t.predict(x)).collect::<Result<Vec<_>>>()?;
    unanimity(&preds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub mean: f64,
    /// Population standard deviation of `per_run`.
    pub std: f64,
    pub per_run: Vec<f64>,
}

impl FidelityReport {
    pub fn from_runs(per_run: Vec<f64>) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::Input("fidelity report needs at least one run".into()));
        }
        let n = per_run.len() as f64;
        let mean = per_run.iter().sum::<f64>() / n;
        let std = (per_run.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self { mean, std, per_run })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub consistency: f64,
    pub n_sessions: usize,
    pub apl_mean: f64,
    pub fidelity: FidelityReport,
}
