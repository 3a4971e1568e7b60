//! Experiment orchestration: regularization sweeps, best-model selection,
//! multi-seed fidelity and consistency runs, standalone tree baselines.

mod config;
mod report;
mod sweep;

pub use config::{log_space, DatasetSource, ExperimentConfig, GridSpec, SweepConfig};
pub use report::{consistency_table, fidelity_table};
pub use sweep::{
    read_sweep_csv, run_sweep, select_best, write_points_csv, write_sweep_csv, FitnessPoint, PointKind, PointStatus,
    Selection, SweepResult, SWEEP_HEADER,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtree::{fit_tree, DtParams};
use crate::error::{Error, Result};
use crate::extraction::{train_and_extract, FeatureSpace};
use crate::metrics::{auc, unanimity, ConsistencyReport, FidelityReport};
use crate::regularizers::RegularizerSpec;

/// Wall-clock seconds taken by `f`, with its result.
pub fn time_run<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Outcome of repeated train-and-extract runs on fresh splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityOutcome {
    /// Test fidelity of the reported (possibly pruned) trees.
    pub report: FidelityReport,
    /// Test fidelity of the same trees before pruning.
    pub unpruned: FidelityReport,
    pub apl_mean: f64,
    pub split_seeds: Vec<u64>,
}

/// Retrain and re-extract on `n_seeds` resplits (split seeds
/// `cfg.split.seed + i`); the network initialization seed stays fixed.
pub fn run_fidelity_experiment(
    cfg: &ExperimentConfig,
    reg: &RegularizerSpec,
    n_seeds: usize,
) -> Result<FidelityOutcome> {
    cfg.validate()?;
    if n_seeds == 0 {
        return Err(Error::Config("fidelity experiment needs at least one seed".into()));
    }
    let dataset = cfg.dataset.load()?;
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| cfg.split.seed.wrapping_add(i)).collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let data = crate::data::prepare(&dataset, &cfg.split.with_seed(seed))?;
            let arch = cfg.architecture(&data)?;
            let r = train_and_extract(&data, &arch, &cfg.train, reg, &cfg.extract_options())?;
            let eval = r.evaluate(&data.test)?;
            Ok((eval.fidelity, eval.unpruned_fidelity, eval.apl))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityOutcome {
        report: FidelityReport::from_runs(runs.iter().map(|r| r.0).collect())?,
        unpruned: FidelityReport::from_runs(runs.iter().map(|r| r.1).collect())?,
        apl_mean: runs.iter().map(|r| r.2).sum::<f64>() / runs.len() as f64,
        split_seeds: seeds,
    })
}

/// Train one network per initialization seed on a shared split and measure
/// how often the extracted trees agree on the test rows.
pub fn run_consistency_experiment(
    cfg: &ExperimentConfig,
    reg: &RegularizerSpec,
    init_seeds: &[u64],
) -> Result<ConsistencyReport> {
    cfg.validate()?;
    if init_seeds.len() < 2 {
        return Err(Error::Input(format!(
            "consistency needs at least 2 sessions, got {}",
            init_seeds.len()
        )));
    }
    let data = cfg.prepare(&cfg.split)?;
    let arch = cfg.architecture(&data)?;
    let sessions = init_seeds
        .par_iter()
        .map(|&seed| {
            let r = train_and_extract(&data, &arch, &cfg.train.with_seed(seed), reg, &cfg.extract_options())?;
            let eval = r.evaluate(&data.test)?;
            let inputs = match cfg.feature_space {
                FeatureSpace::Raw => data.test.raw.view(),
                FeatureSpace::Standardized => data.test.std.view(),
            };
            Ok((r.tree.predict(inputs)?, eval.apl, eval.fidelity))
        })
        .collect::<Result<Vec<_>>>()?;
    let preds: Vec<Vec<usize>> = sessions.iter().map(|s| s.0.clone()).collect();
    Ok(ConsistencyReport {
        consistency: unanimity(&preds)?,
        n_sessions: init_seeds.len(),
        apl_mean: sessions.iter().map(|s| s.1).sum::<f64>() / sessions.len() as f64,
        fidelity: FidelityReport::from_runs(sessions.iter().map(|s| s.2).collect())?,
    })
}

/// Depth limits tried by [`run_standalone_dt_baseline`]: unbounded, then 1 to 10.
pub fn baseline_depths() -> Vec<Option<usize>> {
    std::iter::once(None).chain((1..=10).map(Some)).collect()
}

/// Trees fitted on the true labels, one per depth limit, each pruned
/// against the true validation labels when `cfg.prune` is set.
pub fn run_standalone_dt_baseline(cfg: &ExperimentConfig) -> Result<Vec<FitnessPoint>> {
    cfg.validate()?;
    let data = cfg.prepare(&cfg.split)?;
    let pick = |part: &crate::data::Part| match cfg.feature_space {
        FeatureSpace::Raw => part.raw.clone(),
        FeatureSpace::Standardized => part.std.clone(),
    };
    let (x_train, x_val, x_test) = (pick(&data.train), pick(&data.val), pick(&data.test));
    baseline_depths()
        .into_iter()
        .map(|max_depth| {
            let (tree, seconds) = time_run(|| -> Result<_> {
                let params = DtParams::new(cfg.dt_params.min_samples_leaf, max_depth);
                let grown = fit_tree(x_train.view(), &data.train.y, data.n_classes, &params)?;
                if cfg.prune {
                    grown.prune(x_val.view(), &data.val.y)
                } else {
                    Ok(grown)
                }
            });
            let tree = tree?;
            Ok(FitnessPoint {
                lambda1: 0.0,
                lambda_orth: 0.0,
                norm: "standalone_dt".into(),
                apl: tree.apl(x_test.view())?,
                mlp_auc: f64::NAN,
                dt_auc: auc(tree.predict_proba(x_test.view())?.view(), &data.test.y)?,
                fidelity: f64::NAN,
                nodes: tree.n_nodes(),
                seconds,
                seed: cfg.train.seed,
                split_hash: data.manifest.split_hash.clone(),
                kind: PointKind::StandaloneTree,
                max_depth,
                status: PointStatus::Ok,
            })
        })
        .collect()
}
