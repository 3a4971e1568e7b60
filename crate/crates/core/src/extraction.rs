//! Decision tree extraction: label the training inputs with a network's
//! predictions, fit a tree to those labels, and optionally prune it against
//! the network's predictions on the validation rows.

use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::{DataManifest, Part, PreparedData};
use crate::dtree::{fit_tree, DecisionTree, DtParams, TreeDocument};
use crate::error::{Error, Result};
use crate::metrics::{agreement, auc};
use crate::nn::{accuracy, train, MlpArchitecture, MlpModel, ModelDocument, TrainConfig, TrainHistory};
use crate::regularizers::RegularizerSpec;

/// Which copy of the inputs the tree splits on. The network always reads
/// standardized inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSpace {
    /// Original units, so thresholds are directly readable.
    #[default]
    Raw,
    Standardized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub dt_params: DtParams,
    pub prune: bool,
    #[serde(default)]
    pub feature_space: FeatureSpace,
}

impl ExtractOptions {
    pub fn new(dt_params: DtParams, prune: bool) -> Self {
        Self {
            dt_params,
            prune,
            feature_space: FeatureSpace::Raw,
        }
    }
}

/// Everything needed to repeat an extraction exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub options: ExtractOptions,
    #[serde(default)]
    pub architecture: Option<MlpArchitecture>,
    #[serde(default)]
    pub train_config: Option<TrainConfig>,
    #[serde(default)]
    pub regularizer: Option<RegularizerSpec>,
    #[serde(default)]
    pub data: Option<DataManifest>,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub model: MlpModel,
    /// The tree as grown, before pruning.
    pub unpruned_tree: DecisionTree,
    /// The reported tree: pruned when pruning was requested.
    pub tree: DecisionTree,
    pub provenance: Provenance,
    pub history: Option<TrainHistory>,
}

/// Held-out scores of one extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub apl: f64,
    pub mlp_auc: f64,
    pub dt_auc: f64,
    pub fidelity: f64,
    pub unpruned_fidelity: f64,
    pub mlp_accuracy: f64,
    pub dt_accuracy: f64,
    pub nodes: usize,
}

fn tree_inputs(part: &Part, space: FeatureSpace) -> ArrayView2<'_, f64> {
    match space {
        FeatureSpace::Raw => part.raw.view(),
        FeatureSpace::Standardized => part.std.view(),
    }
}

fn check_part(model: &MlpModel, part: &Part, what: &str) -> Result<()> {
    let d = model.architecture.input_dim;
    if part.raw.ncols() != d || part.std.ncols() != d {
        return Err(Error::Input(format!(
            "{what} split has {} raw / {} standardized features, network expects {d}",
            part.raw.ncols(),
            part.std.ncols()
        )));
    }
    if part.raw.nrows() != part.y.len() || part.std.nrows() != part.y.len() {
        return Err(Error::Shape(format!("{what} split has inconsistent row counts")));
    }
    Ok(())
}

/// Fit a tree to the network's argmax predictions on `train`.
///
/// When `opts.prune` is set the tree is reduced-error pruned with the
/// network's predictions on `val` as targets.
pub fn extract(model: &MlpModel, train: &Part, val: &Part, opts: &ExtractOptions) -> Result<ExtractionResult> {
    check_part(model, train, "training")?;
    check_part(model, val, "validation")?;
    let n_classes = model.architecture.n_classes;
    let targets = model.predict(train.std.view())?;
    let unpruned = fit_tree(
        tree_inputs(train, opts.feature_space),
        &targets,
        n_classes,
        &opts.dt_params,
    )?;
    let tree = if opts.prune {
        let val_targets = model.predict(val.std.view())?;
        unpruned.prune(tree_inputs(val, opts.feature_space), &val_targets)?
    } else {
        unpruned.clone()
    };
    Ok(ExtractionResult {
        model: model.clone(),
        unpruned_tree: unpruned,
        tree,
        provenance: Provenance {
            options: opts.clone(),
            architecture: Some(model.architecture.clone()),
            train_config: None,
            regularizer: None,
            data: None,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        history: None,
    })
}

/// Train a network on the prepared training split, then extract a tree.
pub fn train_and_extract(
    data: &PreparedData,
    arch: &MlpArchitecture,
    cfg: &TrainConfig,
    reg: &RegularizerSpec,
    opts: &ExtractOptions,
) -> Result<ExtractionResult> {
    if arch.input_dim != data.n_features() || arch.n_classes != data.n_classes {
        return Err(Error::Input(format!(
            "architecture is {}→{} but the data has {} features and {} classes",
            arch.input_dim,
            arch.n_classes,
            data.n_features(),
            data.n_classes
        )));
    }
    let (model, history) = train(data.train.std.view(), &data.train.y, arch, cfg, reg)?;
    let mut result = extract(&model, &data.train, &data.val, opts)?;
    result.unpruned_tree = result
        .unpruned_tree
        .with_names(data.feature_names.clone(), data.class_names.clone())?;
    result.tree = result
        .tree
        .with_names(data.feature_names.clone(), data.class_names.clone())?;
    result.provenance.train_config = Some(cfg.clone());
    result.provenance.regularizer = Some(reg.clone());
    result.provenance.data = Some(data.manifest.clone());
    result.history = Some(history);
    Ok(result)
}

impl ExtractionResult {
    /// Scores on a held-out split; AUCs use network probabilities and tree leaf frequencies.
    pub fn evaluate(&self, part: &Part) -> Result<Evaluation> {
        check_part(&self.model, part, "evaluation")?;
        let space = self.provenance.options.feature_space;
        let inputs = tree_inputs(part, space);
        let mlp_pred = self.model.predict(part.std.view())?;
        let dt_pred = self.tree.predict(inputs)?;
        Ok(Evaluation {
            apl: self.tree.apl(inputs)?,
            mlp_auc: auc(self.model.predict_proba(part.std.view())?.view(), &part.y)?,
            dt_auc: auc(self.tree.predict_proba(inputs)?.view(), &part.y)?,
            fidelity: agreement(&dt_pred, &mlp_pred)?,
            unpruned_fidelity: agreement(&self.unpruned_tree.predict(inputs)?, &mlp_pred)?,
            mlp_accuracy: accuracy(&mlp_pred, &part.y),
            dt_accuracy: accuracy(&dt_pred, &part.y),
            nodes: self.tree.n_nodes(),
        })
    }

    /// Fidelity of the reported tree on `part`.
    pub fn fidelity_on(&self, part: &Part) -> Result<f64> {
        let inputs = tree_inputs(part, self.provenance.options.feature_space);
        agreement(&self.tree.predict(inputs)?, &self.model.predict(part.std.view())?)
    }

    /// Write `model.json`, `tree.json`, `unpruned_tree.json`, `tree.dot`,
    /// `rules.txt` and `provenance.json` into `dir`, creating it if needed.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        ModelDocument::new(
            &self.model,
            self.provenance.train_config.clone(),
            self.provenance.regularizer.clone(),
        )
        .save(&dir.join("model.json"))?;
        TreeDocument::new(&self.tree).save(&dir.join("tree.json"))?;
        TreeDocument::new(&self.unpruned_tree).save(&dir.join("unpruned_tree.json"))?;
        std::fs::write(dir.join("tree.dot"), self.tree.export_dot(self.tree.feature_names())?)?;
        std::fs::write(
            dir.join("rules.txt"),
            self.tree.export_rules(self.tree.feature_names())?,
        )?;
        std::fs::write(
            dir.join("provenance.json"),
            serde_json::to_string_pretty(&self.provenance)?,
        )?;
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let model = ModelDocument::load(&dir.join("model.json"))?.to_model()?;
        let tree = TreeDocument::load(&dir.join("tree.json"))?.to_tree()?;
        let unpruned_tree = TreeDocument::load(&dir.join("unpruned_tree.json"))?.to_tree()?;
        let provenance: Provenance = serde_json::from_str(&std::fs::read_to_string(dir.join("provenance.json"))?)?;
        Ok(Self {
            model,
            unpruned_tree,
            tree,
            provenance,
            history: None,
        })
    }
}
