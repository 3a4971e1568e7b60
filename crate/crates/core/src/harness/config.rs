use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_builtin, load_csv, prepare, preset, Dataset, PreparedData, SplitSpec};
use crate::dtree::DtParams;
use crate::error::{Error, Result};
use crate::extraction::{ExtractOptions, FeatureSpace};
use crate::nn::{MlpArchitecture, TrainConfig};
use crate::regularizers::{OrthoNorm, RegularizerSpec};

/// Where an experiment's rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Builtin {
        builtin: String,
        /// Generator seed; only the parabola uses it.
        #[serde(default)]
        seed: u64,
    },
    Csv {
        csv: PathBuf,
        label_column: String,
        #[serde(default)]
        categorical_columns: Vec<String>,
    },
}

impl DatasetSource {
    pub fn builtin(name: &str) -> Self {
        DatasetSource::Builtin {
            builtin: name.to_string(),
            seed: 0,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Builtin { builtin, seed } => load_builtin(builtin, *seed),
            DatasetSource::Csv {
                csv,
                label_column,
                categorical_columns,
            } => {
                let cats: Vec<&str> = categorical_columns.iter().map(String::as_str).collect();
                load_csv(csv, label_column, &cats)
            }
        }
    }
}

/// Data, network, training and tree settings shared by every experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub hidden_sizes: Vec<usize>,
    pub train: TrainConfig,
    pub dt_params: DtParams,
    pub prune: bool,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub feature_space: FeatureSpace,
}

impl ExperimentConfig {
    /// Bundled dataset with its tabulated network and tree settings.
    pub fn from_preset(name: &str, seed: u64) -> Result<Self> {
        let p = preset(name)?;
        Ok(Self {
            dataset: DatasetSource::Builtin {
                builtin: name.to_string(),
                seed,
            },
            hidden_sizes: p.hidden_sizes.clone(),
            train: p.train_config(seed),
            dt_params: p.dt_params(),
            prune: p.prune,
            split: SplitSpec::default().with_seed(seed),
            feature_space: FeatureSpace::Raw,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.dt_params.validate()?;
        self.split.validate()?;
        if self.hidden_sizes.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            dt_params: self.dt_params.clone(),
            prune: self.prune,
            feature_space: self.feature_space,
        }
    }

    pub fn prepare(&self, split: &SplitSpec) -> Result<PreparedData> {
        prepare(&self.dataset.load()?, split)
    }

    pub fn architecture(&self, data: &PreparedData) -> Result<MlpArchitecture> {
        MlpArchitecture::new(data.n_features(), self.hidden_sizes.clone(), data.n_classes)
    }
}

/// Cartesian grid of regularization strengths.
///
/// Each non-`none` norm contributes every `(lambda1, lambda_orth)` pair; a
/// `none` norm contributes the L1-only cells, one per `lambda1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lambda1: Vec<f64>,
    pub lambda_orth: Vec<f64>,
    pub norms: Vec<OrthoNorm>,
}

/// `n` points from `lo` to `hi`, evenly spaced in log scale.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lambda1: log_space(0.001, 0.1, 6),
            lambda_orth: log_space(0.0001, 2.0, 6),
            norms: vec![OrthoNorm::L1Norm],
        }
    }
}

impl GridSpec {
    pub fn cells(&self) -> Vec<RegularizerSpec> {
        let mut cells = Vec::new();
        for &norm in &self.norms {
            if norm == OrthoNorm::None {
                cells.extend(self.lambda1.iter().map(|&l1| RegularizerSpec::l1(l1)));
            } else {
                for &l1 in &self.lambda1 {
                    for &lo in &self.lambda_orth {
                        cells.push(RegularizerSpec::with_norm(l1, lo, norm));
                    }
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.cells();
        if cells.is_empty() {
            return Err(Error::Config("regularization grid is empty".into()));
        }
        cells.iter().try_for_each(RegularizerSpec::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub grid: GridSpec,
}

impl SweepConfig {
    pub fn from_preset(name: &str, seed: u64) -> Result<Self> {
        Ok(Self {
            experiment: ExperimentConfig::from_preset(name, seed)?,
            grid: GridSpec::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.grid.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
