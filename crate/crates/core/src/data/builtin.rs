use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{generate_parabola, parse_csv, CsvOptions, Dataset};
use crate::dtree::DtParams;
use crate::error::{Error, Result};
use crate::nn::TrainConfig;

const IRIS: &str = include_str!("../../data/iris.csv");
const BREAST_CANCER: &str = include_str!("../../data/breast_cancer.csv");
const PIMA: &str = include_str!("../../data/pima.csv");

/// Number of generated points for the built-in parabola dataset.
pub const PARABOLA_POINTS: usize = 500;

/// Per-dataset network and tree settings used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPreset {
    pub name: String,
    pub hidden_sizes: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub min_samples_leaf: usize,
    pub prune: bool,
}

impl DatasetPreset {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig::new(self.learning_rate, self.batch_size, self.epochs, seed)
    }

    pub fn dt_params(&self) -> DtParams {
        DtParams::new(self.min_samples_leaf, None)
    }
}

pub const PRESET_NAMES: [&str; 8] = [
    "parabola",
    "iris",
    "breast_cancer",
    "pima",
    "titanic",
    "mushroom",
    "adult",
    "diabetes",
];

pub fn preset(name: &str) -> Result<DatasetPreset> {
    let (hidden, batch, lr, epochs, msl, prune): (&[usize], usize, f64, usize, usize, bool) = match name {
        "parabola" => (&[100, 100, 10], 100, 0.001, 1000, 1, false),
        "iris" => (&[8], 10, 0.01, 50, 5, true),
        "breast_cancer" => (&[64, 32], 10, 0.001, 10, 15, true),
        "pima" => (&[24], 128, 0.01, 10, 30, true),
        "titanic" => (&[100, 50, 25], 16, 0.005, 10, 35, true),
        "mushroom" => (&[16], 10, 0.005, 25, 45, true),
        "adult" => (&[32, 16], 32, 0.005, 10, 75, true),
        "diabetes" => (&[32, 16, 8], 512, 0.01, 50, 250, true),
        other => {
            return Err(Error::Config(format!(
                "no preset named `{other}`; known: {PRESET_NAMES:?}"
            )))
        }
    };
    Ok(DatasetPreset {
        name: name.to_string(),
        hidden_sizes: hidden.to_vec(),
        batch_size: batch,
        learning_rate: lr,
        epochs,
        min_samples_leaf: msl,
        prune,
    })
}

/// Datasets available without any file: `parabola`, `iris`, `breast_cancer`, `pima`.
pub fn builtin_names() -> [&'static str; 4] {
    ["parabola", "iris", "breast_cancer", "pima"]
}

/// Load a bundled dataset. `seed` only affects the generated parabola.
pub fn load_builtin(name: &str, seed: u64) -> Result<Dataset> {
    let (text, label) = match name {
        "parabola" => return Ok(generate_parabola(PARABOLA_POINTS, seed)),
        "iris" => (IRIS, "species"),
        "breast_cancer" => (BREAST_CANCER, "diagnosis"),
        "pima" => (PIMA, "outcome"),
        other => {
            return Err(Error::Config(format!(
                "no built-in dataset `{other}`; known: {:?}",
                builtin_names()
            )))
        }
    };
    let origin = format!("builtin:{name}");
    let mut ds = parse_csv(text, Path::new(&origin), &CsvOptions::new(label, &[]))?;
    ds.source = origin;
    Ok(ds)
}
