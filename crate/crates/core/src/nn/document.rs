use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{MlpArchitecture, MlpModel, TrainConfig};
use crate::error::{Error, Result};
use crate::regularizers::RegularizerSpec;

pub const MODEL_FORMAT: &str = "l1o-mlp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

/// Versioned JSON form of a trained network.
///
/// Floats are written in shortest round-trip form, so a save/load cycle is
/// value-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub architecture: MlpArchitecture,
    weights: Vec<MatrixDoc>,
    biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegularizerSpec>,
}

impl ModelDocument {
    pub fn new(model: &MlpModel, train_config: Option<TrainConfig>, regularizer: Option<RegularizerSpec>) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            architecture: model.architecture.clone(),
            weights: model
                .weights
                .iter()
                .map(|w| MatrixDoc {
                    rows: w.nrows(),
                    cols: w.ncols(),
                    data: w.iter().copied().collect(),
                })
                .collect(),
            biases: model.biases.iter().map(|b| b.to_vec()).collect(),
            train_config,
            regularizer,
        }
    }

    pub fn to_model(&self) -> Result<MlpModel> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "expected format `{MODEL_FORMAT}`, found `{}`",
                self.format
            )));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MODEL_VERSION,
            });
        }
        let weights = self
            .weights
            .iter()
            .map(|m| {
                Array2::from_shape_vec((m.rows, m.cols), m.data.clone())
                    .map_err(|e| Error::Shape(format!("weight matrix {}x{}: {e}", m.rows, m.cols)))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = MlpModel {
            architecture: self.architecture.clone(),
            weights,
            biases: self.biases.iter().map(|b| Array1::from(b.clone())).collect(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
