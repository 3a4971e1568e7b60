//! Datasets: the synthetic parabola problem, CSV ingestion, bundled
//! benchmark tables, seeded splitting and standardization.

mod builtin;
mod parabola;
mod prepare;
mod split;
mod standardize;
mod tabular;

pub use builtin::{builtin_names, load_builtin, preset, DatasetPreset, PARABOLA_POINTS, PRESET_NAMES};
pub use parabola::{
    boundary, generate_parabola, generate_parabola_with, FlipScope, ParabolaConfig, ParabolaInfo, BAND_HALF_WIDTH,
    FLIP_FRACTION,
};
pub use prepare::{prepare, DataManifest, Part, PreparedData};
pub use split::{split, split_indices, SplitIndices, SplitSpec};
pub use standardize::StandardizationStats;
pub use tabular::{load_csv, parse_csv, ColumnEncoding, CsvOptions, MISSING_CATEGORY};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled design matrix.
///
/// Numeric CSV cells that were empty are stored as NaN until
/// [`prepare`] imputes them; every other value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub n_classes: usize,
    /// Where the rows came from, e.g. a file path or `builtin:iris`.
    pub source: String,
    /// How each input column became one or more features.
    #[serde(default)]
    pub encoding: Vec<ColumnEncoding>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>, feature_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        let n_classes = class_names.len();
        let ds = Self {
            x,
            y,
            feature_names,
            class_names,
            n_classes,
            source: "memory".into(),
            encoding: Vec::new(),
        };
        ds.validate()?;
        if ds.has_missing() {
            return Err(Error::Input("features contain non-finite values".into()));
        }
        Ok(ds)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let (n, d) = self.x.dim();
        if n == 0 || d == 0 {
            return Err(Error::Input(format!(
                "dataset must have at least one row and column, got {n}x{d}"
            )));
        }
        if self.y.len() != n {
            return Err(Error::Shape(format!("{n} rows for {} labels", self.y.len())));
        }
        if self.feature_names.len() != d {
            return Err(Error::Shape(format!(
                "{d} columns for {} feature names",
                self.feature_names.len()
            )));
        }
        if self.n_classes != self.class_names.len() || self.n_classes == 0 {
            return Err(Error::Input("class names do not match n_classes".into()));
        }
        if let Some(&bad) = self.y.iter().find(|&&c| c >= self.n_classes) {
            return Err(Error::Input(format!(
                "label {bad} out of range for {} classes",
                self.n_classes
            )));
        }
        if self.x.iter().any(|v| v.is_infinite()) {
            return Err(Error::Input("features contain infinite values".into()));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// True when some numeric cell is still awaiting imputation.
    pub fn has_missing(&self) -> bool {
        self.x.iter().any(|v| v.is_nan())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            ..self.clone()
        }
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}
