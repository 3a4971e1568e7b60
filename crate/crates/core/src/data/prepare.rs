use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{split_indices, ColumnEncoding, Dataset, SplitIndices, SplitSpec, StandardizationStats};
use crate::error::Result;

/// One split in both feature spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    /// Original units, after imputation.
    pub raw: Array2<f64>,
    /// Standardized with training-split statistics.
    pub std: Array2<f64>,
    pub y: Vec<usize>,
    /// Row positions in the source dataset.
    pub indices: Vec<usize>,
}

impl Part {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Everything needed to rebuild a prepared split bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub source: String,
    pub n_rows: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub encoding: Vec<ColumnEncoding>,
    /// Training-split median per feature, for features that had missing cells.
    pub imputation: Vec<Option<f64>>,
    pub split: SplitSpec,
    pub split_hash: String,
    pub standardization: StandardizationStats,
}

impl DataManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// A dataset split, imputed and standardized, ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: Part,
    pub val: Part,
    pub test: Part,
    pub stats: StandardizationStats,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub n_classes: usize,
    pub manifest: DataManifest,
}

impl PreparedData {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Short stable digest of a partition: first 16 hex digits of SHA-256 over the index lists.
pub(crate) fn split_hash(idx: &SplitIndices) -> String {
    let mut h = Sha256::new();
    for (tag, part) in [(b'T', &idx.train), (b'V', &idx.val), (b'E', &idx.test)] {
        h.update([tag]);
        for &i in part.iter() {
            h.update((i as u64).to_le_bytes());
        }
    }
    hex::encode(h.finalize())[..16].to_string()
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Split, impute missing numeric cells with training medians, and standardize
/// with training statistics.
pub fn prepare(dataset: &Dataset, spec: &SplitSpec) -> Result<PreparedData> {
    dataset.validate()?;
    let idx = split_indices(dataset.n_rows(), spec)?;
    let mut x = dataset.x.clone();
    let mut imputation = vec![None; dataset.n_features()];
    for (j, slot) in imputation.iter_mut().enumerate() {
        if !x.column(j).iter().any(|v| v.is_nan()) {
            continue;
        }
        let train_values: Vec<f64> = idx.train.iter().map(|&i| x[[i, j]]).filter(|v| !v.is_nan()).collect();
        let fill = median(train_values).unwrap_or(0.0);
        x.column_mut(j).mapv_inplace(|v| if v.is_nan() { fill } else { v });
        *slot = Some(fill);
    }
    let train_raw = x.select(Axis(0), &idx.train);
    let stats = StandardizationStats::fit(train_raw.view())?;
    let make = |indices: &[usize]| -> Result<Part> {
        let raw = x.select(Axis(0), indices);
        Ok(Part {
            std: stats.apply(raw.view())?,
            raw,
            y: indices.iter().map(|&i| dataset.y[i]).collect(),
            indices: indices.to_vec(),
        })
    };
    let (train, val, test) = (make(&idx.train)?, make(&idx.val)?, make(&idx.test)?);
    let manifest = DataManifest {
        source: dataset.source.clone(),
        n_rows: dataset.n_rows(),
        feature_names: dataset.feature_names.clone(),
        class_names: dataset.class_names.clone(),
        encoding: dataset.encoding.clone(),
        imputation,
        split: spec.clone(),
        split_hash: split_hash(&idx),
        standardization: stats.clone(),
    };
    Ok(PreparedData {
        train,
        val,
        test,
        stats,
        feature_names: dataset.feature_names.clone(),
        class_names: dataset.class_names.clone(),
        n_classes: dataset.n_classes,
        manifest,
    })
}
