use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature affine map to zero mean and unit variance.
///
/// Zero-variance features are left untouched: their shift is 0 and their
/// scale is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl StandardizationStats {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Input("cannot standardize an empty matrix".into()));
        }
        let mean: Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
        let std = x.std_axis(Axis(0), 0.0);
        let zero_variance: Vec<bool> = std.iter().map(|&s| s == 0.0 || !s.is_finite()).collect();
        Ok(Self {
            mean: mean.to_vec(),
            std: std.to_vec(),
            zero_variance,
        })
    }

    fn shift_scale(&self, j: usize) -> (f64, f64) {
        if self.zero_variance[j] {
            (0.0, 1.0)
        } else {
            (self.mean[j], self.std[j])
        }
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "matrix has {} columns, statistics cover {}",
                x.ncols(),
                self.mean.len()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = self.shift_scale(j);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn invert(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = self.shift_scale(j);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }
}
