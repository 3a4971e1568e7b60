//! Weight-matrix penalties and their subgradients.
//!
//! Every penalty is a sum over layers of a per-matrix term and is defined on
//! weight matrices only (biases are never penalized). A weight matrix `W` has
//! one column per neuron of its layer, so the Gram matrix `G = WᵀW` holds the
//! pairwise inner products of the neurons' incoming weight vectors.
//!
//! | norm        | per-layer value                   | gradient                    |
//! |-------------|-----------------------------------|-----------------------------|
//! | L1 (sparse) | `Σ |w_ij|`                        | `sign(W)`                   |
//! | `l1_norm`   | `Σ |(G − I)_ij|`                  | `2 W sign(G − I)`           |
//! | `frobenius` | `Σ (G − I)_ij²`                   | `4 W (G − I)`               |
//! | `ldd`       | `tr(G) − logdet(G + εI)`          | `2W − 2W (G + εI)⁻¹`        |
//!
//! `sign(0) = 0` throughout.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number above which an LDD evaluation is flagged as unstable.
pub const LDD_CONDITION_LIMIT: f64 = 1e12;

pub const DEFAULT_LDD_JITTER: f64 = 1e-8;

/// Matrix norm used to measure the distance between `G` and `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrthoNorm {
    /// Entrywise absolute sum of `G − I`.
    L1Norm,
    /// Squared Frobenius norm of `G − I`.
    Frobenius,
    /// Log-determinant divergence `tr(G) − logdet(G)`.
    Ldd,
    #[default]
    None,
}

impl OrthoNorm {
    pub fn as_str(self) -> &'static str {
        match self {
            OrthoNorm::L1Norm => "l1_norm",
            OrthoNorm::Frobenius => "frobenius",
            OrthoNorm::Ldd => "ldd",
            OrthoNorm::None => "none",
        }
    }
}

impl std::fmt::Display for OrthoNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OrthoNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1_norm" | "l1" => Ok(OrthoNorm::L1Norm),
            "frobenius" | "fn" => Ok(OrthoNorm::Frobenius),
            "ldd" => Ok(OrthoNorm::Ldd),
            "none" => Ok(OrthoNorm::None),
            other => Err(Error::Config(format!("unknown ortho norm `{other}`"))),
        }
    }
}

/// Which penalties are active and how strong they are.
///
/// The total penalty is `lambda1 · Ω₁ + lambda_orth · Ω_norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub lambda1: f64,
    pub lambda_orth: f64,
    pub ortho_norm: OrthoNorm,
    #[serde(default = "default_jitter")]
    pub ldd_jitter: f64,
    /// Layer indices (0-based) left out of every penalty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude_layers: Vec<usize>,
}

fn default_jitter() -> f64 {
    DEFAULT_LDD_JITTER
}

impl Default for RegularizerSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl RegularizerSpec {
    /// The unregularized baseline.
    pub fn none() -> Self {
        Self {
            lambda1: 0.0,
            lambda_orth: 0.0,
            ortho_norm: OrthoNorm::None,
            ldd_jitter: DEFAULT_LDD_JITTER,
            exclude_layers: Vec::new(),
        }
    }

    pub fn l1(lambda1: f64) -> Self {
        Self {
            lambda1,
            ..Self::none()
        }
    }

    /// L1-orthogonal regularization with the entrywise L1 norm on `G − I`.
    pub fn l1_orth(lambda1: f64, lambda_orth: f64) -> Self {
        Self::with_norm(lambda1, lambda_orth, OrthoNorm::L1Norm)
    }

    pub fn with_norm(lambda1: f64, lambda_orth: f64, ortho_norm: OrthoNorm) -> Self {
        Self {
            lambda1,
            lambda_orth,
            ortho_norm,
            ..Self::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(Error::Config(format!("lambda1 must be >= 0, got {}", self.lambda1)));
        }
        if !(self.lambda_orth >= 0.0 && self.lambda_orth.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_orth must be >= 0, got {}",
                self.lambda_orth
            )));
        }
        if !(self.ldd_jitter >= 0.0 && self.ldd_jitter.is_finite()) {
            return Err(Error::Config(format!(
                "ldd_jitter must be >= 0, got {}",
                self.ldd_jitter
            )));
        }
        Ok(())
    }

    /// True when the total penalty is identically zero.
    pub fn is_unregularized(&self) -> bool {
        self.lambda1 == 0.0 && (self.ortho_norm == OrthoNorm::None || self.lambda_orth == 0.0)
    }

    fn penalizes(&self, layer: usize) -> bool {
        !self.exclude_layers.contains(&layer)
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn gram(w: &Array2<f64>) -> Array2<f64> {
    w.t().dot(w)
}

/// `G − I` for one layer.
fn gram_deviation(w: &Array2<f64>) -> Array2<f64> {
    let mut g = gram(w);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    g
}

fn layer_l1(w: &Array2<f64>) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

fn layer_ortho_l1(w: &Array2<f64>) -> f64 {
    gram_deviation(w).iter().map(|v| v.abs()).sum()
}

fn layer_ortho_frobenius(w: &Array2<f64>) -> f64 {
    gram_deviation(w).iter().map(|v| v * v).sum()
}

/// Ω₁: sum of absolute weight entries over all layers.
pub fn l1_penalty(weights: &[Array2<f64>]) -> f64 {
    weights.iter().map(layer_l1).sum()
}

/// Ω_orth with the entrywise L1 norm: `Σ_l ‖W_lᵀW_l − I‖₁`.
pub fn ortho_penalty_l1(weights: &[Array2<f64>]) -> f64 {
    weights.iter().map(layer_ortho_l1).sum()
}

/// Ω_orth with the squared Frobenius norm: `Σ_l ‖W_lᵀW_l − I‖_F²`.
pub fn ortho_penalty_frobenius(weights: &[Array2<f64>]) -> f64 {
    weights.iter().map(layer_ortho_frobenius).sum()
}

/// Result of a log-determinant divergence evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LddValue {
    pub value: f64,
    /// Largest condition number of `G_l + εI` over the layers.
    pub max_condition: f64,
    /// Set when some layer's condition number exceeds [`LDD_CONDITION_LIMIT`].
    pub ill_conditioned: bool,
}

/// Eigen-decomposition of `WᵀW + jitter·I`, rejecting numerically singular matrices.
fn jittered_gram_eigen(layer: usize, w: &Array2<f64>, jitter: f64) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let g = gram(w);
    let k = g.nrows();
    let mut m = DMatrix::from_fn(k, k, |i, j| g[[i, j]]);
    for i in 0..k {
        m[(i, i)] += jitter;
    }
    let eig = SymmetricEigen::new(m);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    // Pivots at rounding level of the largest eigenvalue are indistinguishable from zero.
    let floor = max.abs() * f64::EPSILON * k as f64;
    if !min.is_finite() || min <= floor {
        return Err(Error::Singular {
            layer,
            min_eigenvalue: min,
        });
    }
    Ok(eig)
}

/// Log-determinant divergence `Σ_l tr(G_l) − logdet(G_l + jitter·I)`.
///
/// With `jitter = 0` a rank-deficient layer (for example two identical
/// columns, or more columns than rows) has a singular Gram matrix and the
/// evaluation fails with [`Error::Singular`].
pub fn ldd_penalty(weights: &[Array2<f64>], jitter: f64) -> Result<LddValue> {
    let mut value = 0.0;
    let mut max_condition: f64 = 1.0;
    for (l, w) in weights.iter().enumerate() {
        let eig = jittered_gram_eigen(l, w, jitter)?;
        let trace: f64 = w.iter().map(|v| v * v).sum();
        let logdet: f64 = eig.eigenvalues.iter().map(|v| v.ln()).sum();
        value += trace - logdet;
        max_condition = max_condition.max(eig.eigenvalues.max() / eig.eigenvalues.min());
    }
    Ok(LddValue {
        value,
        max_condition,
        ill_conditioned: max_condition > LDD_CONDITION_LIMIT,
    })
}

/// Total penalty `λ₁·Ω₁ + λ_orth·Ω_norm` over the penalized layers.
pub fn penalty(weights: &[Array2<f64>], spec: &RegularizerSpec) -> Result<f64> {
    let mut total = 0.0;
    for (l, w) in weights.iter().enumerate() {
        if !spec.penalizes(l) {
            continue;
        }
        if spec.lambda1 != 0.0 {
            total += spec.lambda1 * layer_l1(w);
        }
        if spec.lambda_orth != 0.0 {
            total += spec.lambda_orth
                * match spec.ortho_norm {
                    OrthoNorm::L1Norm => layer_ortho_l1(w),
                    OrthoNorm::Frobenius => layer_ortho_frobenius(w),
                    OrthoNorm::Ldd => {
                        ldd_penalty(std::slice::from_ref(w), spec.ldd_jitter)
                            .map_err(|e| relabel_layer(e, l))?
                            .value
                    }
                    OrthoNorm::None => 0.0,
                };
        }
    }
    Ok(total)
}

fn relabel_layer(err: Error, layer: usize) -> Error {
    match err {
        Error::Singular { min_eigenvalue, .. } => Error::Singular { layer, min_eigenvalue },
        other => other,
    }
}

/// Per-layer (sub)gradient of [`penalty`] with respect to each weight matrix.
///
/// Excluded layers get a zero matrix.
pub fn penalty_subgradient(weights: &[Array2<f64>], spec: &RegularizerSpec) -> Result<Vec<Array2<f64>>> {
    weights
        .iter()
        .enumerate()
        .map(|(l, w)| {
            let mut grad = Array2::<f64>::zeros(w.raw_dim());
            if !spec.penalizes(l) {
                return Ok(grad);
            }
            if spec.lambda1 != 0.0 {
                let lambda1 = spec.lambda1;
                Zip::from(&mut grad).and(w).for_each(|g, &v| *g += lambda1 * sign(v));
            }
            if spec.lambda_orth != 0.0 {
                let ortho = match spec.ortho_norm {
                    OrthoNorm::L1Norm => w.dot(&gram_deviation(w).mapv(sign)) * 2.0,
                    OrthoNorm::Frobenius => w.dot(&gram_deviation(w)) * 4.0,
                    OrthoNorm::Ldd => ldd_layer_gradient(l, w, spec.ldd_jitter)?,
                    OrthoNorm::None => Array2::zeros(w.raw_dim()),
                };
                grad.scaled_add(spec.lambda_orth, &ortho);
            }
            Ok(grad)
        })
        .collect()
}

fn ldd_layer_gradient(layer: usize, w: &Array2<f64>, jitter: f64) -> Result<Array2<f64>> {
    let eig = jittered_gram_eigen(layer, w, jitter)?;
    let k = w.ncols();
    let v = &eig.eigenvectors;
    let inv = Array2::from_shape_fn((k, k), |(i, j)| {
        (0..k).map(|m| v[(i, m)] * v[(j, m)] / eig.eigenvalues[m]).sum::<f64>()
    });
    Ok((w - &w.dot(&inv)) * 2.0)
}
