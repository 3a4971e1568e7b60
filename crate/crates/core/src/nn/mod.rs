//! Dense feed-forward classifier with manual forward and backward passes.
//!
//! Layout conventions:
//! - inputs are `N × d` matrices, one sample per row;
//! - `weights[l]` has shape `fan_in × fan_out`, so column `i` holds the
//!   incoming weights of neuron `i` in layer `l`;
//! - hidden layers use ReLU, the output layer sigmoid (one unit, binary) or
//!   softmax (`n_classes` units).

mod document;
mod train;

pub use document::{ModelDocument, MODEL_FORMAT, MODEL_VERSION};
pub use train::{train, EpochRecord, TrainConfig, TrainHistory};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regularizers::{self, RegularizerSpec};

/// Log-loss probability clamp.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub n_classes: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpArchitecture {
    /// ReLU hidden layers with a sigmoid (binary) or softmax output.
    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>, n_classes: usize) -> Result<Self> {
        let arch = Self {
            input_dim,
            hidden_sizes,
            n_classes,
            hidden_activation: Activation::Relu,
            output_activation: if n_classes == 2 {
                Activation::Sigmoid
            } else {
                Activation::Softmax
            },
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "hidden_sizes must be non-empty and positive, got {:?}",
                self.hidden_sizes
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::Config(format!("n_classes must be >= 2, got {}", self.n_classes)));
        }
        if self.hidden_activation != Activation::Relu {
            return Err(Error::Config("hidden activation must be relu".into()));
        }
        let expected = if self.n_classes == 2 {
            Activation::Sigmoid
        } else {
            Activation::Softmax
        };
        if self.output_activation != expected {
            return Err(Error::Config(format!(
                "output activation for {} classes must be {:?}",
                self.n_classes, expected
            )));
        }
        Ok(())
    }

    pub fn output_width(&self) -> usize {
        if self.n_classes == 2 {
            1
        } else {
            self.n_classes
        }
    }

    /// Widths of every layer, input first.
    pub fn layer_widths(&self) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.hidden_sizes.len() + 2);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden_sizes);
        widths.push(self.output_width());
        widths
    }

    pub fn is_binary(&self) -> bool {
        self.n_classes == 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub architecture: MlpArchitecture,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Pre-activations of the hidden layers.
    pub hidden_pre: Vec<Array2<f64>>,
    /// Post-ReLU activations of the hidden layers.
    pub hidden_post: Vec<Array2<f64>>,
}

/// Glorot-uniform weights with zero biases.
///
/// Every weight lies in `±sqrt(6 / (fan_in + fan_out))`.
pub fn init_model(arch: &MlpArchitecture, seed: u64) -> Result<MlpModel> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths = arch.layer_widths();
    let mut weights = Vec::with_capacity(widths.len() - 1);
    let mut biases = Vec::with_capacity(widths.len() - 1);
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = glorot_bound(fan_in, fan_out);
        let dist = Uniform::new_inclusive(-bound, bound);
        weights.push(Array2::from_shape_simple_fn((fan_in, fan_out), || {
            dist.sample(&mut rng)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpModel {
        architecture: arch.clone(),
        weights,
        biases,
    })
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn relu_inplace(z: &mut Array2<f64>) {
    z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

impl MlpModel {
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        let widths = self.architecture.layer_widths();
        if self.weights.len() != widths.len() - 1 || self.biases.len() != widths.len() - 1 {
            return Err(Error::Shape(format!(
                "expected {} layers, found {} weight matrices and {} bias vectors",
                widths.len() - 1,
                self.weights.len(),
                self.biases.len()
            )));
        }
        for (l, pair) in widths.windows(2).enumerate() {
            if self.weights[l].dim() != (pair[0], pair[1]) || self.biases[l].len() != pair[1] {
                return Err(Error::Shape(format!(
                    "layer {l}: expected weights {}x{} and {} biases, found {:?} and {}",
                    pair[0],
                    pair[1],
                    pair[1],
                    self.weights[l].dim(),
                    self.biases[l].len()
                )));
            }
        }
        let finite = self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Input("model contains non-finite parameters".into()));
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.architecture.input_dim {
            return Err(Error::Shape(format!(
                "input has {} columns, model expects {}",
                x.ncols(),
                self.architecture.input_dim
            )));
        }
        Ok(())
    }

    /// Output-layer probabilities: `N × 1` for binary models (probability of
    /// class 1), `N × n_classes` otherwise.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(&x)?;
        let n_hidden = self.weights.len() - 1;
        let mut hidden_pre = Vec::with_capacity(n_hidden);
        let mut hidden_post: Vec<Array2<f64>> = Vec::with_capacity(n_hidden);
        for l in 0..n_hidden {
            let z = {
                let input = if l == 0 { x } else { hidden_post[l - 1].view() };
                input.dot(&self.weights[l]) + &self.biases[l]
            };
            let mut a = z.clone();
            relu_inplace(&mut a);
            hidden_pre.push(z);
            hidden_post.push(a);
        }
        let last = hidden_post.last().map(|a| a.view()).unwrap_or(x);
        let mut out = last.dot(&self.weights[n_hidden]) + &self.biases[n_hidden];
        if self.architecture.is_binary() {
            out.mapv_inplace(sigmoid);
        } else {
            softmax_rows(&mut out);
        }
        Ok((
            out,
            ForwardCache {
                hidden_pre,
                hidden_post,
            },
        ))
    }

    /// `N × n_classes` class probabilities.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let (out, _) = self.forward(x)?;
        Ok(expand_probabilities(&out, self.architecture.n_classes))
    }

    /// Hard class predictions (argmax, ties to the lowest index).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        let (out, _) = self.forward(x)?;
        Ok(argmax_output(&out, self.architecture.n_classes))
    }

    /// Gradient of `data_loss(forward(x), labels) + penalty(weights, reg)`.
    pub fn backward(&self, x: ArrayView2<f64>, labels: &[usize], reg: &RegularizerSpec) -> Result<Gradients> {
        self.loss_and_gradients(x, labels, reg).map(|(_, _, g)| g)
    }

    /// Data loss, penalty value and the gradient of their sum.
    pub(crate) fn loss_and_gradients(
        &self,
        x: ArrayView2<f64>,
        labels: &[usize],
        reg: &RegularizerSpec,
    ) -> Result<(f64, f64, Gradients)> {
        let (probs, cache) = self.forward(x)?;
        let loss = data_loss(&probs, labels, self.architecture.n_classes)?;
        let n = labels.len() as f64;

        // d(mean CE)/d(logits) = (p − onehot) / N for both sigmoid and softmax heads.
        let mut delta = probs;
        if self.architecture.is_binary() {
            for (d, &y) in delta.column_mut(0).iter_mut().zip(labels) {
                *d -= y as f64;
            }
        } else {
            for (mut row, &y) in delta.rows_mut().into_iter().zip(labels) {
                row[y] -= 1.0;
            }
        }
        delta /= n;

        let n_layers = self.weights.len();
        let mut grad_w = vec![Array2::zeros((0, 0)); n_layers];
        let mut grad_b = vec![Array1::zeros(0); n_layers];
        for l in (0..n_layers).rev() {
            let input = if l == 0 { x } else { cache.hidden_post[l - 1].view() };
            grad_w[l] = input.t().dot(&delta);
            grad_b[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut next = delta.dot(&self.weights[l].t());
                ndarray::Zip::from(&mut next)
                    .and(&cache.hidden_pre[l - 1])
                    .for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    });
                delta = next;
            }
        }

        let mut pen = 0.0;
        if !reg.is_unregularized() {
            pen = regularizers::penalty(&self.weights, reg)?;
            let reg_grads = regularizers::penalty_subgradient(&self.weights, reg)?;
            for (g, r) in grad_w.iter_mut().zip(reg_grads) {
                *g += &r;
            }
        }
        Ok((
            loss,
            pen,
            Gradients {
                weights: grad_w,
                biases: grad_b,
            },
        ))
    }
}

/// Widen a binary `N × 1` output to `N × 2`; multiclass outputs are returned as is.
pub fn expand_probabilities(out: &Array2<f64>, n_classes: usize) -> Array2<f64> {
    if n_classes == 2 && out.ncols() == 1 {
        Array2::from_shape_fn(
            (out.nrows(), 2),
            |(i, j)| if j == 1 { out[[i, 0]] } else { 1.0 - out[[i, 0]] },
        )
    } else {
        out.clone()
    }
}

fn argmax_output(out: &Array2<f64>, n_classes: usize) -> Vec<usize> {
    if n_classes == 2 && out.ncols() == 1 {
        out.column(0).iter().map(|&p| usize::from(p > 0.5)).collect()
    } else {
        out.rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Mean binary or categorical cross-entropy with probabilities clamped to
/// `[1e-12, 1 − 1e-12]`.
///
/// `probs` is the raw output of [`MlpModel::forward`].
pub fn data_loss(probs: &Array2<f64>, labels: &[usize], n_classes: usize) -> Result<f64> {
    if probs.nrows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} labels",
            probs.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Input("cannot compute loss of an empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    let clamp = |p: f64| p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let total: f64 = if probs.ncols() == 1 {
        probs
            .column(0)
            .iter()
            .zip(labels)
            .map(|(&p, &y)| {
                let p = clamp(p);
                if y == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum()
    } else {
        if probs.ncols() != n_classes {
            return Err(Error::Shape(format!(
                "{} probability columns for {} classes",
                probs.ncols(),
                n_classes
            )));
        }
        probs
            .rows()
            .into_iter()
            .zip(labels)
            .map(|(row, &y)| -clamp(row[y]).ln())
            .sum()
    };
    Ok(total / labels.len() as f64)
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(a, b)| a == b).count();
    hits as f64 / labels.len() as f64
}
