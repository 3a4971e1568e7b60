use ndarray::{Array1, Array2, ArrayView2, Axis, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{accuracy, init_model, MlpArchitecture, MlpModel};
use crate::error::{Error, Result};
use crate::regularizers::RegularizerSpec;

/// Mini-batch Adam settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds both weight initialization and the per-epoch shuffle.
    pub seed: u64,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_epsilon")]
    pub adam_epsilon: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl TrainConfig {
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            batch_size,
            epochs,
            seed,
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_epsilon: default_epsilon(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) || !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return Err(Error::Config("adam betas must lie in (0, 1)".into()));
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::Config("adam_epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Sample-weighted mean of the mini-batch data losses.
    pub data_loss: f64,
    /// Mean penalty value over the epoch's updates.
    pub penalty: f64,
    pub objective: f64,
    /// Accuracy on the full training set after the epoch.
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

struct Moments<D: Dimension> {
    m: ndarray::Array<f64, D>,
    v: ndarray::Array<f64, D>,
}

impl<D: Dimension> Moments<D> {
    fn new(shape: D) -> Self {
        Self {
            m: ndarray::Array::zeros(shape.clone()),
            v: ndarray::Array::zeros(shape),
        }
    }

    fn step(
        &mut self,
        param: &mut ndarray::Array<f64, D>,
        grad: &ndarray::Array<f64, D>,
        lr_t: f64,
        cfg: &TrainConfig,
    ) {
        let (b1, b2, eps) = (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
        Zip::from(param)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(grad)
            .for_each(|p, m, v, &g| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_t * *m / (v.sqrt() + eps);
            });
    }
}

struct Adam {
    weights: Vec<Moments<ndarray::Ix2>>,
    biases: Vec<Moments<ndarray::Ix1>>,
    t: i32,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| Moments::new(w.raw_dim())).collect(),
            biases: model.biases.iter().map(|b| Moments::new(b.raw_dim())).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &super::Gradients, cfg: &TrainConfig) {
        self.t += 1;
        // bias correction folded into the step size
        let lr_t = cfg.learning_rate * (1.0 - cfg.adam_beta2.powi(self.t)).sqrt() / (1.0 - cfg.adam_beta1.powi(self.t));
        for ((w, g), mom) in model.weights.iter_mut().zip(&grads.weights).zip(&mut self.weights) {
            mom.step(w, g, lr_t, cfg);
        }
        for ((b, g), mom) in model.biases.iter_mut().zip(&grads.biases).zip(&mut self.biases) {
            mom.step(b, g, lr_t, cfg);
        }
    }
}

fn gather_rows(x: &ArrayView2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

/// Train a freshly initialized network with mini-batch Adam on the
/// objective `mean cross-entropy + penalty`.
///
/// `x` must already be standardized. Batches are drawn from a seeded shuffle
/// each epoch; the final partial batch is kept.
pub fn train(
    x: ArrayView2<f64>,
    labels: &[usize],
    arch: &MlpArchitecture,
    cfg: &TrainConfig,
    reg: &RegularizerSpec,
) -> Result<(MlpModel, TrainHistory)> {
    let model = init_model(arch, cfg.seed)?;
    train_from(model, x, labels, cfg, reg)
}

/// Continue training from an existing parameter set.
pub fn train_from(
    mut model: MlpModel,
    x: ArrayView2<f64>,
    labels: &[usize],
    cfg: &TrainConfig,
    reg: &RegularizerSpec,
) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    reg.validate()?;
    model.validate()?;
    if x.nrows() != labels.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", x.nrows(), labels.len())));
    }
    if x.nrows() == 0 {
        return Err(Error::Input("training set is empty".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("training inputs contain non-finite values".into()));
    }
    let n_classes = model.architecture.n_classes;
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut penalty_sum = 0.0;
        let mut n_batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let xb = gather_rows(&x, batch);
            let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, pen, grads) = model.loss_and_gradients(xb.view(), &yb, reg).map_err(|e| match e {
                Error::Singular { .. } => Error::Diverged { epoch },
                other => other,
            })?;
            if !loss.is_finite() || !pen.is_finite() || !all_finite(&grads.weights, &grads.biases) {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += loss * batch.len() as f64;
            penalty_sum += pen;
            n_batches += 1;
            adam.step(&mut model, &grads, cfg);
        }
        if !all_finite(&model.weights, &model.biases) {
            return Err(Error::Diverged { epoch });
        }
        let data_loss = loss_sum / x.nrows() as f64;
        let penalty = penalty_sum / n_batches as f64;
        let train_accuracy = accuracy(&model.predict(x)?, labels);
        history.epochs.push(EpochRecord {
            data_loss,
            penalty,
            objective: data_loss + penalty,
            train_accuracy,
        });
    }
    Ok((model, history))
}

fn all_finite(w: &[Array2<f64>], b: &[Array1<f64>]) -> bool {
    w.iter().all(|m| m.iter().all(|v| v.is_finite())) && b.iter().all(|m| m.iter().all(|v| v.is_finite()))
}
