use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;

pub const FLIP_FRACTION: f64 = 0.10;
/// Vertical half-width of the noisy band around the boundary.
pub const BAND_HALF_WIDTH: f64 = 0.2;

/// Height of the class boundary at horizontal position `x`.
pub fn boundary(x: f64) -> f64 {
    5.0 * (x - 0.5).powi(2) + 0.4
}

/// Which population the flip fraction is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipScope {
    /// `round(fraction · band size)` band points are flipped.
    Band,
    /// `round(fraction · n)` band points are flipped, capped at the band size.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolaConfig {
    pub n: usize,
    pub seed: u64,
    pub flip_fraction: f64,
    pub flip_scope: FlipScope,
}

impl ParabolaConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            flip_fraction: FLIP_FRACTION,
            flip_scope: FlipScope::Band,
        }
    }
}

/// Which rows lie in the band and which of them had their label flipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolaInfo {
    pub band: Vec<usize>,
    pub flipped: Vec<usize>,
    pub config: ParabolaConfig,
}

/// `n` points uniform on the unit square, class 1 above the parabola, with
/// 10% of the points in the band around it flipped.
pub fn generate_parabola(n: usize, seed: u64) -> Dataset {
    generate_parabola_with(&ParabolaConfig::new(n, seed)).0
}

pub fn generate_parabola_with(cfg: &ParabolaConfig) -> (Dataset, ParabolaInfo) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = Array2::zeros((cfg.n, 2));
    let mut y = Vec::with_capacity(cfg.n);
    let mut band = Vec::new();
    for i in 0..cfg.n {
        let (px, py): (f64, f64) = (rng.gen(), rng.gen());
        x[[i, 0]] = px;
        x[[i, 1]] = py;
        let b = boundary(px);
        y.push(usize::from(py > b));
        if (py - b).abs() <= BAND_HALF_WIDTH {
            band.push(i);
        }
    }
    let population = match cfg.flip_scope {
        FlipScope::Band => band.len(),
        FlipScope::All => cfg.n,
    };
    let k = ((cfg.flip_fraction * population as f64).round() as usize).min(band.len());
    let mut flipped: Vec<usize> = index::sample(&mut rng, band.len(), k)
        .into_iter()
        .map(|j| band[j])
        .collect();
    flipped.sort_unstable();
    for &i in &flipped {
        y[i] = 1 - y[i];
    }
    let ds = Dataset {
        x,
        y,
        feature_names: vec!["x".into(), "y".into()],
        class_names: vec!["negative".into(), "positive".into()],
        n_classes: 2,
        source: format!("parabola:n={},seed={}", cfg.n, cfg.seed),
        encoding: Vec::new(),
    };
    (
        ds,
        ParabolaInfo {
            band,
            flipped,
            config: cfg.clone(),
        },
    )
}
