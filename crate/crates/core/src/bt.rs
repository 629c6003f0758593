//! Linear Bradley-Terry reward model.
//!
//! A scorer `s(f) = w . f + b` is fitted on preference pairs by minimizing
//! the mean of `-ln sigmoid(s(f_w) - s(f_l))`. The bias cancels in every
//! difference; it is kept so fitted params can score single responses.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BtError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no preference pairs")]
    Empty,
    #[error("feature vectors must be finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair<T> {
    #[serde(rename = "fw")]
    pub preferred: Vec<T>,
    #[serde(rename = "fl")]
    pub rejected: Vec<T>,
}

impl<T: Real> PreferencePair<T> {
    pub fn new(preferred: Vec<T>, rejected: Vec<T>) -> Self {
        Self { preferred, rejected }
    }

    pub fn swapped(&self) -> Self {
        Self {
            preferred: self.rejected.clone(),
            rejected: self.preferred.clone(),
        }
    }

    fn diff(&self) -> impl Iterator<Item = T> + '_ {
        self.preferred.iter().zip(&self.rejected).map(|(&w, &l)| w - l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Real> ScorerParams<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![T::zero(); dim],
            bias: T::zero(),
        }
    }

    pub fn score(&self, features: &[T]) -> T {
        dot(&self.weights, features) + self.bias
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus<T: Real>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// Common feature dimension of a pair list.
pub fn dimension<T: Real>(pairs: &[PreferencePair<T>]) -> Result<usize, BtError> {
    let first = pairs.first().ok_or(BtError::Empty)?;
    let d = first.preferred.len();
    if d == 0 {
        return Err(BtError::DimensionMismatch { expected: 1, got: 0 });
    }
    for p in pairs {
        for v in [&p.preferred, &p.rejected] {
            if v.len() != d {
                return Err(BtError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(BtError::NonFinite);
            }
        }
    }
    Ok(d)
}

fn check_params<T: Real>(params: &ScorerParams<T>, d: usize) -> Result<(), BtError> {
    if params.dim() != d {
        return Err(BtError::DimensionMismatch {
            expected: d,
            got: params.dim(),
        });
    }
    Ok(())
}

fn margin<T: Real>(params: &ScorerParams<T>, pair: &PreferencePair<T>) -> T {
    params.weights.iter().zip(pair.diff()).map(|(&w, d)| w * d).sum()
}

/// Mean negative log-likelihood over the pairs.
pub fn bt_loss<T: Real>(params: &ScorerParams<T>, pairs: &[PreferencePair<T>]) -> Result<T, BtError> {
    let d = dimension(pairs)?;
    check_params(params, d)?;
    let total: T = pairs.iter().map(|p| softplus(-margin(params, p))).sum();
    Ok(total / T::from_count(pairs.len()))
}

/// Analytic gradient of [`bt_loss`]. The bias component is always zero.
pub fn bt_grad<T: Real>(params: &ScorerParams<T>, pairs: &[PreferencePair<T>]) -> Result<ScorerParams<T>, BtError> {
    let d = dimension(pairs)?;
    check_params(params, d)?;
    let mut grad = ScorerParams::zeros(d);
    let n = T::from_count(pairs.len());
    for p in pairs {
        let coef = -(T::one() - sigmoid(margin(params, p))) / n;
        for (g, x) in grad.weights.iter_mut().zip(p.diff()) {
            *g = *g + coef * x;
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct FitConfig<T> {
    pub steps: usize,
    pub lr: T,
    /// Coefficient of `0.5 * l2 * |w|^2` added to the objective.
    pub l2: T,
    /// Pairs per step; `None` means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl<T: Real> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            steps: 500,
            lr: T::lit(0.5),
            l2: T::zero(),
            batch_size: None,
            seed: 0,
        }
    }
}

fn objective<T: Real>(params: &ScorerParams<T>, pairs: &[PreferencePair<T>], l2: T) -> Result<T, BtError> {
    let reg = T::lit(0.5) * l2 * dot(&params.weights, &params.weights);
    Ok(bt_loss(params, pairs)? + reg)
}

/// Gradient descent from zero weights.
///
/// Returns the iterate with the lowest full-data objective seen, so the result
/// never scores worse than the zero scorer's `ln 2`.
pub fn fit<T: Real>(pairs: &[PreferencePair<T>], cfg: &FitConfig<T>) -> Result<ScorerParams<T>, BtError> {
    let d = dimension(pairs)?;
    let mut params = ScorerParams::zeros(d);
    let mut best = params.clone();
    let mut best_obj = objective(&params, pairs, cfg.l2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batch = Vec::new();
    for _ in 0..cfg.steps {
        let grad = match cfg.batch_size {
            Some(b) if b < pairs.len() => {
                batch.clear();
                batch.extend(
                    index::sample(&mut rng, pairs.len(), b.max(1))
                        .into_iter()
                        .map(|i| pairs[i].clone()),
                );
                bt_grad(&params, &batch)?
            }
            _ => bt_grad(&params, pairs)?,
        };
        for (w, g) in params.weights.iter_mut().zip(&grad.weights) {
            *w = *w - cfg.lr * (*g + cfg.l2 * *w);
        }
        let obj = objective(&params, pairs, cfg.l2)?;
        if obj < best_obj {
            best_obj = obj;
            best = params.clone();
        }
    }
    Ok(best)
}
