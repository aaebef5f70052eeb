//! Classification and tagging output layers: probabilities, losses, their
//! closed-form logit gradients, and a small linear scorer that trains with
//! them.
//!
//! Losses use log-sum-exp / softplus forms; gradients use the closed forms
//! `softmax(z) - onehot(p)` and `sigmoid(z) - y`.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::features::FeatureMatrix;
use crate::inventory::{PhoneId, PhoneSet};
use crate::posteriorgram::{Posteriorgram, PosteriorgramError};

pub const SCORER_MAGIC: &[u8; 8] = b"MAPSLIN1";

/// Positive-class weight for the tagging loss.
pub const DEFAULT_POS_WEIGHT: f64 = 30.0;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("empty vector")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("class index {index} out of range for {len} classes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("target entries must be 0 or 1, found {0}")]
    InvalidTarget(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("scorer file: {0}")]
    Format(String),
    #[error(transparent)]
    Posteriorgram(#[from] PosteriorgramError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Output activation of a scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// One distribution per frame, trained with categorical cross-entropy.
    Softmax,
    /// Independent per-class probabilities, trained with binary cross-entropy.
    Sigmoid,
}

/// Binary indicator vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector(Vec<f64>);

impl TargetVector {
    pub fn new(values: Vec<f64>) -> Result<Self, LossError> {
        if let Some(&bad) = values.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(LossError::InvalidTarget(bad));
        }
        Ok(Self(values))
    }

    pub fn one_hot(len: usize, index: usize) -> Result<Self, LossError> {
        if index >= len {
            return Err(LossError::IndexOutOfRange { index, len });
        }
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Ok(Self(v))
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self, LossError> {
        let mut v = vec![0.0; len];
        for &i in indices {
            if i >= len {
                return Err(LossError::IndexOutOfRange { index: i, len });
            }
            v[i] = 1.0;
        }
        Ok(Self(v))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices set to 1.
    pub fn positives(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1.0)
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_len(left: usize, right: usize) -> Result<(), LossError> {
    if left != right {
        return Err(LossError::LengthMismatch { left, right });
    }
    Ok(())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the most probable class; the lowest index wins ties.
pub fn classify(p: &[f64]) -> Result<usize, LossError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in p.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or(LossError::Empty)
}

/// Base-2 entropy in bits, with `0 log 0 = 0`.
pub fn posterior_entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Categorical cross-entropy of logits `z` against positive class `p`.
pub fn cce_loss(z: &[f64], p: usize) -> Result<f64, LossError> {
    if p >= z.len() {
        return Err(LossError::IndexOutOfRange {
            index: p,
            len: z.len(),
        });
    }
    Ok(log_sum_exp(z) - z[p])
}

/// d cce / d z: `softmax(z)_i - [i == p]`.
pub fn cce_gradient(z: &[f64], p: usize) -> Result<Vec<f64>, LossError> {
    if p >= z.len() {
        return Err(LossError::IndexOutOfRange {
            index: p,
            len: z.len(),
        });
    }
    let mut g = softmax(z);
    g[p] -= 1.0;
    Ok(g)
}

/// Summed binary cross-entropy of sigmoid outputs.
pub fn bce_loss(z: &[f64], y: &TargetVector) -> Result<f64, LossError> {
    weighted_bce_loss(z, y, 1.0)
}

/// d bce / d z_i: `-1 / (e^z_i + 1)` for positives, `e^z_i / (e^z_i + 1)`
/// for negatives.
pub fn bce_gradient(z: &[f64], y: &TargetVector) -> Result<Vec<f64>, LossError> {
    check_len(z.len(), y.len())?;
    Ok(z.iter()
        .zip(y.values())
        .map(|(&zi, &yi)| {
            if yi == 1.0 {
                -sigmoid(-zi)
            } else {
                sigmoid(zi)
            }
        })
        .collect())
}

/// Binary cross-entropy with the loss of positive targets scaled by
/// `pos_weight`: `sum_i w y_i softplus(-z_i) + (1 - y_i) softplus(z_i)`.
pub fn weighted_bce_loss(z: &[f64], y: &TargetVector, pos_weight: f64) -> Result<f64, LossError> {
    check_len(z.len(), y.len())?;
    if !(pos_weight > 0.0) {
        return Err(LossError::NonPositive("pos_weight"));
    }
    Ok(z.iter()
        .zip(y.values())
        .map(|(&zi, &yi)| pos_weight * yi * softplus(-zi) + (1.0 - yi) * softplus(zi))
        .sum())
}

/// Gradient of [`weighted_bce_loss`] with respect to the logits.
pub fn weighted_bce_gradient(
    z: &[f64],
    y: &TargetVector,
    pos_weight: f64,
) -> Result<Vec<f64>, LossError> {
    check_len(z.len(), y.len())?;
    if !(pos_weight > 0.0) {
        return Err(LossError::NonPositive("pos_weight"));
    }
    Ok(z.iter()
        .zip(y.values())
        .map(|(&zi, &yi)| {
            if yi == 1.0 {
                -pos_weight * sigmoid(-zi)
            } else {
                sigmoid(zi)
            }
        })
        .collect())
}

/// Multi-label targets from a crisp model's output: every class at least as
/// probable as the crisp label is tagged. Comparison is exact.
pub fn derive_sparse_targets(
    posteriors: &Posteriorgram,
    crisp_labels: &[PhoneId],
) -> Result<Vec<TargetVector>, LossError> {
    check_len(posteriors.num_frames(), crisp_labels.len())?;
    let k = posteriors.num_classes();
    crisp_labels
        .iter()
        .enumerate()
        .map(|(t, label)| {
            if label.0 >= k {
                return Err(LossError::IndexOutOfRange {
                    index: label.0,
                    len: k,
                });
            }
            let frame = posteriors.frame(t);
            let floor = frame[label.0];
            Ok(TargetVector(
                frame
                    .iter()
                    .map(|&p| if p >= floor { 1.0 } else { 0.0 })
                    .collect(),
            ))
        })
        .collect()
}

/// Mean number of tagged classes per frame.
pub fn mean_tags_per_frame(targets: &[TargetVector]) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    let total: usize = targets.iter().map(|t| t.positives().len()).sum();
    total as f64 / targets.len() as f64
}

/// Single linear layer `z = W x` followed by softmax or sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    /// `k x d`
    pub weights: Array2<f64>,
    pub activation: Activation,
}

impl LinearScorer {
    pub fn new(weights: Array2<f64>, activation: Activation) -> Result<Self, LossError> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(LossError::NonFinite("weights"));
        }
        Ok(Self {
            weights,
            activation,
        })
    }

    pub fn zeros(classes: usize, dim: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((classes, dim)),
            activation,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn logits(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>, LossError> {
        check_len(self.input_dim(), x.len())?;
        Ok(self.weights.dot(&x))
    }

    pub fn probabilities(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>, LossError> {
        let z = self.logits(x)?;
        Ok(match self.activation {
            Activation::Softmax => softmax(z.as_slice().expect("contiguous logits")),
            Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
        })
    }

    /// Score every frame; the result is `k x T` with `phones` as symbols.
    pub fn score_frames(
        &self,
        features: &FeatureMatrix,
        phones: &PhoneSet,
    ) -> Result<Posteriorgram, LossError> {
        let t = features.num_frames();
        let mut probs = Array2::zeros((self.num_classes(), t));
        for (u, row) in features.frames.rows().into_iter().enumerate() {
            for (c, p) in self.probabilities(row)?.into_iter().enumerate() {
                probs[[c, u]] = p;
            }
        }
        Ok(Posteriorgram::new(probs, phones.clone())?)
    }

    /// One SGD step on example `(x, y)`; returns the updated scorer.
    /// Softmax scorers need a one-hot `y`.
    pub fn gradient_step(
        &self,
        x: ArrayView1<'_, f64>,
        y: &TargetVector,
        rate: f64,
    ) -> Result<Self, LossError> {
        if !(rate >= 0.0) {
            return Err(LossError::NonPositive("learning rate"));
        }
        check_len(self.num_classes(), y.len())?;
        let z = self.logits(x)?;
        let z = z.as_slice().expect("contiguous logits");
        let grad = match self.activation {
            Activation::Softmax => {
                let pos = y.positives();
                let [p] = pos[..] else {
                    return Err(LossError::InvalidTarget(pos.len() as f64));
                };
                cce_gradient(z, p)?
            }
            Activation::Sigmoid => bce_gradient(z, y)?,
        };
        let mut weights = self.weights.clone();
        for (c, g) in grad.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                weights[[c, j]] -= rate * g * xj;
            }
        }
        Ok(Self {
            weights,
            activation: self.activation,
        })
    }

    /// Serialize: magic, u32 k, u32 d, activation byte, row-major f32 (LE).
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), LossError> {
        out.write_all(SCORER_MAGIC)?;
        out.write_all(&(self.num_classes() as u32).to_le_bytes())?;
        out.write_all(&(self.input_dim() as u32).to_le_bytes())?;
        out.write_all(&[match self.activation {
            Activation::Softmax => 0,
            Activation::Sigmoid => 1,
        }])?;
        for w in self.weights.iter() {
            out.write_all(&(*w as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, LossError> {
        let fmt = |m: &str| LossError::Format(m.to_string());
        let mut magic = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|_| fmt("truncated header"))?;
        if &magic != SCORER_MAGIC {
            return Err(fmt("bad magic"));
        }
        let mut word = [0u8; 4];
        input
            .read_exact(&mut word)
            .map_err(|_| fmt("truncated header"))?;
        let k = u32::from_le_bytes(word) as usize;
        input
            .read_exact(&mut word)
            .map_err(|_| fmt("truncated header"))?;
        let d = u32::from_le_bytes(word) as usize;
        let mut mode = [0u8; 1];
        input
            .read_exact(&mut mode)
            .map_err(|_| fmt("truncated header"))?;
        let activation = match mode[0] {
            0 => Activation::Softmax,
            1 => Activation::Sigmoid,
            m => return Err(LossError::Format(format!("unknown activation byte {m}"))),
        };
        let mut data = Vec::with_capacity(k * d);
        for _ in 0..k * d {
            input
                .read_exact(&mut word)
                .map_err(|_| fmt("truncated weights"))?;
            data.push(f32::from_le_bytes(word) as f64);
        }
        let weights =
            Array2::from_shape_vec((k, d), data).map_err(|e| LossError::Format(e.to_string()))?;
        Self::new(weights, activation)
    }
}
