//! Boundary accuracy and frame-tagging metrics.

use ndarray::ArrayView2;
use serde::Serialize;
use thiserror::Error;

use crate::inventory::FoldingTable;
use crate::textgrid::AlignedTier;

/// Tolerance thresholds (ms) reported by default.
pub const DEFAULT_TOLERANCES_MS: [f64; 5] = [10.0, 20.0, 25.0, 50.0, 100.0];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no errors to summarize")]
    Empty,
    #[error("segment count differs: reference has {reference}, hypothesis has {hypothesis}")]
    LengthMismatch { reference: usize, hypothesis: usize },
    #[error(
        "labels diverge at segment {index}: reference {reference:?}, hypothesis {hypothesis:?}"
    )]
    LabelMismatch {
        index: usize,
        reference: String,
        hypothesis: String,
    },
    #[error("thresholds must be positive and ascending")]
    BadThresholds,
    #[error("matrix shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("threshold must lie in (0, 1)")]
    BadCutoff,
    #[error("truth matrix has no {0} cells; rate undefined")]
    Degenerate(&'static str),
}

/// Absolute boundary errors in milliseconds, paired positionally. The tiers
/// must carry the same labels (after optional folding); the final segment
/// end is not a predicted boundary and is skipped.
pub fn boundary_abs_errors(
    reference: &AlignedTier,
    hypothesis: &AlignedTier,
    folding: Option<&FoldingTable>,
) -> Result<Vec<f64>, EvalError> {
    let (r, h) = (&reference.segments, &hypothesis.segments);
    let fold = |l: &str| folding.map_or(l.to_string(), |f| f.fold(l).to_string());
    for (index, (a, b)) in r.iter().zip(h).enumerate() {
        let (fa, fb) = (fold(&a.label), fold(&b.label));
        if fa != fb {
            return Err(EvalError::LabelMismatch {
                index,
                reference: fa,
                hypothesis: fb,
            });
        }
    }
    if r.len() != h.len() {
        return Err(EvalError::LengthMismatch {
            reference: r.len(),
            hypothesis: h.len(),
        });
    }
    Ok(reference
        .boundaries()
        .iter()
        .zip(hypothesis.boundaries())
        .map(|(a, b)| 1000.0 * (a - b).abs())
        .collect())
}

/// Arithmetic mean and median (midpoint average for even counts).
pub fn summarize_errors(errors: &[f64]) -> Result<(f64, f64), EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    Ok((mean, median))
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn check_thresholds(thresholds: &[f64]) -> Result<(), EvalError> {
    let positive = thresholds.iter().all(|&t| t > 0.0 && t.is_finite());
    let ascending = thresholds.windows(2).all(|w| w[0] < w[1]);
    if positive && ascending {
        Ok(())
    } else {
        Err(EvalError::BadThresholds)
    }
}

/// Percent of errors strictly below each threshold, rounded to 2 decimals.
pub fn tolerance_table(errors: &[f64], thresholds: &[f64]) -> Result<Vec<f64>, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    check_thresholds(thresholds)?;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let below = errors.iter().filter(|&&e| e < t).count();
            round2(100.0 * (below as f64 / errors.len() as f64))
        })
        .collect())
}

/// Right-continuous empirical CDF: `(x, fraction of errors <= x)` at every
/// distinct error value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    pub points: Vec<(f64, f64)>,
}

impl EmpiricalCdf {
    /// `F(x)`, the fraction of errors `<= x`.
    pub fn at(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&(v, _)| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }

    /// `F(x-)`, the fraction of errors `< x`.
    pub fn below(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&(v, _)| v < x);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }
}

pub fn empirical_cdf(errors: &[f64]) -> Result<EmpiricalCdf, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => points.push((v, frac)),
        }
    }
    Ok(EmpiricalCdf { points })
}

/// Pooled boundary accuracy for a set of utterances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryErrorReport {
    pub abs_errors: Vec<f64>,
    pub mean_ms: f64,
    pub median_ms: f64,
    /// `(threshold ms, percent below)`
    pub tolerance_rows: Vec<(f64, f64)>,
    pub cdf: EmpiricalCdf,
}

impl BoundaryErrorReport {
    pub fn from_errors(errors: Vec<f64>, thresholds: &[f64]) -> Result<Self, EvalError> {
        let (mean_ms, median_ms) = summarize_errors(&errors)?;
        let percents = tolerance_table(&errors, thresholds)?;
        let cdf = empirical_cdf(&errors)?;
        Ok(Self {
            tolerance_rows: thresholds.iter().copied().zip(percents).collect(),
            abs_errors: errors,
            mean_ms,
            median_ms,
            cdf,
        })
    }

    /// `threshold<TAB>percent` lines with a header.
    pub fn tolerance_tsv(&self) -> String {
        let mut out = String::from("threshold_ms\tpercent\n");
        for (t, p) in &self.tolerance_rows {
            out.push_str(&format!("{t:.6}\t{p:.6}\n"));
        }
        out
    }

    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("error_ms,cumulative_fraction\n");
        for (x, f) in &self.cdf.points {
            out.push_str(&format!("{x:.6},{f:.6}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameMetricReport {
    pub sensitivity: f64,
    pub specificity: f64,
    pub balanced_accuracy: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl FrameMetricReport {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Result<Self, EvalError> {
        if tp + fn_ == 0 {
            return Err(EvalError::Degenerate("positive"));
        }
        if tn + fp == 0 {
            return Err(EvalError::Degenerate("negative"));
        }
        let sensitivity = tp as f64 / (tp + fn_) as f64;
        let specificity = tn as f64 / (tn + fp) as f64;
        Ok(Self {
            sensitivity,
            specificity,
            balanced_accuracy: (sensitivity + specificity) / 2.0,
            tp,
            tn,
            fp,
            fn_,
        })
    }
}

/// Pooled sensitivity/specificity over every frame-label cell. A prediction
/// is positive when its probability exceeds `threshold`; truth cells are
/// positive when nonzero.
pub fn frame_metrics(
    predicted: ArrayView2<'_, f64>,
    truth: ArrayView2<'_, f64>,
    threshold: f64,
) -> Result<FrameMetricReport, EvalError> {
    if predicted.dim() != truth.dim() {
        return Err(EvalError::ShapeMismatch(predicted.dim(), truth.dim()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::BadCutoff);
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth.iter()) {
        match (p > threshold, t != 0.0) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    FrameMetricReport::from_counts(tp, tn, fp, fn_)
}
