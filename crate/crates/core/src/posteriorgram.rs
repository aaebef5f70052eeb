//! Per-frame class probabilities produced by an acoustic model.
//!
//! Text layout (`PGRAM1`):
//!
//! ```text
//! PGRAM1
//! <k> <T>
//! <sym_1> ... <sym_k>
//! <p_1,1> ... <p_k,1>      # one line per frame
//! ...
//! ```

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView1};
use thiserror::Error;

use crate::inventory::{InventoryError, PhoneId, PhoneSet};

pub const PGRAM_MAGIC: &str = "PGRAM1";

#[derive(Debug, Error)]
pub enum PosteriorgramError {
    #[error("probability matrix has {rows} rows but the phone set has {phones} symbols")]
    ShapeMismatch { rows: usize, phones: usize },
    #[error("posteriorgram has no frames")]
    Empty,
    #[error("probability at class {class}, frame {frame} is {value}; expected a value in [0, 1]")]
    OutOfRange {
        class: usize,
        frame: usize,
        value: f64,
    },
    #[error("frame {frame} sums to {sum}; expected 1")]
    NotNormalized { frame: usize, sum: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Inventory(#[from] InventoryError),
}

/// Probability matrix (`k` classes by `T` frames) with its symbol table.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriorgram {
    probs: Array2<f64>,
    phones: PhoneSet,
}

impl Posteriorgram {
    /// `probs` is `k x T`. Every entry must be finite and within `[0, 1]`.
    pub fn new(probs: Array2<f64>, phones: PhoneSet) -> Result<Self, PosteriorgramError> {
        if probs.nrows() != phones.len() {
            return Err(PosteriorgramError::ShapeMismatch {
                rows: probs.nrows(),
                phones: phones.len(),
            });
        }
        if probs.ncols() == 0 {
            return Err(PosteriorgramError::Empty);
        }
        for ((class, frame), &value) in probs.indexed_iter() {
            if !(0.0..=1.0).contains(&value) {
                return Err(PosteriorgramError::OutOfRange {
                    class,
                    frame,
                    value,
                });
            }
        }
        Ok(Self { probs, phones })
    }

    /// Build from frame-major rows (`T` rows of `k` probabilities).
    pub fn from_frames(frames: &[Vec<f64>], phones: PhoneSet) -> Result<Self, PosteriorgramError> {
        let k = phones.len();
        let mut probs = Array2::zeros((k, frames.len()));
        for (t, row) in frames.iter().enumerate() {
            if row.len() != k {
                return Err(PosteriorgramError::ShapeMismatch {
                    rows: row.len(),
                    phones: k,
                });
            }
            for (c, &p) in row.iter().enumerate() {
                probs[[c, t]] = p;
            }
        }
        Self::new(probs, phones)
    }

    pub fn num_classes(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_frames(&self) -> usize {
        self.probs.ncols()
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn phones(&self) -> &PhoneSet {
        &self.phones
    }

    pub fn prob(&self, class: PhoneId, frame: usize) -> f64 {
        self.probs[[class.0, frame]]
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, f64> {
        self.probs.column(t)
    }

    /// Softmax-mode check: every frame sums to one within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<(), PosteriorgramError> {
        for (frame, col) in self.probs.columns().into_iter().enumerate() {
            let sum = col.sum();
            if (sum - 1.0).abs() > tol {
                return Err(PosteriorgramError::NotNormalized { frame, sum });
            }
        }
        Ok(())
    }

    /// Serialize to the `PGRAM1` text layout. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{PGRAM_MAGIC}");
        let _ = writeln!(out, "{} {}", self.num_classes(), self.num_frames());
        let _ = writeln!(out, "{}", self.phones.symbols().join(" "));
        for col in self.probs.columns() {
            let line: Vec<String> = col.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PosteriorgramError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, message: String| PosteriorgramError::Parse { line, message };

        let (line, magic) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        if magic != PGRAM_MAGIC {
            return Err(parse_err(
                line,
                format!("expected magic {PGRAM_MAGIC:?}, found {magic:?}"),
            ));
        }
        let (line, dims) = lines
            .next()
            .ok_or_else(|| parse_err(line + 1, "missing \"k T\" line".into()))?;
        let dims: Vec<usize> = dims
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(line, format!("bad dimensions: {e}")))?;
        let [k, t] = dims[..] else {
            return Err(parse_err(
                line,
                "expected exactly two integers \"k T\"".into(),
            ));
        };
        let (line, syms) = lines
            .next()
            .ok_or_else(|| parse_err(line + 1, "missing symbol line".into()))?;
        let syms: Vec<&str> = syms.split_whitespace().collect();
        if syms.len() != k {
            return Err(parse_err(
                line,
                format!("expected {k} symbols, found {}", syms.len()),
            ));
        }
        let phones = PhoneSet::new(syms)?;

        let mut probs = Array2::zeros((k, t));
        let mut last = line;
        for frame in 0..t {
            let (line, row) = lines.next().ok_or_else(|| {
                parse_err(last + 1, format!("expected {t} frames, found {frame}"))
            })?;
            last = line;
            let values: Vec<&str> = row.split_whitespace().collect();
            if values.len() != k {
                return Err(parse_err(
                    line,
                    format!("expected {k} values, found {}", values.len()),
                ));
            }
            for (c, v) in values.into_iter().enumerate() {
                let p: f64 = v
                    .parse()
                    .map_err(|_| parse_err(line, format!("invalid number {v:?}")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(parse_err(line, format!("probability {v} outside [0, 1]")));
                }
                probs[[c, frame]] = p;
            }
        }
        if let Some((line, _)) = lines.next() {
            return Err(parse_err(line, "trailing data after last frame".into()));
        }
        Self::new(probs, phones)
    }
}
