#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Forced alignment of phone sequences against acoustic posteriorgrams.
//!
//! The pipeline runs: transcript words through a pronunciation dictionary
//! and label folding ([`inventory`]), audio through MFCC features
//! ([`features`]) and an acoustic scorer into a [`Posteriorgram`], then a
//! monotone DP decode with optional sub-frame boundary interpolation
//! ([`decoder`]) into a TextGrid tier ([`aligner`], [`textgrid`]).
//! [`evaluation`] measures boundary errors against reference tiers and
//! [`loss`] holds the output-layer math used to train scorers.

pub mod aligner;
pub mod decoder;
pub mod evaluation;
pub mod features;
pub mod inventory;
pub mod loss;
pub mod posteriorgram;
pub mod synthetic;
pub mod textgrid;

pub use aligner::{
    align_audio, align_posteriorgram, transcription_to_targets, AcousticScorer, AlignError,
    AlignOptions, LinearAcousticScorer, PrecomputedScorer,
};
pub use decoder::{
    boundary_time, decode, interpolate_crossing, refine_boundaries, AlignmentPath, BoundarySet,
    CostMatrix, DecodeError, InterpolationSource, RefineOptions, TargetSequence,
};
pub use evaluation::{BoundaryErrorReport, EvalError, FrameMetricReport};
pub use features::{
    compute_features, label_frames, Audio, FeatureConfig, FeatureError, FeatureMatrix,
};
pub use inventory::{FoldingTable, InventoryError, PhoneId, PhoneSet, PronunciationDictionary};
pub use loss::{Activation, LinearScorer, LossError, TargetVector};
pub use posteriorgram::{Posteriorgram, PosteriorgramError};
pub use textgrid::{read_textgrid, write_textgrid, AlignedSegment, AlignedTier, TextGridError};
