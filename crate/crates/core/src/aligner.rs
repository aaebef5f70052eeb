//! Transcription to phone targets, acoustic scoring, decoding and tier
//! construction for a single utterance.

use thiserror::Error;

use crate::decoder::{self, DecodeError, RefineOptions, TargetSequence, DEFAULT_COST_CEILING};
use crate::features::{compute_features, Audio, FeatureConfig, FeatureError, FeatureMatrix};
use crate::inventory::{FoldingTable, InventoryError, PhoneSet, PronunciationDictionary};
use crate::loss::{LinearScorer, LossError};
use crate::posteriorgram::Posteriorgram;
use crate::textgrid::{AlignedSegment, AlignedTier};

/// Transcript tokens aligned as a literal silence phone.
pub const SILENCE_TOKENS: [&str; 2] = ["sil", "<sil>"];

pub const DEFAULT_TIER_NAME: &str = "phones";

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("out-of-vocabulary word(s): {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("scorer produced {got} frames for {expected} feature frames")]
    FrameCountChanged { expected: usize, got: usize },
    #[error(
        "scorer phone set ({scorer} symbols) differs from the target phone set ({targets} symbols)"
    )]
    PhoneSetMismatch { scorer: usize, targets: usize },
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Scorer(#[from] LossError),
}

/// Anything that turns feature frames into per-frame class probabilities.
pub trait AcousticScorer: Send + Sync {
    fn phones(&self) -> &PhoneSet;

    /// Must return exactly one probability column per feature frame.
    fn score(&self, features: &FeatureMatrix) -> Result<Posteriorgram, AlignError>;
}

/// [`LinearScorer`] paired with the symbols of its output rows.
#[derive(Debug, Clone)]
pub struct LinearAcousticScorer {
    pub scorer: LinearScorer,
    pub phones: PhoneSet,
}

impl LinearAcousticScorer {
    pub fn new(scorer: LinearScorer, phones: PhoneSet) -> Result<Self, AlignError> {
        if scorer.num_classes() != phones.len() {
            return Err(AlignError::PhoneSetMismatch {
                scorer: scorer.num_classes(),
                targets: phones.len(),
            });
        }
        Ok(Self { scorer, phones })
    }
}

impl AcousticScorer for LinearAcousticScorer {
    fn phones(&self) -> &PhoneSet {
        &self.phones
    }

    fn score(&self, features: &FeatureMatrix) -> Result<Posteriorgram, AlignError> {
        Ok(self.scorer.score_frames(features, &self.phones)?)
    }
}

/// Replays a precomputed posteriorgram, e.g. one loaded from a `PGRAM1` file.
#[derive(Debug, Clone)]
pub struct PrecomputedScorer {
    pub posteriorgram: Posteriorgram,
}

impl AcousticScorer for PrecomputedScorer {
    fn phones(&self) -> &PhoneSet {
        self.posteriorgram.phones()
    }

    fn score(&self, features: &FeatureMatrix) -> Result<Posteriorgram, AlignError> {
        if features.num_frames() != self.posteriorgram.num_frames() {
            return Err(AlignError::FrameCountChanged {
                expected: features.num_frames(),
                got: self.posteriorgram.num_frames(),
            });
        }
        Ok(self.posteriorgram.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignOptions {
    pub features: FeatureConfig,
    pub refine: RefineOptions,
    pub cost_ceiling: f64,
    pub tier_name: String,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            refine: RefineOptions::default(),
            cost_ceiling: DEFAULT_COST_CEILING,
            tier_name: DEFAULT_TIER_NAME.to_string(),
        }
    }
}

impl AlignOptions {
    pub fn with_interpolation(mut self, on: bool) -> Self {
        self.refine.interpolate = on;
        self
    }
}

/// Phone targets for a word transcript: each word's first pronunciation,
/// folded, concatenated in order. Silence tokens pass through as `sil`
/// unless the dictionary defines them. All missing words are reported at
/// once.
pub fn transcription_to_targets<S: AsRef<str>>(
    words: &[S],
    dict: &PronunciationDictionary,
    folding: &FoldingTable,
    phones: &PhoneSet,
) -> Result<TargetSequence, AlignError> {
    if words.is_empty() {
        return Err(AlignError::EmptyTranscript);
    }
    let mut targets = Vec::new();
    let mut missing = Vec::new();
    for word in words {
        let word = word.as_ref();
        let labels = match dict.lookup(word, folding) {
            Ok(labels) => labels,
            Err(InventoryError::OutOfVocabulary(_))
                if SILENCE_TOKENS.contains(&word.to_lowercase().as_str()) =>
            {
                vec![folding.fold("sil").to_string()]
            }
            Err(InventoryError::OutOfVocabulary(w)) => {
                missing.push(w);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for label in labels {
            let id = phones
                .id(&label)
                .ok_or(InventoryError::UnknownPhone { phone: label })?;
            targets.push(id);
        }
    }
    if !missing.is_empty() {
        return Err(AlignError::OutOfVocabulary(missing));
    }
    Ok(TargetSequence(targets))
}

/// Default utterance end when only a posteriorgram is available: the end of
/// the last frame's window.
pub fn posteriorgram_duration(frames: usize, config: &FeatureConfig) -> f64 {
    frames as f64 * config.frame_step + config.window_length - config.frame_step
}

/// Decode `pg` against `targets` and build a contiguous tier ending at
/// `duration` (or the posteriorgram's implied duration).
pub fn align_posteriorgram(
    pg: &Posteriorgram,
    targets: &TargetSequence,
    options: &AlignOptions,
    duration: Option<f64>,
) -> Result<AlignedTier, AlignError> {
    if targets.is_empty() {
        return Err(DecodeError::EmptyTargets.into());
    }
    let duration =
        duration.unwrap_or_else(|| posteriorgram_duration(pg.num_frames(), &options.features));
    let local = decoder::frame_costs(pg, options.cost_ceiling);
    let (path, costs) = decoder::decode(&local, targets)?;
    let bounds = decoder::refine_boundaries(
        &path,
        &costs,
        Some(targets),
        &options.features,
        duration,
        options.refine,
    )?;

    let mut segments = Vec::with_capacity(targets.len());
    let mut start = 0.0;
    for (id, &end) in targets.ids().iter().zip(&bounds.times) {
        let label = pg.phones().label(*id).unwrap_or_default().to_string();
        segments.push(AlignedSegment { label, start, end });
        start = end;
    }
    Ok(AlignedTier::new(options.tier_name.clone(), segments))
}

/// Full pipeline from audio: features, acoustic scoring, decode, refine.
pub fn align_audio(
    audio: &Audio,
    targets: &TargetSequence,
    scorer: &dyn AcousticScorer,
    options: &AlignOptions,
) -> Result<AlignedTier, AlignError> {
    let config = FeatureConfig {
        sample_rate: audio.sample_rate,
        ..options.features.clone()
    };
    let features = compute_features(&audio.samples, &config)?;
    let pg = scorer.score(&features)?;
    if pg.num_frames() != features.num_frames() {
        return Err(AlignError::FrameCountChanged {
            expected: features.num_frames(),
            got: pg.num_frames(),
        });
    }
    let options = AlignOptions {
        features: config,
        ..options.clone()
    };
    align_posteriorgram(&pg, targets, &options, Some(audio.duration()))
}
