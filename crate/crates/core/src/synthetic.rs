//! Posteriorgrams built from a known segmentation, for testing aligners.
//!
//! Frame `u` (1-based) is stamped with the time its boundary would get,
//! `(window - step) + step * u`, and belongs to the segment containing that
//! time (a frame exactly on a boundary belongs to the earlier segment).
//! Each frame gives `correct` to its own class and spreads the rest evenly.
//!
//! With [`ConfusionProfile::LinearRamp`], frames within one step of a
//! boundary split the mass of the two neighbouring classes so that their
//! log-probability ratio grows linearly with the signed distance to the
//! boundary, reaching the crisp ratio one step away.

use ndarray::Array2;

use crate::decoder::{boundary_time, TargetSequence};
use crate::features::FeatureConfig;
use crate::inventory::PhoneSet;
use crate::posteriorgram::{Posteriorgram, PosteriorgramError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfusionProfile {
    Crisp,
    LinearRamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedUtterance {
    pub posteriorgram: Posteriorgram,
    pub targets: TargetSequence,
    /// Interior boundaries, seconds.
    pub boundaries: Vec<f64>,
    pub duration: f64,
}

/// Frame time stamp used for segment membership.
pub fn frame_time(frame: usize, config: &FeatureConfig) -> f64 {
    boundary_time(frame.max(1), config).expect("frame index is at least 1")
}

/// Build a `phones.len() x frames` posteriorgram for `targets` split at
/// `boundaries`. Neighbouring targets must differ, boundaries must be
/// ascending and at least two steps apart, and every segment must own a
/// frame.
pub fn plant(
    phones: &PhoneSet,
    targets: &TargetSequence,
    boundaries: &[f64],
    frames: usize,
    correct: f64,
    profile: ConfusionProfile,
    config: &FeatureConfig,
) -> Result<PlantedUtterance, PosteriorgramError> {
    let k = phones.len();
    assert!(k >= 2, "need at least two classes");
    assert_eq!(
        targets.len(),
        boundaries.len() + 1,
        "one boundary between each pair of targets"
    );
    assert!((0.0..1.0).contains(&correct) && correct > 1.0 / k as f64);
    let step = config.frame_step;
    let other = (1.0 - correct) / (k - 1) as f64;
    let margin = (correct / other).ln();

    let mut probs = Array2::from_elem((k, frames), other);
    for u in 1..=frames {
        let tau = frame_time(u, config);
        let seg = boundaries.partition_point(|&b| b < tau);
        let col = u - 1;
        let own = targets.ids()[seg].0;
        probs[[own, col]] = correct;
        if profile == ConfusionProfile::Crisp {
            continue;
        }
        // nearest boundary within one step, with its left and right classes
        let near = [seg.checked_sub(1), Some(seg)]
            .into_iter()
            .flatten()
            .filter(|&j| j < boundaries.len())
            .map(|j| (j, (boundaries[j] - tau) / step))
            .filter(|(_, s)| s.abs() < 1.0)
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        if let Some((j, s)) = near {
            let (left, right) = (targets.ids()[j].0, targets.ids()[j + 1].0);
            let pair = correct + other;
            let w = sigmoid(margin * s);
            probs[[left, col]] = pair * w;
            probs[[right, col]] = pair * (1.0 - w);
        }
    }
    let duration = crate::aligner::posteriorgram_duration(frames, config);
    Ok(PlantedUtterance {
        posteriorgram: Posteriorgram::new(probs, phones.clone())?,
        targets: targets.clone(),
        boundaries: boundaries.to_vec(),
        duration,
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn setup() -> (PhoneSet, FeatureConfig) {
        (
            PhoneSet::new(["a", "b", "c"]).unwrap(),
            FeatureConfig::default(),
        )
    }

    #[test]
    fn crisp_frames_follow_time_stamps() {
        let (phones, cfg) = setup();
        // frame times 0.025, 0.035, 0.045, 0.055, 0.065
        let u = plant(
            &phones,
            &vec![0, 2].into(),
            &[0.047],
            5,
            0.9,
            ConfusionProfile::Crisp,
            &cfg,
        )
        .unwrap();
        let pg = &u.posteriorgram;
        assert_eq!(pg.probs()[[0, 2]], 0.9);
        assert_eq!(pg.probs()[[2, 3]], 0.9);
        assert_abs_diff_eq!(pg.probs()[[1, 0]], 0.05);
        pg.check_normalized(1e-12).unwrap();
        assert_abs_diff_eq!(u.duration, 0.065, epsilon = 1e-12);
    }

    #[test]
    fn ramp_log_ratio_is_linear() {
        let (phones, cfg) = setup();
        let u = plant(
            &phones,
            &vec![0, 1].into(),
            &[0.0475],
            6,
            0.9,
            ConfusionProfile::LinearRamp,
            &cfg,
        )
        .unwrap();
        let p = u.posteriorgram.probs();
        let margin = (0.9f64 / 0.05).ln();
        // frame 3 sits 2.5 ms before the boundary, frame 4 7.5 ms after
        assert_abs_diff_eq!((p[[0, 2]] / p[[1, 2]]).ln(), margin * 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!((p[[0, 3]] / p[[1, 3]]).ln(), -margin * 0.75, epsilon = 1e-9);
        assert_eq!(p[[0, 0]], 0.9);
        u.posteriorgram.check_normalized(1e-12).unwrap();
    }
}
