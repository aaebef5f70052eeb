#![allow(dead_code)]

use ndarray::Array2;
use phonalign::synthetic::{frame_time, plant, ConfusionProfile, PlantedUtterance};
use phonalign::{FeatureConfig, PhoneSet, TargetSequence};
use rand::Rng;

/// Minimum total cost over every way of splitting `t` frames into `n`
/// non-empty runs, by exhaustive enumeration. `None` when `n > t`.
pub fn brute_force_cost(local: &Array2<f64>, targets: &[usize]) -> Option<f64> {
    fn go(
        local: &Array2<f64>,
        targets: &[usize],
        seg: usize,
        start: usize,
        acc: f64,
        best: &mut Option<f64>,
    ) {
        let t = local.ncols();
        let remaining = targets.len() - seg;
        if remaining == 1 {
            let c: f64 = (start..t).map(|u| local[[targets[seg], u]]).sum();
            let total = acc + c;
            if best.is_none_or(|b| total < b) {
                *best = Some(total);
            }
            return;
        }
        let mut run = 0.0;
        // leave at least one frame for each later segment
        for end in start..t - (remaining - 1) {
            run += local[[targets[seg], end]];
            go(local, targets, seg + 1, end + 1, acc + run, best);
        }
    }
    if targets.is_empty() || targets.len() > local.ncols() {
        return None;
    }
    let mut best = None;
    go(local, targets, 0, 0, 0.0, &mut best);
    best
}

/// Random local-cost matrix with entries in `[0, 5)`.
pub fn random_costs(rng: &mut impl Rng, k: usize, t: usize) -> Array2<f64> {
    Array2::from_shape_fn((k, t), |_| rng.gen_range(0.0..5.0))
}

pub fn alphabet(k: usize) -> PhoneSet {
    PhoneSet::new((0..k).map(|i| format!("p{i}"))).unwrap()
}

/// A planted utterance with `segments` segments over a `k`-class inventory.
/// Neighbouring classes differ, boundaries are 2 to 6 steps apart, and the
/// first boundary leaves segment one at least a frame.
pub fn random_planted(
    rng: &mut impl Rng,
    k: usize,
    segments: usize,
    correct: f64,
    profile: ConfusionProfile,
    config: &FeatureConfig,
) -> PlantedUtterance {
    let step = config.frame_step;
    let mut targets = vec![rng.gen_range(0..k)];
    while targets.len() < segments {
        let prev = *targets.last().unwrap();
        let next = (prev + rng.gen_range(1..k)) % k;
        targets.push(next);
    }
    let mut boundaries = Vec::with_capacity(segments - 1);
    let mut b = frame_time(1, config) + step * rng.gen_range(1.0..3.0);
    for _ in 1..segments {
        boundaries.push(b);
        b += step * rng.gen_range(2.0..6.0);
    }
    let last = *boundaries.last().unwrap_or(&frame_time(1, config));
    let frames = ((last - frame_time(1, config)) / step).ceil() as usize + 4;
    plant(
        &alphabet(k),
        &TargetSequence::from(targets),
        &boundaries,
        frames,
        correct,
        profile,
        config,
    )
    .unwrap()
}
