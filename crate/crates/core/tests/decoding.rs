mod common;

use approx::assert_abs_diff_eq;
use common::{alphabet, brute_force_cost, random_planted};
use ndarray::Array2;
use phonalign::aligner::posteriorgram_duration;
use phonalign::decoder::{frame_costs, DEFAULT_COST_CEILING};
use phonalign::synthetic::ConfusionProfile;
use phonalign::{
    align_posteriorgram, boundary_time, decode, refine_boundaries, AlignOptions, DecodeError,
    FeatureConfig, Posteriorgram, RefineOptions, TargetSequence,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn instance() -> impl Strategy<Value = (Array2<f64>, Vec<usize>)> {
    (1usize..=5, 1usize..=8).prop_flat_map(|(k, t)| {
        let costs = proptest::collection::vec(0.0f64..5.0, k * t)
            .prop_map(move |v| Array2::from_shape_vec((k, t), v).unwrap());
        let targets = proptest::collection::vec(0..k, 1..=4.min(t));
        (costs, targets)
    })
}

proptest! {
    #[test]
    fn decode_matches_exhaustive_search((local, targets) in instance()) {
        let seq = TargetSequence::from(targets.clone());
        let (path, costs) = decode(&local, &seq).unwrap();
        let oracle = brute_force_cost(&local, &targets).unwrap();
        prop_assert!((costs.total() - oracle).abs() < 1e-9);
        prop_assert!(path.is_valid(targets.len()));
        prop_assert!((path.cost(&local, &seq) - oracle).abs() < 1e-9);
        prop_assert_eq!(path.len(), local.ncols());
    }

    #[test]
    fn boundaries_are_ordered_inside_utterance((local, targets) in instance(), interp in any::<bool>()) {
        let seq = TargetSequence::from(targets.clone());
        let cfg = FeatureConfig::default();
        let (path, costs) = decode(&local, &seq).unwrap();
        let duration = posteriorgram_duration(local.ncols(), &cfg);
        let opts = RefineOptions { interpolate: interp, ..RefineOptions::default() };
        let set = refine_boundaries(&path, &costs, Some(&seq), &cfg, duration, opts).unwrap();
        prop_assert_eq!(set.times.len(), targets.len());
        prop_assert!(set.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(set.times[0] > 0.0);
        prop_assert_eq!(*set.times.last().unwrap(), duration);
    }

    #[test]
    fn without_interpolation_times_are_frame_times((local, targets) in instance()) {
        let seq = TargetSequence::from(targets.clone());
        let cfg = FeatureConfig::default();
        let (path, costs) = decode(&local, &seq).unwrap();
        let duration = posteriorgram_duration(local.ncols(), &cfg);
        let set = refine_boundaries(&path, &costs, Some(&seq), &cfg, duration, RefineOptions::default()).unwrap();
        for (&time, &frame) in set.interior().iter().zip(&path.transitions()) {
            prop_assert_eq!(time, 0.015 + 0.01 * frame as f64);
        }
    }
}

#[test]
fn infeasible_when_more_symbols_than_frames() {
    let local = Array2::zeros((2, 3));
    assert_eq!(brute_force_cost(&local, &[0, 1, 0, 1]), None);
    let err = decode(&local, &vec![0, 1, 0, 1].into()).unwrap_err();
    assert_eq!(
        err,
        DecodeError::Infeasible {
            symbols: 4,
            frames: 3
        }
    );
}

#[test]
fn ties_keep_the_current_symbol() {
    // every split costs the same; staying while backtracking puts the
    // single transition right after the first frame
    let local = Array2::from_elem((2, 4), 1.0);
    let (path, _) = decode(&local, &vec![0, 1].into()).unwrap();
    assert_eq!(path.positions(), [0, 1, 1, 1]);
}

#[test]
fn ceiling_does_not_move_boundaries_when_inactive() {
    // posteriors with exact zeros in classes the path never visits
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let (k, t) = (4, rng.gen_range(4..12));
        let mut probs = Array2::from_shape_fn((k, t), |_| rng.gen_range(0.05..1.0));
        probs.row_mut(3).fill(0.0);
        for mut col in probs.columns_mut() {
            let s = col.sum();
            col.mapv_inplace(|p| p / s);
        }
        let pg = Posteriorgram::new(probs, alphabet(k)).unwrap();
        let seq = TargetSequence::from(vec![0, 1, 2]);
        let low = decode(&frame_costs(&pg, 50.0), &seq).unwrap();
        let high = decode(&frame_costs(&pg, DEFAULT_COST_CEILING), &seq).unwrap();
        assert_eq!(low.0, high.0);
        assert_abs_diff_eq!(low.1.total(), high.1.total(), epsilon = 1e-12);
    }
}

#[test]
fn zero_probability_costs_hit_the_ceiling() {
    let pg = Posteriorgram::new(ndarray::array![[1.0, 0.0], [0.0, 1.0]], alphabet(2)).unwrap();
    let o = frame_costs(&pg, DEFAULT_COST_CEILING);
    assert_eq!(o[[1, 0]], 745.0);
    assert_eq!(o[[0, 0]], 0.0);
    let (path, costs) = decode(&o, &vec![0, 1].into()).unwrap();
    assert_eq!(path.positions(), [0, 1]);
    assert_eq!(costs.total(), 0.0);
}

#[test]
fn frame_time_formula() {
    let cfg = FeatureConfig::default();
    assert_abs_diff_eq!(boundary_time(1, &cfg).unwrap(), 0.025, epsilon = 1e-15);
    assert_abs_diff_eq!(boundary_time(10, &cfg).unwrap(), 0.115, epsilon = 1e-15);
    assert_eq!(boundary_time(0, &cfg), Err(DecodeError::BoundaryIndex));
}

fn planted_errors(profile: ConfusionProfile, interp: bool, seed: u64) -> Vec<f64> {
    let cfg = FeatureConfig::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let opts = AlignOptions::default().with_interpolation(interp);
    let mut errors = Vec::new();
    for _ in 0..20 {
        let segments = rng.gen_range(5..=10);
        let u = random_planted(&mut rng, 6, segments, 0.9, profile, &cfg);
        let tier =
            align_posteriorgram(&u.posteriorgram, &u.targets, &opts, Some(u.duration)).unwrap();
        assert!(tier.is_contiguous(u.duration));
        let labels: Vec<String> = u
            .targets
            .ids()
            .iter()
            .map(|id| format!("p{}", id.0))
            .collect();
        assert_eq!(tier.labels(), labels);
        for (hyp, truth) in tier.boundaries().iter().zip(&u.boundaries) {
            errors.push((hyp - truth).abs());
        }
    }
    errors
}

#[test]
fn planted_boundaries_recovered_within_a_step() {
    for seed in 0..5 {
        for profile in [ConfusionProfile::Crisp, ConfusionProfile::LinearRamp] {
            let errors = planted_errors(profile, false, seed);
            assert!(
                errors.iter().all(|&e| e < 0.010),
                "{profile:?} seed {seed}: {errors:?}"
            );
        }
    }
}

#[test]
fn interpolation_helps_on_ramped_confusions() {
    for seed in 0..5 {
        let plain = planted_errors(ConfusionProfile::LinearRamp, false, seed);
        let interp = planted_errors(ConfusionProfile::LinearRamp, true, seed);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&interp) < mean(&plain),
            "seed {seed}: {} vs {}",
            mean(&interp),
            mean(&plain)
        );
        assert!(interp.iter().all(|&e| e < 0.010));
    }
}
