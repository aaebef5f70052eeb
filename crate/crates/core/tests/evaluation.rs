use approx::assert_abs_diff_eq;
use ndarray::Array2;
use phonalign::evaluation::{
    boundary_abs_errors, empirical_cdf, frame_metrics, summarize_errors, tolerance_table,
    DEFAULT_TOLERANCES_MS,
};
use phonalign::{AlignedSegment, AlignedTier, BoundaryErrorReport, EvalError, FoldingTable};
use proptest::prelude::*;

fn errors() -> impl Strategy<Value = Vec<f64>> {
    // a mix of continuous values and exact threshold hits
    proptest::collection::vec(
        prop_oneof![
            0.0f64..150.0,
            prop::sample::select(vec![0.0, 10.0, 20.0, 25.0, 50.0, 100.0])
        ],
        1..200,
    )
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

proptest! {
    #[test]
    fn tolerance_rows_sample_the_cdf(errs in errors()) {
        let table = tolerance_table(&errs, &DEFAULT_TOLERANCES_MS).unwrap();
        let cdf = empirical_cdf(&errs).unwrap();
        for (pct, &t) in table.iter().zip(&DEFAULT_TOLERANCES_MS) {
            prop_assert_eq!(*pct, round2(100.0 * cdf.below(t)));
        }
        prop_assert!(table.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(cdf.points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(cdf.points.last().unwrap().1, 1.0);
    }

    #[test]
    fn summary_ignores_order(errs in errors(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = errs.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let (m1, d1) = summarize_errors(&errs).unwrap();
        let (m2, d2) = summarize_errors(&shuffled).unwrap();
        prop_assert!((m1 - m2).abs() < 1e-9);
        prop_assert_eq!(d1, d2);
    }

    #[test]
    fn frame_metrics_ignore_row_order(
        cells in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 12),
        perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let pred = Array2::from_shape_fn((4, 3), |(r, c)| cells[r * 3 + c].0);
        let truth = Array2::from_shape_fn((4, 3), |(r, c)| f64::from(u8::from(cells[r * 3 + c].1)));
        let permute = |m: &Array2<f64>| Array2::from_shape_fn((4, 3), |(r, c)| m[[perm[r], c]]);
        let a = frame_metrics(pred.view(), truth.view(), 0.5);
        let b = frame_metrics(permute(&pred).view(), permute(&truth).view(), 0.5);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(EvalError::Degenerate(x)), Err(EvalError::Degenerate(y))) => prop_assert_eq!(x, y),
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

fn tier(labels: &[&str], ends: &[f64]) -> AlignedTier {
    let mut start = 0.0;
    let segments = labels
        .iter()
        .zip(ends)
        .map(|(l, &e)| {
            let s = AlignedSegment::new(*l, start, e);
            start = e;
            s
        })
        .collect();
    AlignedTier::new("phones", segments)
}

#[test]
fn identical_tiers_score_perfectly() {
    let t = tier(
        &["sil", "k", "ae", "t", "sil"],
        &[0.1, 0.18, 0.31, 0.4, 0.6],
    );
    let errs = boundary_abs_errors(&t, &t, None).unwrap();
    assert_eq!(errs, [0.0; 4]);
    let report = BoundaryErrorReport::from_errors(errs, &DEFAULT_TOLERANCES_MS).unwrap();
    assert_eq!(report.mean_ms, 0.0);
    assert!(report.tolerance_rows.iter().all(|&(_, p)| p == 100.0));
}

#[test]
fn shifted_and_folded_tiers() {
    let r = tier(&["a", "k", "tq"], &[0.1, 0.2, 0.3]);
    let h = tier(&["ah", "k", "t"], &[0.105, 0.205, 0.3]);
    assert!(matches!(
        boundary_abs_errors(&r, &h, None),
        Err(EvalError::LabelMismatch { index: 0, .. })
    ));
    let errs = boundary_abs_errors(&r, &h, Some(&FoldingTable::buckeye())).unwrap();
    assert_eq!(errs.len(), 2);
    for e in &errs {
        assert_abs_diff_eq!(*e, 5.0, epsilon = 1e-9);
    }
    let short = tier(&["a", "k"], &[0.1, 0.3]);
    assert!(boundary_abs_errors(&r, &short, None).is_err());
}

#[test]
fn tolerance_examples() {
    assert_eq!(
        tolerance_table(&[5.0, 15.0, 30.0], &[10.0, 20.0]).unwrap(),
        [33.33, 66.67]
    );
    assert_eq!(tolerance_table(&[10.0], &[10.0]).unwrap(), [0.0]);
    assert_eq!(summarize_errors(&[1.0, 2.0, 9.0]).unwrap(), (4.0, 2.0));
    assert_eq!(summarize_errors(&[1.0, 2.0, 3.0, 4.0]).unwrap().1, 2.5);
    let cdf = empirical_cdf(&[1.0, 1.0, 3.0]).unwrap();
    assert_eq!(cdf.points, [(1.0, 2.0 / 3.0), (3.0, 1.0)]);
}

#[test]
fn frame_metric_counts() {
    // tp=3, fn=1, tn=2, fp=2
    let pred =
        Array2::from_shape_vec((2, 4), vec![0.9, 0.8, 0.7, 0.1, 0.2, 0.3, 0.6, 0.6]).unwrap();
    let truth =
        Array2::from_shape_vec((2, 4), vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let m = frame_metrics(pred.view(), truth.view(), 0.5).unwrap();
    assert_eq!((m.tp, m.fn_, m.tn, m.fp), (3, 1, 2, 2));
    assert_eq!(m.sensitivity, 0.75);
    assert_eq!(m.specificity, 0.5);
    assert_eq!(m.balanced_accuracy, 0.625);
}
