use ndarray::Array2;
use phonalign::features::read_feature_dump;
use phonalign::{
    compute_features, read_textgrid, write_textgrid, AlignedSegment, AlignedTier, FeatureConfig,
    PhoneSet, Posteriorgram,
};
use proptest::prelude::*;

fn tiers() -> impl Strategy<Value = (Vec<AlignedTier>, f64)> {
    let label = prop_oneof![
        Just(String::new()),
        "[a-z]{1,3}",
        Just("say \"hi\"".to_string()),
        Just("ŋ".to_string())
    ];
    let tier = proptest::collection::vec((label, 1e-4f64..0.5), 1..30);
    (proptest::collection::vec(tier, 1..3), "[a-z]{1,8}").prop_map(|(raw, name)| {
        let mut tiers = Vec::new();
        let mut duration: f64 = 0.0;
        for (ti, segs) in raw.iter().enumerate() {
            let mut start = 0.0;
            let segments = segs
                .iter()
                .map(|(l, len)| {
                    let s = AlignedSegment::new(l.clone(), start, start + len);
                    start += len;
                    s
                })
                .collect();
            duration = duration.max(start);
            tiers.push(AlignedTier::new(format!("{name}{ti}"), segments));
        }
        // stretch every tier to the common end
        for t in &mut tiers {
            t.segments.last_mut().unwrap().end = duration;
        }
        (tiers, duration)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn textgrid_round_trip((tiers, duration) in tiers()) {
        let text = write_textgrid(&tiers, duration);
        let back = read_textgrid(&text).unwrap();
        prop_assert_eq!(back.len(), tiers.len());
        for (a, b) in tiers.iter().zip(&back) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.labels(), b.labels());
            for (x, y) in a.segments.iter().zip(&b.segments) {
                prop_assert!((x.start - y.start).abs() <= 1e-9);
                prop_assert!((x.end - y.end).abs() <= 1e-9);
            }
        }
        // and writing again gives the same bytes
        prop_assert_eq!(write_textgrid(&back, duration), text);
    }

    #[test]
    fn posteriorgram_round_trip(k in 1usize..6, t in 1usize..40, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut probs = Array2::from_shape_fn((k, t), |_| rng.gen::<f64>());
        for mut col in probs.columns_mut() {
            let s = col.sum();
            col.mapv_inplace(|p| p / s);
        }
        let pg = Posteriorgram::new(probs, PhoneSet::new((0..k).map(|i| format!("p{i}"))).unwrap()).unwrap();
        let back = Posteriorgram::parse(&pg.to_text()).unwrap();
        prop_assert_eq!(back.phones(), pg.phones());
        prop_assert!(back.probs().iter().zip(pg.probs()).all(|(a, b)| (a - b).abs() <= 1e-9));
    }
}

#[test]
fn features_are_deterministic_and_dump_round_trips() {
    let cfg = FeatureConfig::default();
    let samples: Vec<f64> = (0..16_000)
        .map(|i| 3000.0 * (i as f64 * 0.05).sin() + (i % 7) as f64)
        .collect();
    let a = compute_features(&samples, &cfg).unwrap();
    let b = compute_features(&samples, &cfg).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.frames.dim(), (98, 39));
    let mut buf = Vec::new();
    a.write_dump(&mut buf).unwrap();
    let back = read_feature_dump(buf.as_slice()).unwrap();
    assert_eq!(back.dim(), (98, 39));
    for (x, y) in back.iter().zip(a.frames.iter()) {
        assert_eq!(*x, *y as f32);
    }
}
