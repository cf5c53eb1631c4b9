mod common;

use common::{random_model, short_config, small_world};
use helios_core::contexts::ContextSets;
use helios_core::error::Error;
use helios_core::evaluation::helios_rolling;
use helios_core::model::{default_priors, forecast, predict_decomposed, Frame, PredictionMode, Predictor};
use proptest::prelude::*;

#[test]
fn first_recursive_step_equals_teacher_forced_step() {
    let ds = small_world(5, 1).slice(0..600);
    let m = random_model(&ds, &ContextSets::default(), &default_priors(), short_config(72), 4);
    let frame = Frame::new(&m, &ds).unwrap();
    let mut p = Predictor::new(&m, &frame);
    let (targets, rows) = p.teacher_forced();
    for origin in [frame.start, 200, 431, 599] {
        let step = p.recursive(origin, 1, &targets);
        assert_eq!(step[0], rows[origin - frame.start], "origin {origin}");
    }
}

#[test]
fn forecast_matches_rolling_window() {
    let ds = small_world(5, 2).slice(0..700);
    let m = random_model(&ds, &ContextSets::default(), &default_priors(), short_config(72), 5);
    let (train, test) = (ds.slice(0..500), ds.slice(500..700));
    let rolled = helios_rolling(&m, &train, &test, 24, 24).unwrap();
    for w in 0..3 {
        let history = ds.slice(0..500 + 24 * w);
        let future = ds.slice(500 + 24 * w..700);
        let direct = forecast(&m, &history, 24, &future).unwrap();
        let window: Vec<_> = rolled[24 * w..24 * (w + 1)].iter().map(|r| r.1).collect();
        assert_eq!(direct, window);
    }
    assert!(matches!(forecast(&m, &train, 24, &test.slice(0..10)), Err(Error::MissingExogenous { .. })));
}

#[test]
fn forecast_ignores_future_loads() {
    let ds = small_world(5, 3).slice(0..400);
    let m = random_model(&ds, &ContextSets::default(), &default_priors(), short_config(72), 6);
    let (history, future) = (ds.slice(0..300), ds.slice(300..400));
    let blind: Vec<_> = future
        .records()
        .iter()
        .map(|r| {
            let mut r = *r;
            r.substation.heat_load = -1.0;
            r
        })
        .collect();
    let blind = helios_core::data::Dataset::from_records(blind).unwrap();
    assert_eq!(forecast(&m, &history, 48, &future).unwrap(), forecast(&m, &history, 48, &blind).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn components_are_non_negative_and_add_up(seed in 0u64..10_000, start in 0usize..8000) {
        let ds = small_world(3, 7).slice(start..start + 120);
        let m = random_model(&ds, &ContextSets::default(), &default_priors(), short_config(24), seed);
        for mode in [PredictionMode::TeacherForced, PredictionMode::Recursive] {
            for r in predict_decomposed(&m, &ds, mode).unwrap() {
                prop_assert!(r.space >= 0.0 && r.hot_water >= 0.0 && r.loss >= 0.0);
                prop_assert_eq!(r.total, r.space + r.hot_water + r.loss);
            }
        }
    }
}
