mod common;

use proptest::prelude::*;
use semifactual::baselines::{dice_star, dominguez_star, dser_star, karimi_star, modification_order, piece_star};
use semifactual::data::{Dataset, Direction, Encoding, FeatureSchema, FeatureSpec, Polarity, Value};
use semifactual::linalg::Norm;
use semifactual::predictors::Predictor;
use semifactual::scm::Scm;
use semifactual::sgen::EngineConfig;
use semifactual::Error;

#[test]
fn dice_lands_just_above_the_boundary() {
    let p = common::one_dim_decrease();
    let set = dice_star(&p.x, &p.model(), &p.encoder, None, 1, &EngineConfig::default(), 0).unwrap();
    let theta = set.items[0].encoded[0];
    assert!(theta > 0.5 && theta < 0.51, "{theta}");
    assert_eq!(set.items[0].robustness_abs, 1.0);
}

#[test]
fn dice_finds_distinct_semifactuals_on_a_symmetric_problem() {
    let p = common::LinearProblem::new(
        "symmetric",
        vec![
            FeatureSpec::continuous("f").action(Direction::Both, Polarity::Neutral),
            FeatureSpec::continuous("g").action(Direction::Both, Polarity::Neutral),
        ],
        vec![10.0, 10.0],
        -5.0,
        vec![0.5, 0.5],
    );
    let model = p.model();
    let x = [0.5, 0.5];
    let set = dice_star(&x, &model, &p.encoder, None, 2, &EngineConfig::default(), 3).unwrap();
    let unique: Vec<_> = set.items.iter().filter(|i| !i.duplicate).collect();
    assert_eq!(unique.len(), 2);
    assert!(semifactual::linalg::linf_distance(&unique[0].encoded, &unique[1].encoded) > 1e-6);
    assert!(set.diversity > 0.0);
}

#[test]
fn empty_action_space_is_an_error() {
    let p = common::LinearProblem::new("frozen", vec![FeatureSpec::continuous("f")], vec![10.0], -5.0, vec![0.9]);
    let cfg = EngineConfig::default();
    let err = dice_star(&p.x, &p.model(), &p.encoder, None, 1, &cfg, 0).unwrap_err();
    assert!(matches!(err, Error::EmptyActionSpace), "{err}");
    let err = dser_star(&p.x, &p.model(), &p.encoder, None, 1, &cfg, 0).unwrap_err();
    assert!(matches!(err, Error::EmptyActionSpace), "{err}");
}

fn two_feature_data(model: &Predictor) -> Dataset {
    let schema = FeatureSchema::new(
        vec![
            FeatureSpec::continuous("f").action(Direction::Both, Polarity::Neutral),
            FeatureSpec::continuous("g").action(Direction::Both, Polarity::Neutral),
        ],
        "y",
    )
    .unwrap();
    let mut rows = vec![(vec![Value::Num(0.0), Value::Num(0.0)], 0), (vec![Value::Num(1.0), Value::Num(1.0)], 1)];
    // Negatives: f tightly around 0.1, g spread over [0, 0.6].
    for i in 0..40 {
        let f = 0.05 + 0.1 * (i % 5) as f64 / 4.0;
        let g = 0.6 * i as f64 / 39.0;
        rows.push((vec![Value::Num(f), Value::Num(g)], 0));
        rows.push((vec![Value::Num(0.8 + 0.2 * f), Value::Num(1.0 - g / 3.0)], 1));
    }
    let data = Dataset::from_rows(schema, Encoding::Ordinal, rows).unwrap();
    for r in data.rows() {
        assert_eq!(model.is_positive(r), r[0] > 0.5, "fixture rows must split by f");
    }
    data
}

#[test]
fn piece_changes_only_the_swap_that_stays_positive() {
    // Swapping f to its negative-class mean keeps the label, swapping g as well does not.
    let model = Predictor::logistic(vec![1.0, 3.0], -2.0, 0.5);
    let data = two_feature_data(&model);
    let x = [0.9, 0.9];
    let cfg = EngineConfig::default();
    assert_eq!(modification_order(&x, &model, &data, &cfg).unwrap(), ["f", "g"]);
    let set = piece_star(&x, &model, &data, 1, &cfg, 0).unwrap();
    let item = &set.items[0];
    assert!(item.encoded[0] < 0.2, "{:?}", item.encoded);
    assert_eq!(item.encoded[1], 0.9);
    assert!(model.is_positive(&item.encoded));
    assert!(!set.no_effective_semifactual);
}

#[test]
fn piece_flags_when_every_swap_crosses() {
    let model = Predictor::logistic(vec![1.0, 3.0], -2.0, 0.5);
    let data = two_feature_data(&model);
    let strict = Predictor::logistic(vec![10.0, 10.0], -17.0, 0.5);
    let x = [0.9, 0.9];
    let set = piece_star(&x, &strict, &data, 2, &EngineConfig::default(), 0).unwrap();
    assert!(set.no_effective_semifactual);
    assert!(set.items.iter().all(|i| i.gain == 0.0 && i.encoded == x));
}

#[test]
fn dser_matches_oracle_and_spreads_out() {
    let p = common::one_dim_decrease();
    let (oracle, _) = p.grid_oracle(Norm::L2, 0.1, 0.0, 1e-3);
    let cfg = EngineConfig::default();
    let one = dser_star(&p.x, &p.model(), &p.encoder, None, 1, &cfg, 0).unwrap();
    assert!((one.items[0].gain - oracle).abs() <= 0.05 * oracle, "{} vs {oracle}", one.items[0].gain);
    let q = &common::oracle_suite(1)[3];
    let two = dser_star(&q.x, &q.model(), &q.encoder, None, 2, &cfg, 0).unwrap();
    assert!(two.diversity > 0.0);
    assert!(two.items.iter().all(|i| i.robustness_abs == 1.0));
}

#[test]
fn causal_walks_stop_at_or_inside_the_boundary() {
    let p = common::one_dim_decrease();
    let cfg = EngineConfig::default();
    let scm = Scm::independent(p.names());
    let model = p.model();
    let karimi = karimi_star(&p.x, &model, &scm, &p.encoder, None, 1, &cfg, 0).unwrap();
    let k = karimi.items[0].encoded[0];
    assert!(k > 0.5 && k <= 0.5 + cfg.baselines.walk.step + 1e-9, "{k}");
    let dominguez = dominguez_star(&p.x, &model, &scm, &p.encoder, None, 1, &cfg, 0).unwrap();
    let d = dominguez.items[0].encoded[0];
    assert!(d >= 0.5 + cfg.baselines.walk.epsilon, "{d}");
    // With no causal children the end state is the action itself.
    assert_eq!(dominguez.items[0].action_gain, Some(dominguez.items[0].gain));
}

#[test]
fn walks_return_identity_when_already_near_the_boundary() {
    let p = common::one_dim_decrease();
    let x = [0.55];
    let scm = Scm::independent(p.names());
    let set = dominguez_star(&x, &p.model(), &scm, &p.encoder, None, 1, &EngineConfig::default(), 0).unwrap();
    assert!(set.no_effective_semifactual);
    assert_eq!(set.items[0].gain, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn robust_walk_keeps_a_wider_margin(angle in 0.0..std::f64::consts::TAU, scale in 4.0..12.0f64, margin in 0.2..0.5f64) {
        let w = vec![scale * angle.cos(), scale * angle.sin()];
        let x = vec![0.5, 0.5];
        let bias = -semifactual::linalg::dot(&w, &x) + margin * scale;
        let dir = |c: f64| if c > 0.0 { (Direction::Decrease, Polarity::Negative) } else { (Direction::Increase, Polarity::Positive) };
        let (df, pf) = dir(w[0]);
        let (dg, pg) = dir(w[1]);
        let p = common::LinearProblem::new(
            "walk",
            vec![FeatureSpec::continuous("f").action(df, pf), FeatureSpec::continuous("g").action(dg, pg)],
            w.clone(),
            bias,
            x.clone(),
        );
        let model = p.model();
        let scm = Scm::independent(p.names());
        let cfg = EngineConfig::default();
        let k = karimi_star(&x, &model, &scm, &p.encoder, None, 1, &cfg, 0).unwrap();
        let d = dominguez_star(&x, &model, &scm, &p.encoder, None, 1, &cfg, 0).unwrap();
        let dist = |t: &[f64]| (semifactual::linalg::dot(&w, t) + bias) / scale;
        let (mk, md) = (dist(&k.items[0].encoded), dist(&d.items[0].encoded));
        prop_assert!(mk > 0.0 && md > 0.0);
        if !k.no_effective_semifactual {
            prop_assert!(md > mk, "dominguez {md} karimi {mk}");
        }
    }
}
