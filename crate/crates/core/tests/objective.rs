use semifactual::data::{Direction, Encoder, Encoding, FeatureSchema, FeatureSpec, Polarity};
use semifactual::linalg::Norm;
use semifactual::objective::{robustness_absolute, robustness_probabilistic, sample_neighborhood, Payoff};
use semifactual::predictors::{Model, Predictor};
use semifactual::rng_for;
use semifactual::scm::{NodeConfig, Scm, ScmConfig};

fn two_positive() -> Encoder {
    let schema = FeatureSchema::new(
        vec![
            FeatureSpec::continuous("a").action(Direction::Increase, Polarity::Positive),
            FeatureSpec::continuous("b").with_polarity(Polarity::Positive),
        ],
        "y",
    )
    .unwrap();
    Encoder::new(schema, Encoding::Ordinal, &[(0.0, 1.0), (0.0, 1.0)]).unwrap()
}

#[test]
fn gain_and_cost_of_no_change_are_zero() {
    let payoff = Payoff::new(&two_positive(), Norm::L2);
    let x = [0.3, 0.4];
    assert_eq!(payoff.gain(&x, &x), 0.0);
    assert_eq!(payoff.cost(&x, &x), 0.0);
}

#[test]
fn euclidean_gain_and_negated_cost() {
    let payoff = Payoff::new(&two_positive(), Norm::L2);
    let x = [0.0, 0.0];
    let theta = [3.0, 4.0];
    assert_eq!(payoff.gain(&x, &theta), 5.0);
    assert_eq!(payoff.cost(&x, &theta), -5.0);
}

#[test]
fn wrong_way_move_has_negative_gain() {
    let payoff = Payoff::new(&two_positive(), Norm::L2);
    assert!((payoff.gain(&[0.5, 0.5], &[0.5, 0.2]) + 0.3).abs() < 1e-12);
}

#[test]
fn causal_gain_differs_from_cost_on_a_chain() {
    let scm = Scm::new(&ScmConfig {
        nodes: vec![NodeConfig::root("a"), NodeConfig::child("b", [("a", 0.5)])],
    })
    .unwrap();
    let payoff = Payoff::new(&two_positive(), Norm::L1);
    let x = [1.0, 0.7];
    let theta_causal = scm.process(&x, &[(0, 2.0)]).unwrap();
    let substituted = [2.0, 0.7];
    // u_b = 0.2, so b becomes 0.5 * 2 + 0.2.
    assert!((theta_causal[1] - 1.2).abs() < 1e-12);
    assert!((payoff.gain(&x, &theta_causal) - 1.5).abs() < 1e-12);
    assert_eq!(payoff.cost(&x, &substituted), -1.0);
}

#[test]
fn probabilistic_robustness_counts_matches() {
    let always = Predictor::new(Model::Constant(0.9), 0.5, 1);
    let samples: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
    assert_eq!(robustness_probabilistic(&always, 1, &samples), 1.0);
    let step = Predictor::logistic(vec![1000.0], -49500.0, 0.5);
    // Scores above 0.5 exactly for samples 50..99.
    assert_eq!(robustness_probabilistic(&step, 1, &samples), 0.5);
}

#[test]
fn disc_cap_matches_sampled_robustness() {
    let model = Predictor::logistic(vec![1.0, 0.0], -0.5, 0.5);
    let theta = [0.55, 0.0];
    let eps = 0.1;
    let samples = sample_neighborhood(&theta, &[0, 1], &[(-1.0, 2.0), (-1.0, 2.0)], eps, 10_000, Norm::L2, &mut rng_for(5, 0));
    let estimate = robustness_probabilistic(&model, 1, &samples);
    // Share of the disc on the far side of a chord at distance 0.05 from the centre.
    let h: f64 = 0.05;
    let cap = (eps * eps * (h / eps).acos() - h * (eps * eps - h * h).sqrt()) / (std::f64::consts::PI * eps * eps);
    assert!((estimate - (1.0 - cap)).abs() < 0.02, "{estimate} vs {}", 1.0 - cap);
}

#[test]
fn absolute_robustness_is_strict() {
    let m = |s: f64| Predictor::new(Model::Constant(s), 0.5, 1);
    assert_eq!(robustness_absolute(&m(0.9), &[0.0], 0.5), 1.0);
    assert_eq!(robustness_absolute(&m(0.4), &[0.0], 0.5), 0.0);
    assert_eq!(robustness_absolute(&m(0.5), &[0.0], 0.5), 0.0);
}

#[test]
fn tiny_ball_collapses_to_centre() {
    let theta = [0.3, 0.7];
    let samples = sample_neighborhood(&theta, &[0, 1], &[(0.0, 1.0), (0.0, 1.0)], 1e-12, 50, Norm::L2, &mut rng_for(1, 0));
    for s in samples {
        assert!((s[0] - 0.3).abs() <= 1e-12 && (s[1] - 0.7).abs() <= 1e-12);
    }
}

#[test]
fn neighbourhood_is_seeded() {
    let draw = || sample_neighborhood(&[0.5], &[0], &[(0.0, 1.0)], 0.1, 100, Norm::L2, &mut rng_for(9, 2));
    let a = draw();
    assert_eq!(a.len(), 100);
    assert!(a.iter().all(|s| (s[0] - 0.5).abs() <= 0.1));
    assert_eq!(a, draw());
}
