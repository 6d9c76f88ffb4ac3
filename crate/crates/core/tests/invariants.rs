mod common;

use proptest::prelude::*;
use semifactual::data::{Action, ActionSpace, Value};
use semifactual::linalg::{project_simplex, Norm};
use semifactual::objective::{diversity, robustness_probabilistic, sample_neighborhood, Payoff};
use semifactual::scm::{NodeConfig, Scm, ScmConfig};
use semifactual::sgen::project_action;
use semifactual::{rng_for, synth};

/// A random linear DAG over `n` nodes: node `j` may depend on any `i < j`.
fn random_dag() -> impl Strategy<Value = Scm> {
    (2usize..8)
        .prop_flat_map(|n| {
            let edges = proptest::collection::vec(proptest::option::weighted(0.5, -2.0..2.0f64), n * (n - 1) / 2);
            let intercepts = proptest::collection::vec(-1.0..1.0f64, n);
            (Just(n), edges, intercepts)
        })
        .prop_map(|(n, edges, intercepts)| {
            let mut it = edges.into_iter();
            let nodes = (0..n)
                .map(|j| {
                    let parents: Vec<(String, f64)> =
                        (0..j).filter_map(|i| it.next().flatten().map(|w| (format!("v{i}"), w))).collect();
                    NodeConfig::child(format!("v{j}"), parents).with_intercept(intercepts[j])
                })
                .collect();
            Scm::new(&ScmConfig { nodes }).unwrap()
        })
}

fn credit_space(row: usize) -> (semifactual::data::Dataset, ActionSpace) {
    let data = synth::credit(200, 0).unwrap();
    let space = ActionSpace::new(&data.individuals[row].x, &data.encoder).unwrap();
    (data, space)
}

#[test]
fn sampled_actions_are_always_feasible() {
    let (_, space) = credit_space(3);
    let mut rng = rng_for(0, 0);
    for _ in 0..10_000 {
        let a = space.sample(&mut rng);
        assert!(space.contains(&a));
        space.check(&a).unwrap();
    }
}

#[test]
fn identity_action_has_zero_gain() {
    let data = synth::credit(50, 1).unwrap();
    for norm in [Norm::L1, Norm::L2] {
        let payoff = Payoff::new(&data.encoder, norm);
        for r in data.rows() {
            let space = ActionSpace::new(r, &data.encoder).unwrap();
            assert_eq!(payoff.gain(r, &space.apply(&space.identity())), 0.0);
        }
    }
}

#[test]
fn single_item_set_has_zero_diversity() {
    assert_eq!(diversity(&[vec![0.3, 0.9]]), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn causal_change_is_at_least_the_substituted_change(
        scm in random_dag(),
        seed in any::<u64>(),
    ) {
        use rand::Rng as _;
        let n = scm.len();
        let mut rng = rng_for(seed, 0);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let nodes: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        let interventions: Vec<(usize, f64)> = nodes.iter().map(|&i| (i, rng.random_range(-2.0..2.0))).collect();
        let causal = scm.process(&x, &interventions).unwrap();
        let mut substituted = x.clone();
        for &(i, v) in &interventions {
            substituted[i] = v;
        }
        let l1 = |t: &[f64]| t.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum::<f64>();
        prop_assert!(l1(&causal) >= l1(&substituted) - 1e-9);
        let downstream = nodes.iter().any(|&i| scm.descendants(i).iter().any(|d| !nodes.contains(d)));
        if !downstream {
            prop_assert!((l1(&causal) - l1(&substituted)).abs() < 1e-9);
        }
    }

    #[test]
    fn abduct_push_round_trips(scm in random_dag(), seed in any::<u64>()) {
        use rand::Rng as _;
        let mut rng = rng_for(seed, 1);
        let x: Vec<f64> = (0..scm.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let back = scm.push(&scm.abduct(&x).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let u: Vec<f64> = (0..scm.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let again = scm.abduct(&scm.push(&u).unwrap()).unwrap();
        for (a, b) in again.iter().zip(&u) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert_eq!(scm.process(&x, &[]).unwrap(), scm.process(&x, &[]).unwrap());
    }
}

proptest! {
    #[test]
    fn clipping_is_idempotent(row in 0usize..200, raw in proptest::collection::vec(-3.0..3.0f64, 16)) {
        let (_, space) = credit_space(row);
        let a = Action::new(raw[..space.dim()].to_vec());
        let once = space.clip(&a);
        prop_assert!(space.contains(&once));
        prop_assert_eq!(space.clip(&once), once.clone());
        prop_assert_eq!(project_action(&once, &space), project_action(&project_action(&once, &space), &space));
    }

    #[test]
    fn simplex_projection_is_idempotent(v in proptest::collection::vec(-2.0..2.0f64, 1..8)) {
        let p = project_simplex(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&c| c >= 0.0));
        let q = project_simplex(&p);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn encoding_round_trips(row in 0usize..200) {
        let data = synth::credit(200, 0).unwrap();
        let x = &data.individuals[row].x;
        let record = data.encoder.decode_record(x).unwrap();
        let again = data.encoder.encode_record(&record).unwrap();
        for (a, b) in again.iter().zip(x) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert_eq!(data.encoder.decode_record(&again).unwrap(), record.clone());
        for (name, v) in &record {
            if let Value::Text(level) = v {
                let spec = &data.schema().features[data.schema().index_of(name).unwrap()];
                prop_assert!(spec.levels.contains(level));
            }
        }
    }

    #[test]
    fn probabilistic_robustness_is_a_share(theta in proptest::collection::vec(0.0..1.0f64, 2), eps in 1e-6..0.5f64, w in -5.0..5.0f64) {
        let model = semifactual::predictors::Predictor::logistic(vec![w, 1.0], -0.7, 0.5);
        let samples = sample_neighborhood(&theta, &[0, 1], &[(0.0, 1.0), (0.0, 1.0)], eps, 100, Norm::L2, &mut rng_for(0, 0));
        let h = robustness_probabilistic(&model, 1, &samples);
        prop_assert!((0.0..=1.0).contains(&h));
    }

    #[test]
    fn diversity_ignores_order(points in proptest::collection::vec(proptest::collection::vec(0.0..1.0f64, 3), 1..6), k in 0usize..6) {
        let mut rotated = points.clone();
        rotated.rotate_left(k % points.len());
        prop_assert!((diversity(&points) - diversity(&rotated)).abs() < 1e-12);
        prop_assert!(diversity(&points) >= 0.0);
    }
}
