mod common;

use proptest::prelude::*;
use semifactual::evaluation::{
    adversarial_radius, aggregate_normalized, cohens_d, evaluate_explanations, paired_t_test, run_benchmark,
    AdversarialConfig, EvalConfig, MeanSe, Metrics, Plan, Row,
};
use semifactual::objective::{NeighborIndex, ObjectiveConfig};
use semifactual::predictors::{Model, Predictor};
use semifactual::sgen::{explain_noncausal, EngineConfig, Problem};

fn set_at(p: &common::LinearProblem, model: &Predictor, cfg: &ObjectiveConfig, thetas: &[Vec<f64>]) -> semifactual::sgen::ExplanationSet {
    let problem = Problem::new(&p.x, model, &p.encoder, cfg, None, false).unwrap();
    let items = thetas
        .iter()
        .map(|t| {
            let action = problem.space.action_of(t);
            problem.item(action, t.clone(), 1.0, None).unwrap()
        })
        .collect();
    problem.set("fixture", 0, thetas.len(), items, serde_json::Value::Null)
}

#[test]
fn identity_item_has_no_gain_or_diversity() {
    let p = common::one_dim_decrease();
    let model = p.model();
    let set = set_at(&p, &model, &ObjectiveConfig::default(), std::slice::from_ref(&p.x));
    let training = NeighborIndex::new(vec![vec![0.2], vec![0.7]]).unwrap();
    let m = evaluate_explanations(&set, &p.x, &model, &p.encoder, &training, &EvalConfig::default(), 0).unwrap();
    assert_eq!(m.gain, 0.0);
    assert_eq!(m.diversity, 0.0);
}

#[test]
fn training_row_is_fully_plausible_and_far_item_is_robust() {
    let p = common::one_dim_decrease();
    let model = p.model();
    let set = set_at(&p, &model, &ObjectiveConfig::default(), &[vec![0.8]]);
    let training = NeighborIndex::new(vec![vec![0.2], vec![0.8]]).unwrap();
    let cfg = EvalConfig {
        epsilon: 0.05,
        ..EvalConfig::default()
    };
    let m = evaluate_explanations(&set, &p.x, &model, &p.encoder, &training, &cfg, 0).unwrap();
    assert_eq!(m.plausibility, 0.0);
    // The item sits 0.3 from the boundary, far beyond the perturbation range.
    assert_eq!(m.robustness, 1.0);
    assert!((m.gain - 0.1).abs() < 1e-12);
}

#[test]
fn engine_gain_matches_recomputed_gain() {
    let p = &common::oracle_suite(1)[3];
    let model = p.model();
    let set = explain_noncausal(&p.x, &model, &p.encoder, None, 3, &EngineConfig::default(), 2).unwrap();
    let training = NeighborIndex::new(vec![p.x.clone()]).unwrap();
    let m = evaluate_explanations(&set, &p.x, &model, &p.encoder, &training, &EvalConfig::default(), 0).unwrap();
    let mean = set.gains().iter().sum::<f64>() / set.items.len() as f64;
    assert!((m.gain - mean).abs() < 1e-12);
    assert!((m.diversity - set.diversity).abs() < 1e-12);
}

#[test]
fn adversarial_radius_matches_analytic_distance() {
    let model = Predictor::logistic(vec![10.0], -5.0, 0.5);
    let cfg = AdversarialConfig::default();
    for theta in [0.52, 0.6, 0.75] {
        let a = adversarial_radius(&model, &[theta], 0.1, &cfg, 0);
        let exact = theta - 0.5;
        assert!((a.radius - exact).abs() <= 0.05 * exact, "{theta}: {}", a.radius);
        assert_eq!(a.pass, exact > 0.1);
    }
    let plane = Predictor::logistic(vec![3.0, -4.0], 0.0, 0.5);
    let a = adversarial_radius(&plane, &[0.5, 0.2], 0.1, &cfg, 0);
    assert!((a.radius - 0.14).abs() <= 0.05 * 0.14, "{}", a.radius);
}

#[test]
fn adversarial_radius_edge_cases() {
    let cfg = AdversarialConfig::default();
    let on_boundary = adversarial_radius(&Predictor::logistic(vec![10.0], -5.0, 0.5), &[0.5], 0.1, &cfg, 0);
    assert_eq!((on_boundary.radius, on_boundary.pass), (0.0, false));
    let constant = adversarial_radius(&Predictor::new(Model::Constant(0.9), 0.5, 2), &[0.5, 0.5], 0.1, &cfg, 0);
    assert_eq!((constant.radius, constant.pass), (f64::INFINITY, true));
}

fn row(dataset: &str, method: &str, seed: u64, gain: f64) -> Row {
    Row::new(
        dataset,
        "logistic",
        method,
        1,
        seed,
        Metrics {
            gain,
            plausibility: gain,
            robustness: 0.5,
            diversity: 0.0,
        },
    )
}

#[test]
fn normalisation_is_min_max_per_dataset() {
    let agg = aggregate_normalized(&[row("d", "a", 0, 1.0), row("d", "b", 0, 3.0)]);
    let gains: Vec<f64> = agg.normalized.iter().map(|r| r.gain).collect();
    assert_eq!(gains, [0.0, 1.0]);
    assert_eq!(agg.normalized[0].robustness, 0.5);
    assert_eq!(agg.cell("b", 1).unwrap().gain.mean, 1.0);
    // Diversity is identical across methods.
    assert_eq!(agg.warnings.len(), 1);
}

#[test]
fn degenerate_normalisation_warns() {
    let agg = aggregate_normalized(&[row("d", "a", 0, 2.0), row("d", "b", 0, 2.0)]);
    assert!(agg.normalized.iter().all(|r| r.gain == 0.0));
    assert!(agg.warnings.iter().any(|w| w.contains("gain")));
    let single = aggregate_normalized(&[row("d", "a", 0, 2.0), row("d", "a", 1, 4.0)]);
    assert_eq!(single.normalized[1].gain, 4.0);
    assert!(single.warnings[0].contains("single method"));
}

#[test]
fn standard_error_over_three_seeds() {
    let s = MeanSe::of(&[0.2, 0.5, 0.9]);
    assert!((s.mean - 0.5333333333333333).abs() < 1e-12);
    assert!((s.se - 0.20275875100994065).abs() < 1e-12);
    let rows: Vec<Row> = [0.2, 0.5, 0.9]
        .iter()
        .enumerate()
        .flat_map(|(i, &g)| [row("d", "a", i as u64, g), row("d", "b", i as u64, 0.0), row("d", "b", i as u64, 1.0)])
        .collect();
    let cell = aggregate_normalized(&rows).cell("a", 1).unwrap().clone();
    assert_eq!(cell.gain.n, 3);
    assert!((cell.gain.se - 0.20275875100994065).abs() < 1e-12);
}

#[test]
fn paired_t_test_matches_reference() {
    let t = paired_t_test(&[1.0, 2.0, 3.0, 4.5], &[0.0, 0.5, 0.0, 0.2]).unwrap();
    assert!((t.t - 3.271516953920915).abs() < 1e-9);
    assert!((t.p - 0.04672354057341354).abs() < 1e-6);
    assert_eq!(t.df, 3.0);
    assert!((cohens_d(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]) + 1.0).abs() < 1e-12);
}

#[test]
fn empty_plan_gives_empty_report() {
    let plan = Plan::from_json(r#"{"datasets":[],"models":[],"methods":[],"m":[],"seeds":[]}"#).unwrap();
    let report = run_benchmark(&plan).unwrap();
    assert!(report.rows.is_empty() && report.failures.is_empty());
    assert!(report.aggregate.cells.is_empty());
}

#[test]
fn benchmark_is_byte_reproducible() {
    let plan = Plan::from_json(
        r#"{"datasets":[{"name":"credit","source":"synthetic","generator":"credit","rows":150,"seed":3}],
            "models":[{"kind":"logistic"}],"methods":["sgen","dice_star","piece_star","dser_star"],
            "m":[1,2],"seeds":[0,1]}"#,
    )
    .unwrap();
    let a = run_benchmark(&plan).unwrap();
    assert_eq!(a.rows.len(), 16);
    assert!(a.failures.is_empty(), "{:?}", a.failures);
    assert_eq!(a.aggregate.cells.len(), 8);
    let b = run_benchmark(&plan).unwrap();
    assert_eq!(a.csv_bytes().unwrap(), b.csv_bytes().unwrap());
    let header = String::from_utf8(a.csv_bytes().unwrap()).unwrap();
    assert!(header.starts_with("dataset,model,method,m,seed,gain,plausibility,robustness,diversity\n"));

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    assert_eq!(std::fs::read(dir.path().join("results.csv")).unwrap(), a.csv_bytes().unwrap());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"], 16);
}

#[test]
fn unknown_plan_fields_are_rejected() {
    assert!(Plan::from_json(r#"{"datasets":[],"models":[],"methods":[],"m":[],"seeds":[],"extra":1}"#).is_err());
}

proptest! {
    #[test]
    fn normalisation_preserves_order_within_a_dataset(gains in proptest::collection::vec(0.0..10.0f64, 2..8)) {
        let rows: Vec<Row> = gains.iter().enumerate().map(|(i, &g)| row("d", &format!("m{i}"), 0, g)).collect();
        let agg = aggregate_normalized(&rows);
        for i in 0..rows.len() {
            let n = agg.normalized[i].gain;
            prop_assert!((0.0..=1.0).contains(&n));
            for j in 0..rows.len() {
                if rows[i].gain < rows[j].gain {
                    prop_assert!(n <= agg.normalized[j].gain);
                }
            }
        }
    }
}
