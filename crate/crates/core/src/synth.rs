//! Synthetic datasets and causal models for tests, demos and benchmarks.
//!
//! None of these reproduce a real dataset. The credit-style and census-style
//! generators only mimic the shape (feature kinds, level counts, actionability
//! and causal structure) of the public datasets they are named after.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, Direction, Encoding, FeatureSchema, FeatureSpec, Polarity, Value};
use crate::scm::{NodeConfig, Scm, ScmConfig};
use crate::{rng_for, Result, Rng};

fn normal(rng: &mut Rng, mean: f64, std: f64) -> f64 {
    Normal::new(mean, std).expect("std is positive").sample(rng)
}

fn logistic_noise(rng: &mut Rng) -> f64 {
    let u: f64 = rng.random_range(1e-12..1.0 - 1e-12);
    (u / (1.0 - u)).ln()
}

/// Two interleaved half circles with Gaussian noise; label 1 is the lower moon.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = rng_for(seed, 0x6d00);
    let schema = FeatureSchema::new(vec![FeatureSpec::continuous("x"), FeatureSpec::continuous("y")], "label")?;
    let rows = (0..n)
        .map(|i| {
            let t = std::f64::consts::PI * rng.random::<f64>();
            let (x, y, label) = if i % 2 == 0 {
                (t.cos(), t.sin(), 0)
            } else {
                (1.0 - t.cos(), 0.5 - t.sin(), 1)
            };
            let x = x + normal(&mut rng, 0.0, noise);
            let y = y + normal(&mut rng, 0.0, noise);
            (vec![Value::Num(x), Value::Num(y)], label)
        })
        .collect();
    Dataset::from_rows(schema, Encoding::OneHot, rows)
}

/// Uniform points in the unit square labelled by `x + y > 1`, with a clear
/// margin of 0.1 around the boundary.
pub fn separable_2d(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_for(seed, 0x5e00);
    let schema = FeatureSchema::new(
        vec![
            FeatureSpec::continuous("a").action(Direction::Both, Polarity::Positive),
            FeatureSpec::continuous("b").action(Direction::Both, Polarity::Positive),
        ],
        "label",
    )?;
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        if (a + b - 1.0).abs() < 0.1 {
            continue;
        }
        rows.push((vec![Value::Num(a), Value::Num(b)], u8::from(a + b > 1.0)));
    }
    Dataset::from_rows(schema, Encoding::OneHot, rows)
}

/// Categorical features of the credit-style data: name, level count,
/// actionable direction (levels run from least to most favourable).
const CREDIT_CATEGORICAL: [(&str, usize, Direction); 17] = [
    ("status", 4, Direction::Decrease),
    ("credit_history", 5, Direction::Decrease),
    ("purpose", 10, Direction::Frozen),
    ("savings", 5, Direction::Decrease),
    ("employment_duration", 5, Direction::Decrease),
    ("installment_rate", 4, Direction::Decrease),
    ("personal_status_sex", 4, Direction::Frozen),
    ("other_debtors", 3, Direction::Increase),
    ("present_residence", 4, Direction::Decrease),
    ("property", 4, Direction::Decrease),
    ("other_installment_plans", 3, Direction::Increase),
    ("housing", 3, Direction::Decrease),
    ("number_credits", 4, Direction::Increase),
    ("job", 4, Direction::Decrease),
    ("people_liable", 2, Direction::Increase),
    ("telephone", 2, Direction::Frozen),
    ("foreign_worker", 2, Direction::Frozen),
];

/// Schema of the credit-style data: 3 continuous and 17 ordered categorical
/// features, 15 of them actionable. The allowed direction of each actionable
/// feature is also its positive-gain direction.
pub fn credit_schema() -> FeatureSchema {
    let mut features = vec![
        FeatureSpec::continuous("duration").action(Direction::Increase, Polarity::Positive),
        FeatureSpec::continuous("amount").action(Direction::Increase, Polarity::Positive),
        FeatureSpec::continuous("age"),
    ];
    for (name, levels, dir) in CREDIT_CATEGORICAL {
        let spec = FeatureSpec::categorical(name, (0..levels).map(|k| format!("L{k}")));
        features.push(match dir {
            Direction::Increase => spec.action(dir, Polarity::Positive),
            Direction::Decrease => spec.action(dir, Polarity::Negative),
            _ => spec,
        });
    }
    let mut schema = FeatureSchema::new(features, "credit_risk").expect("static schema is valid");
    schema.positive_label_meaning = "loan accepted".into();
    schema
}

/// Credit-style applicants (about 70% accepted), one-hot encoded.
pub fn credit(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_for(seed, 0xc4ed);
    let schema = credit_schema();
    // Fixed per-dataset structure: level frequencies and effects.
    let weights: Vec<Vec<f64>> = CREDIT_CATEGORICAL
        .iter()
        .map(|(_, l, _)| (0..*l).map(|_| 0.3 + rng.random::<f64>()).collect())
        .collect();
    let effects: Vec<f64> = CREDIT_CATEGORICAL.iter().map(|_| rng.random_range(0.4..1.4)).collect();
    let purpose_effects: Vec<f64> = (0..10).map(|_| normal(&mut rng, 0.0, 0.3)).collect();

    let mut raw = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for _ in 0..n {
        let duration = normal(&mut rng, 2.9, 0.5).exp().round().clamp(4.0, 72.0);
        let amount = (normal(&mut rng, 7.6, 0.6).exp() + 40.0 * duration).round().clamp(250.0, 18500.0);
        let age = (19.0 + normal(&mut rng, 2.7, 0.6).exp()).round().clamp(19.0, 75.0);
        let mut z = -1.4 * (duration - 4.0) / 68.0 - 1.0 * (amount - 250.0) / 18250.0 + 0.6 * (age - 19.0) / 56.0;
        let mut row = vec![Value::Num(duration), Value::Num(amount), Value::Num(age)];
        for (f, (name, levels, _)) in CREDIT_CATEGORICAL.iter().enumerate() {
            let total: f64 = weights[f].iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut level = levels - 1;
            for (k, w) in weights[f].iter().enumerate() {
                if pick < *w {
                    level = k;
                    break;
                }
                pick -= w;
            }
            z += if *name == "purpose" {
                purpose_effects[level]
            } else {
                effects[f] * level as f64 / (levels - 1) as f64
            };
            row.push(Value::Text(format!("L{level}")));
        }
        latent.push(z + 0.5 * logistic_noise(&mut rng));
        raw.push(row);
    }
    let mut sorted = latent.clone();
    sorted.sort_by(f64::total_cmp);
    let cut = sorted[(0.3 * n as f64) as usize];
    let rows = raw.into_iter().zip(latent).map(|(r, z)| (r, u8::from(z > cut))).collect();
    Dataset::from_rows(schema, Encoding::OneHot, rows)
}

/// Census-style schema: age may rise by at most 5 years and weekly hours may
/// fall; marital status and education count as gains when they rise.
pub fn adult_schema() -> FeatureSchema {
    let mut schema = FeatureSchema::new(
        vec![
            FeatureSpec::categorical("sex", ["female", "male"]),
            FeatureSpec::continuous("age")
                .action(Direction::Increase, Polarity::Positive)
                .with_max_change(5.0),
            FeatureSpec::categorical("native_country", ["other", "home"]),
            FeatureSpec::categorical("marital_status", ["never", "separated", "divorced", "married"])
                .with_polarity(Polarity::Positive),
            FeatureSpec::continuous("education_num").with_polarity(Polarity::Positive),
            FeatureSpec::continuous("hours_per_week").action(Direction::Decrease, Polarity::Negative),
        ],
        "income",
    )
    .expect("static schema is valid");
    schema.positive_label_meaning = "income above the threshold".into();
    schema
}

/// Census-style structural equations in raw units. Age pushes marital status
/// and education up and weekly hours down, so its downstream effects all
/// count as gain.
pub fn adult_scm_config() -> ScmConfig {
    ScmConfig {
        nodes: vec![
            NodeConfig::root("sex").with_noise(0.47),
            NodeConfig::root("age").with_noise(13.0),
            NodeConfig::root("native_country").with_noise(0.3),
            NodeConfig::child("marital_status", [("age", 0.05), ("sex", 0.3), ("native_country", 0.2)])
                .with_intercept(-0.4)
                .with_noise(0.8),
            NodeConfig::child("education_num", [("age", 0.08), ("sex", 0.5), ("native_country", 1.0)])
                .with_intercept(6.0)
                .with_noise(2.0),
            NodeConfig::child(
                "hours_per_week",
                [("age", -0.1), ("education_num", -0.2), ("marital_status", -0.5), ("sex", 4.0)],
            )
            .with_intercept(46.0)
            .with_noise(8.0),
        ],
    }
}

/// Census-style individuals drawn from [`adult_scm_config`], ordinal encoded,
/// together with the structural model re-expressed in scaled units.
pub fn adult(n: usize, seed: u64) -> Result<(Dataset, Scm)> {
    let mut rng = rng_for(seed, 0xad17);
    let config = adult_scm_config();
    let raw_scm = Scm::new(&config)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let sex = f64::from(rng.random::<f64>() < 0.67);
        let age = normal(&mut rng, 38.0, 13.0).round().clamp(17.0, 90.0);
        let native = f64::from(rng.random::<f64>() < 0.9);
        let mut x = [sex, age, native, 0.0, 0.0, 0.0];
        let mean = raw_scm.process(&x, &[(0, sex), (1, age), (2, native)])?;
        x[3] = (mean[3] + normal(&mut rng, 0.0, 0.8)).round().clamp(0.0, 3.0);
        x[4] = (raw_intercept(&raw_scm, 4, &x) + normal(&mut rng, 0.0, 2.0)).round().clamp(1.0, 16.0);
        x[5] = (raw_intercept(&raw_scm, 5, &x) + normal(&mut rng, 0.0, 8.0)).round().clamp(1.0, 99.0);
        let z = -9.0 + 0.05 * x[1] + 0.35 * x[4] + 0.9 * x[3] + 0.04 * x[5] + 0.4 * sex;
        let label = u8::from(z + logistic_noise(&mut rng) > 0.0);
        let levels = |k: usize, names: &[&str]| Value::Text(names[x[k] as usize].to_string());
        rows.push((
            vec![
                levels(0, &["female", "male"]),
                Value::Num(x[1]),
                levels(2, &["other", "home"]),
                levels(3, &["never", "separated", "divorced", "married"]),
                Value::Num(x[4]),
                Value::Num(x[5]),
            ],
            label,
        ));
    }
    let data = Dataset::from_rows(adult_schema(), Encoding::Ordinal, rows)?;
    let scm = Scm::for_encoder(&config, &data.encoder, true)?;
    Ok((data, scm))
}

/// Value of node `i`'s equation without noise, given its parents in `x`.
fn raw_intercept(scm: &Scm, i: usize, x: &[f64]) -> f64 {
    let cfg = scm.config();
    cfg.nodes[i].intercept + scm.parents(i).iter().map(|(p, w)| w * x[*p]).sum::<f64>()
}

/// Recidivism-style schema: age (at most 5 more years) and priors count may
/// only increase, and both count as gains.
pub fn compas_schema() -> FeatureSchema {
    let mut schema = FeatureSchema::new(
        vec![
            FeatureSpec::continuous("age")
                .action(Direction::Increase, Polarity::Positive)
                .with_max_change(5.0),
            FeatureSpec::categorical("race", ["group_a", "group_b"]),
            FeatureSpec::categorical("sex", ["female", "male"]),
            FeatureSpec::continuous("priors_count").action(Direction::Increase, Polarity::Positive),
        ],
        "low_risk",
    )
    .expect("static schema is valid");
    schema.positive_label_meaning = "assessed as low risk".into();
    schema
}

pub fn compas_scm_config() -> ScmConfig {
    ScmConfig {
        nodes: vec![
            NodeConfig::root("age").with_noise(11.0),
            NodeConfig::root("race").with_noise(0.5),
            NodeConfig::root("sex").with_noise(0.4),
            NodeConfig::child("priors_count", [("age", 0.06), ("race", 0.8), ("sex", 1.0)])
                .with_intercept(-0.5)
                .with_noise(2.5),
        ],
    }
}

/// Recidivism-style individuals, ordinal encoded, with the scaled SCM.
pub fn compas(n: usize, seed: u64) -> Result<(Dataset, Scm)> {
    let mut rng = rng_for(seed, 0xc0a5);
    let config = compas_scm_config();
    let raw_scm = Scm::new(&config)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let age = normal(&mut rng, 34.0, 11.0).round().clamp(18.0, 70.0);
        let race = f64::from(rng.random::<f64>() < 0.5);
        let sex = f64::from(rng.random::<f64>() < 0.8);
        let x = [age, race, sex, 0.0];
        let priors = (raw_intercept(&raw_scm, 3, &x) + normal(&mut rng, 0.0, 2.5)).round().clamp(0.0, 30.0);
        let z = 1.2 + 0.04 * (age - 34.0) - 0.35 * priors - 0.3 * sex;
        rows.push((
            vec![
                Value::Num(age),
                Value::Text(["group_a", "group_b"][race as usize].into()),
                Value::Text(["female", "male"][sex as usize].into()),
                Value::Num(priors),
            ],
            u8::from(z + logistic_noise(&mut rng) > 0.0),
        ));
    }
    let data = Dataset::from_rows(compas_schema(), Encoding::Ordinal, rows)?;
    let scm = Scm::for_encoder(&config, &data.encoder, true)?;
    Ok((data, scm))
}

/// Names accepted by [`generate`].
pub const GENERATORS: [&str; 5] = ["two_moons", "separable_2d", "credit", "adult", "compas"];

/// Builds a named synthetic dataset, with its causal model when it has one.
pub fn generate(name: &str, n: usize, seed: u64) -> Result<(Dataset, Option<Scm>)> {
    Ok(match name {
        "two_moons" => (two_moons(n, 0.1, seed)?, None),
        "separable_2d" => (separable_2d(n, seed)?, None),
        "credit" => (credit(n, seed)?, None),
        "adult" => {
            let (d, s) = adult(n, seed)?;
            (d, Some(s))
        }
        "compas" => {
            let (d, s) = compas(n, seed)?;
            (d, Some(s))
        }
        other => {
            return Err(crate::Error::Config(format!(
                "unknown generator `{other}` (expected one of {})",
                GENERATORS.join(", ")
            )))
        }
    })
}
