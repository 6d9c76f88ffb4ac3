//! Feature schema: kinds, encodings, actionability and gain polarity.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

/// Which way an actionable feature may move. For categorical features the
/// direction refers to the declared level order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[serde(alias = "increase-only", alias = "increase_only")]
    Increase,
    #[serde(alias = "decrease-only", alias = "decrease_only")]
    Decrease,
    Both,
    #[default]
    Frozen,
}

/// Which direction of change counts as a benefit to the individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    #[default]
    Neutral,
}

impl Polarity {
    /// +1 for positive, -1 for negative, 0 for neutral.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
            Polarity::Neutral => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Ordered levels of a categorical feature.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    #[serde(default)]
    pub actionable: bool,
    #[serde(default)]
    pub direction: Direction,
    /// Raw-unit range for continuous features, level-index range for
    /// categorical ones. Absent means the whole observed domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default)]
    pub polarity: Polarity,
    /// Largest allowed change relative to the individual, in raw units
    /// (level steps for categorical features).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_change: Option<f64>,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
            levels: Vec::new(),
            actionable: false,
            direction: Direction::Frozen,
            bounds: None,
            polarity: Polarity::Neutral,
            max_change: None,
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        FeatureSpec {
            kind: FeatureKind::Categorical,
            levels: levels.into_iter().map(Into::into).collect(),
            ..FeatureSpec::continuous(name)
        }
    }

    /// Marks the feature actionable in `direction` with the given polarity.
    pub fn action(mut self, direction: Direction, polarity: Polarity) -> Self {
        self.actionable = direction != Direction::Frozen;
        self.direction = direction;
        self.polarity = polarity;
        self
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some([lo, hi]);
        self
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    pub fn with_max_change(mut self, max_change: f64) -> Self {
        self.max_change = Some(max_change);
        self
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    fn validate(&self) -> Result<()> {
        let err = |reason: &str| Err(Error::feature(&self.name, reason));
        if self.name.trim().is_empty() {
            return Err(Error::Schema("feature with an empty name".into()));
        }
        match self.kind {
            FeatureKind::Categorical => {
                if self.levels.is_empty() {
                    return err("categorical feature needs at least one level");
                }
                let unique: HashSet<_> = self.levels.iter().collect();
                if unique.len() != self.levels.len() {
                    return err("duplicate categorical level");
                }
            }
            FeatureKind::Continuous => {
                if !self.levels.is_empty() {
                    return err("continuous feature cannot declare levels");
                }
            }
        }
        if let Some([lo, hi]) = self.bounds {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return err("bounds must be finite with lo <= hi");
            }
            if self.kind == FeatureKind::Categorical {
                let top = (self.levels.len() - 1) as f64;
                if lo.fract() != 0.0 || hi.fract() != 0.0 || lo < 0.0 || hi > top {
                    return err("categorical bounds must be level indices within the level list");
                }
            }
        }
        if let Some(mc) = self.max_change {
            if !(mc > 0.0) {
                return err("max_change must be positive");
            }
        }
        if self.actionable {
            if self.direction == Direction::Frozen {
                return err("an actionable feature cannot have direction `frozen`");
            }
            if let Some([lo, hi]) = self.bounds {
                if lo >= hi {
                    return err("actionable feature needs non-degenerate bounds");
                }
            }
        } else if self.direction != Direction::Frozen {
            return err("a non-actionable feature must have direction `frozen`");
        }
        Ok(())
    }
}

fn default_psi() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
    pub label: String,
    #[serde(default = "default_psi")]
    pub psi: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub positive_label_meaning: String,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>, label: impl Into<String>) -> Result<Self> {
        let schema = FeatureSchema {
            features,
            label: label.into(),
            psi: default_psi(),
            positive_label_meaning: String::new(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("no features".into()));
        }
        if !(self.psi > 0.0 && self.psi < 1.0) {
            return Err(Error::Schema(format!("psi must lie in (0, 1), got {}", self.psi)));
        }
        let mut names = HashSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::feature(&f.name, "duplicate feature name"));
            }
            f.validate()?;
        }
        if names.contains(self.label.as_str()) {
            return Err(Error::Schema(format!("label `{}` is also a feature", self.label)));
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn actionable(&self) -> impl Iterator<Item = (usize, &FeatureSpec)> {
        self.features.iter().enumerate().filter(|(_, f)| f.actionable)
    }

    /// Stable fingerprint of the schema, stored alongside persisted models.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("schema serialises");
        hex::encode(Sha256::digest(&canonical))[..16].to_string()
    }

    /// Returns a copy with per-request constraint overrides applied.
    pub fn with_overrides(&self, overrides: &Overrides) -> Result<FeatureSchema> {
        let mut out = self.clone();
        for (name, o) in overrides {
            let idx = self
                .index_of(name)
                .ok_or_else(|| Error::feature(name, "unknown feature in overrides"))?;
            let base = &self.features[idx];
            let f = &mut out.features[idx];
            if let Some(a) = o.actionable {
                f.actionable = a;
                if !a {
                    f.direction = Direction::Frozen;
                }
            }
            if let Some(d) = o.direction {
                f.direction = d;
                if o.actionable.is_none() {
                    f.actionable = d != Direction::Frozen;
                }
            }
            if let Some(p) = o.polarity {
                f.polarity = p;
            }
            if let Some(mc) = o.max_change {
                f.max_change = Some(mc);
            }
            if let Some([lo, hi]) = o.bounds {
                if !f.actionable {
                    return Err(Error::feature(name, "bounds given for a frozen feature"));
                }
                if let Some([blo, bhi]) = base.bounds {
                    if lo < blo || hi > bhi {
                        return Err(Error::feature(
                            name,
                            format!("bounds [{lo}, {hi}] widen the schema range [{blo}, {bhi}]"),
                        ));
                    }
                }
                f.bounds = Some([lo, hi]);
            }
            f.validate()?;
        }
        Ok(out)
    }
}

/// Per-feature constraint changes carried by a single request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actionable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_change: Option<f64>,
}

pub type Overrides = BTreeMap<String, FeatureOverride>;

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(
            vec![
                FeatureSpec::continuous("age")
                    .action(Direction::Increase, Polarity::Positive)
                    .with_bounds(18.0, 45.0),
                FeatureSpec::categorical("housing", ["own", "rent", "free"]),
            ],
            "accepted",
        )
        .unwrap()
    }

    #[test]
    fn parses_documented_json_shape() {
        let text = r#"{
            "features": [
                {"name": "age", "kind": "continuous", "actionable": true,
                 "direction": "increase", "bounds": [18, 45], "polarity": "positive"},
                {"name": "housing", "kind": "categorical", "levels": ["own", "rent", "free"],
                 "actionable": false, "direction": "frozen", "polarity": "neutral"}
            ],
            "label": "accepted",
            "psi": 0.5
        }"#;
        let s = FeatureSchema::from_json(text).unwrap();
        assert_eq!(s, schema());
    }

    #[test]
    fn rejects_duplicates_and_bad_psi() {
        let mut s = schema();
        s.features[1].name = "age".into();
        assert!(matches!(s.validate(), Err(Error::Feature { .. })));
        let mut s = schema();
        s.psi = 1.0;
        assert!(matches!(s.validate(), Err(Error::Schema(_))));
    }

    #[test]
    fn actionable_frozen_is_invalid() {
        let mut s = schema();
        s.features[0].direction = Direction::Frozen;
        let e = s.validate().unwrap_err();
        assert_eq!(e.field(), Some("age"));
    }

    #[test]
    fn override_freezing_with_bounds_names_feature() {
        let mut o = Overrides::new();
        o.insert(
            "age".into(),
            FeatureOverride {
                direction: Some(Direction::Frozen),
                bounds: Some([18.0, 60.0]),
                ..Default::default()
            },
        );
        let e = schema().with_overrides(&o).unwrap_err();
        assert_eq!(e.field(), Some("age"));
    }

    #[test]
    fn override_cannot_widen() {
        let mut o = Overrides::new();
        o.insert(
            "age".into(),
            FeatureOverride {
                bounds: Some([18.0, 60.0]),
                ..Default::default()
            },
        );
        assert!(schema().with_overrides(&o).is_err());
        o.get_mut("age").unwrap().bounds = Some([20.0, 40.0]);
        let s = schema().with_overrides(&o).unwrap();
        assert_eq!(s.features[0].bounds, Some([20.0, 40.0]));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = schema();
        let mut b = schema();
        assert_eq!(a.hash(), b.hash());
        b.psi = 0.6;
        assert_ne!(a.hash(), b.hash());
    }
}
