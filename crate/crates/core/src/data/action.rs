//! Per-individual action spaces built from actionability constraints.
//!
//! An action assigns a target value to every actionable feature. Values of
//! real-valued coordinates live in the encoded (min-max scaled) space; values
//! of one-hot categorical coordinates are level indices.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::encode::{Block, BlockKind, Encoder};
use super::schema::Direction;
use crate::linalg::argmax;
use crate::{Error, Result, Rng};

/// Below this scaled change an action counts as "no change".
pub const MIN_CHANGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Generated,
    UserSpecified,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    /// One value per coordinate of the owning [`ActionSpace`].
    pub values: Vec<f64>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl Action {
    pub fn new(values: Vec<f64>) -> Self {
        Action {
            values,
            provenance: Provenance::Generated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordKind {
    /// A single real column (continuous, or ordinal-encoded categorical).
    Real,
    /// A one-hot block; the value is a level index.
    Level,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coord {
    pub feature: usize,
    pub block: Block,
    pub kind: CoordKind,
    pub lo: f64,
    pub hi: f64,
    /// Range the feature may take at all, regardless of direction.
    pub domain: (f64, f64),
    /// The individual's current value.
    pub current: f64,
    /// +1 or -1: the direction of change that yields positive gain.
    pub gain_sign: f64,
}

impl Coord {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Width of the feature's actionable bounds, independent of the current value.
    pub fn domain_width(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn clamp(&self, v: f64) -> f64 {
        let v = match self.kind {
            CoordKind::Real => v,
            CoordKind::Level => v.round(),
        };
        v.clamp(self.lo, self.hi)
    }

    /// Change relative to the current value in scaled units.
    pub fn change(&self, v: f64) -> f64 {
        match self.kind {
            CoordKind::Real => (v - self.current).abs(),
            CoordKind::Level => {
                if (v - self.current).abs() >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Feasible actions for one individual.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    x: Vec<f64>,
    coords: Vec<Coord>,
}

impl ActionSpace {
    /// Builds the action space of `x` under the encoder's schema. Features
    /// whose feasible interval collapses to the current value are dropped.
    pub fn new(x: &[f64], encoder: &Encoder) -> Result<Self> {
        if x.len() != encoder.width() {
            return Err(Error::WidthMismatch {
                expected: encoder.width(),
                got: x.len(),
            });
        }
        let schema = encoder.schema();
        let mut coords = Vec::new();
        for (i, spec) in schema.actionable() {
            let block = *encoder.block(i);
            let (kind, current, domain, to_units): (CoordKind, f64, (f64, f64), f64) = match block.kind {
                BlockKind::Continuous { .. } => (CoordKind::Real, x[block.offset], (0.0, 1.0), 1.0 / block.range()),
                BlockKind::Ordinal { levels } => {
                    let top = (levels.max(2) - 1) as f64;
                    (CoordKind::Real, x[block.offset], (0.0, 1.0), 1.0 / top)
                }
                BlockKind::OneHot { levels } => (
                    CoordKind::Level,
                    argmax(&x[block.columns()]) as f64,
                    (0.0, (levels - 1) as f64),
                    1.0,
                ),
            };
            let (mut lo, mut hi) = match spec.bounds {
                Some([blo, bhi]) => match block.kind {
                    BlockKind::OneHot { .. } => (blo, bhi),
                    _ => (block.scale(blo), block.scale(bhi)),
                },
                None => domain,
            };
            let domain = (lo.min(current), hi.max(current));
            match spec.direction {
                Direction::Increase => {
                    hi = hi.max(current);
                    lo = current;
                }
                Direction::Decrease => {
                    lo = lo.min(current);
                    hi = current;
                }
                Direction::Both => {
                    lo = lo.min(current);
                    hi = hi.max(current);
                }
                Direction::Frozen => continue,
            }
            if let Some(mc) = spec.max_change {
                let mc = mc * to_units;
                lo = lo.max(current - mc);
                hi = hi.min(current + mc);
            }
            if hi - lo < MIN_CHANGE {
                continue;
            }
            let gain_sign = match spec.direction {
                Direction::Increase => 1.0,
                Direction::Decrease => -1.0,
                _ => {
                    if spec.polarity.sign() < 0.0 {
                        -1.0
                    } else {
                        1.0
                    }
                }
            };
            coords.push(Coord {
                feature: i,
                block,
                kind,
                lo,
                hi,
                domain,
                current,
                gain_sign,
            });
        }
        if coords.is_empty() {
            return Err(Error::EmptyActionSpace);
        }
        Ok(ActionSpace { x: x.to_vec(), coords })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Feasible interval of coordinate `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.coords[i].lo, self.coords[i].hi)
    }

    /// The action that keeps every feature where it is.
    pub fn identity(&self) -> Action {
        Action::new(self.coords.iter().map(|c| c.current).collect())
    }

    /// Uniform draw from the feasible box.
    pub fn sample(&self, rng: &mut Rng) -> Action {
        Action::new(
            self.coords
                .iter()
                .map(|c| match c.kind {
                    CoordKind::Real => rng.random_range(c.lo..=c.hi),
                    CoordKind::Level => rng.random_range(c.lo as i64..=c.hi as i64) as f64,
                })
                .collect(),
        )
    }

    /// Coordinate-wise clamp to the feasible box (levels are rounded first).
    pub fn clip(&self, action: &Action) -> Action {
        Action {
            values: self.coords.iter().zip(&action.values).map(|(c, &v)| c.clamp(v)).collect(),
            provenance: action.provenance,
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        action.values.len() == self.coords.len()
            && self.coords.iter().zip(&action.values).all(|(c, &v)| {
                v >= c.lo - 1e-12 && v <= c.hi + 1e-12 && (c.kind == CoordKind::Real || v.fract() == 0.0)
            })
    }

    pub fn check(&self, action: &Action) -> Result<()> {
        if action.values.len() != self.coords.len() {
            return Err(Error::WidthMismatch {
                expected: self.coords.len(),
                got: action.values.len(),
            });
        }
        if !self.contains(action) {
            return Err(Error::InfeasibleAction("action leaves the feasible box".into()));
        }
        Ok(())
    }

    /// Largest per-coordinate change (scaled; a level switch counts as 1).
    pub fn max_change(&self, action: &Action) -> f64 {
        self.coords
            .iter()
            .zip(&action.values)
            .map(|(c, &v)| c.change(v))
            .fold(0.0, f64::max)
    }

    pub fn is_no_change(&self, action: &Action) -> bool {
        self.max_change(action) < MIN_CHANGE
    }

    /// Non-causal substitution: `x` with the actionable features replaced.
    pub fn apply(&self, action: &Action) -> Vec<f64> {
        let mut theta = self.x.clone();
        self.write(&mut theta, action);
        theta
    }

    /// Writes the action's coordinates into an encoded vector.
    pub fn write(&self, theta: &mut [f64], action: &Action) {
        for (c, &v) in self.coords.iter().zip(&action.values) {
            match c.kind {
                CoordKind::Real => theta[c.block.offset] = v,
                CoordKind::Level => {
                    for col in c.block.columns() {
                        theta[col] = 0.0;
                    }
                    theta[c.block.offset + v as usize] = 1.0;
                }
            }
        }
    }

    /// Reads the action that would produce `theta` (argmax for one-hot blocks).
    pub fn action_of(&self, theta: &[f64]) -> Action {
        Action::new(
            self.coords
                .iter()
                .map(|c| match c.kind {
                    CoordKind::Real => theta[c.block.offset],
                    CoordKind::Level => argmax(&theta[c.block.columns()]) as f64,
                })
                .collect(),
        )
    }

    /// Encoded columns and domains of the real-valued coordinates.
    pub fn real_columns(&self) -> (Vec<usize>, Vec<(f64, f64)>) {
        self.coords
            .iter()
            .filter(|c| c.kind == CoordKind::Real)
            .map(|c| (c.block.offset, c.domain))
            .unzip()
    }

    /// The action that changes only the coordinates in `subset`.
    pub fn restricted(&self, values: &[f64], subset: &[usize]) -> Action {
        let mut a = self.identity();
        for (&k, &v) in subset.iter().zip(values) {
            a.values[k] = v;
        }
        a
    }

    /// Hard interventions (column, value) for the coordinates in `subset`
    /// (all coordinates when `None`). One-hot coordinates are not supported.
    pub fn interventions(&self, action: &Action, subset: Option<&[usize]>) -> Result<Vec<(usize, f64)>> {
        let all: Vec<usize> = (0..self.coords.len()).collect();
        subset
            .unwrap_or(&all)
            .iter()
            .map(|&i| {
                let c = &self.coords[i];
                if c.kind == CoordKind::Level {
                    return Err(Error::Unsupported(
                        "causal interventions need ordinal (real-valued) categorical encoding".into(),
                    ));
                }
                Ok((c.block.offset, action.values[i]))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::encode::{Encoding, Value};
    use crate::data::schema::{FeatureSchema, FeatureSpec, Polarity};
    use crate::rng_for;

    fn encoder() -> Encoder {
        let schema = FeatureSchema::new(
            vec![
                FeatureSpec::continuous("age")
                    .action(Direction::Increase, Polarity::Positive)
                    .with_bounds(18.0, 45.0),
                FeatureSpec::categorical("housing", ["own", "rent", "free"])
                    .action(Direction::Decrease, Polarity::Negative),
                FeatureSpec::continuous("income"),
            ],
            "y",
        )
        .unwrap();
        Encoder::new(schema, Encoding::OneHot, &[(0.0, 100.0), (0.0, 0.0), (0.0, 10.0)]).unwrap()
    }

    fn x(age: f64, housing: &str) -> Vec<f64> {
        encoder()
            .encode(&[Value::Num(age), Value::Text(housing.into()), Value::Num(5.0)])
            .unwrap()
    }

    #[test]
    fn increase_only_interval() {
        let space = ActionSpace::new(&x(40.0, "free"), &encoder()).unwrap();
        let (lo, hi) = space.interval(0);
        assert!((lo - 0.40).abs() < 1e-12 && (hi - 0.45).abs() < 1e-12);
        assert_eq!(space.interval(1), (0.0, 2.0));
    }

    #[test]
    fn clip_caps_at_bound() {
        let space = ActionSpace::new(&x(40.0, "free"), &encoder()).unwrap();
        let clipped = space.clip(&Action::new(vec![0.60, 1.2]));
        assert!((clipped.values[0] - 0.45).abs() < 1e-12);
        assert_eq!(clipped.values[1], 1.0);
    }

    #[test]
    fn all_frozen_is_empty() {
        let mut schema = encoder().schema().clone();
        for f in schema.features.iter_mut() {
            f.actionable = false;
            f.direction = Direction::Frozen;
        }
        let enc = encoder().with_schema(schema).unwrap();
        assert!(matches!(ActionSpace::new(&x(40.0, "rent"), &enc), Err(Error::EmptyActionSpace)));
    }

    #[test]
    fn collapsed_interval_is_dropped() {
        // Lowest level of a decrease-only feature cannot move.
        let space = ActionSpace::new(&x(40.0, "own"), &encoder()).unwrap();
        assert_eq!(space.dim(), 1);
    }

    #[test]
    fn apply_and_no_change() {
        let space = ActionSpace::new(&x(40.0, "free"), &encoder()).unwrap();
        assert!(space.is_no_change(&space.identity()));
        assert_eq!(space.apply(&space.identity()), x(40.0, "free"));
        let a = Action::new(vec![0.42, 1.0]);
        assert!(!space.is_no_change(&a));
        let theta = space.apply(&a);
        assert_eq!(space.action_of(&theta), a);
        assert_eq!(&theta[1..4], &[0.0, 1.0, 0.0]);
        let mut rng = rng_for(1, 0);
        for _ in 0..100 {
            assert!(space.contains(&space.sample(&mut rng)));
        }
    }
}
