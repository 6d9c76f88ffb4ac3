//! Raw records to encoded vectors and back.
//!
//! Continuous features are min-max scaled with training extrema. Categorical
//! features are either one-hot encoded or, in ordinal mode, mapped to a single
//! real column `index / (levels - 1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureKind, FeatureSchema};
use crate::linalg::argmax;
use crate::{Error, Result};

/// Raw value of a single feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// A raw record keyed by feature name.
pub type Record = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    OneHot,
    Ordinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockKind {
    Continuous { min: f64, max: f64 },
    OneHot { levels: usize },
    Ordinal { levels: usize },
}

/// Columns occupied by one feature in the encoded vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub feature: usize,
    pub offset: usize,
    pub width: usize,
    pub kind: BlockKind,
}

impl Block {
    pub fn columns(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.width
    }

    /// Whether the block is a single real-valued column.
    pub fn is_scalar(&self) -> bool {
        !matches!(self.kind, BlockKind::OneHot { .. })
    }

    /// Raw units per scaled unit.
    pub fn range(&self) -> f64 {
        match self.kind {
            BlockKind::Continuous { min, max } => span(min, max),
            BlockKind::Ordinal { levels } | BlockKind::OneHot { levels } => (levels.max(2) - 1) as f64,
        }
    }

    pub fn scale(&self, raw: f64) -> f64 {
        match self.kind {
            BlockKind::Continuous { min, max } => (raw - min) / span(min, max),
            BlockKind::Ordinal { levels } | BlockKind::OneHot { levels } => raw / (levels.max(2) - 1) as f64,
        }
    }

    pub fn unscale(&self, scaled: f64) -> f64 {
        match self.kind {
            BlockKind::Continuous { min, max } => scaled * span(min, max) + min,
            BlockKind::Ordinal { levels } | BlockKind::OneHot { levels } => scaled * (levels.max(2) - 1) as f64,
        }
    }

    /// Level index (or scaled continuous value) represented by the block.
    pub fn read(&self, v: &[f64]) -> f64 {
        match self.kind {
            BlockKind::Continuous { .. } => v[self.offset],
            BlockKind::OneHot { .. } => argmax(&v[self.columns()]) as f64,
            BlockKind::Ordinal { levels } => {
                let top = (levels.max(1) - 1) as f64;
                (v[self.offset] * top).round().clamp(0.0, top)
            }
        }
    }
}

fn span(min: f64, max: f64) -> f64 {
    if max > min {
        max - min
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    schema: FeatureSchema,
    encoding: Encoding,
    blocks: Vec<Block>,
    width: usize,
}

impl Encoder {
    /// Builds an encoder with the given continuous ranges (raw min/max per
    /// feature; ignored for categorical features).
    pub fn new(schema: FeatureSchema, encoding: Encoding, ranges: &[(f64, f64)]) -> Result<Self> {
        schema.validate()?;
        if ranges.len() != schema.features.len() {
            return Err(Error::WidthMismatch {
                expected: schema.features.len(),
                got: ranges.len(),
            });
        }
        let mut blocks = Vec::with_capacity(schema.features.len());
        let mut offset = 0;
        for (i, f) in schema.features.iter().enumerate() {
            let (kind, width) = match (f.kind, encoding) {
                (FeatureKind::Continuous, _) => {
                    let (min, max) = ranges[i];
                    (BlockKind::Continuous { min, max }, 1)
                }
                (FeatureKind::Categorical, Encoding::OneHot) => (
                    BlockKind::OneHot {
                        levels: f.levels.len(),
                    },
                    f.levels.len(),
                ),
                (FeatureKind::Categorical, Encoding::Ordinal) => (
                    BlockKind::Ordinal {
                        levels: f.levels.len(),
                    },
                    1,
                ),
            };
            blocks.push(Block {
                feature: i,
                offset,
                width,
                kind,
            });
            offset += width;
        }
        Ok(Encoder {
            schema,
            encoding,
            blocks,
            width: offset,
        })
    }

    /// Fits continuous ranges to the extrema of `rows` (raw values in schema order).
    pub fn fit(schema: FeatureSchema, encoding: Encoding, rows: &[Vec<Value>]) -> Result<Self> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); schema.features.len()];
        for row in rows {
            for (i, f) in schema.features.iter().enumerate() {
                if f.kind == FeatureKind::Continuous {
                    if let Some(Value::Num(v)) = row.get(i) {
                        ranges[i].0 = ranges[i].0.min(*v);
                        ranges[i].1 = ranges[i].1.max(*v);
                    }
                }
            }
        }
        for r in ranges.iter_mut() {
            if !r.0.is_finite() {
                *r = (0.0, 1.0);
            }
        }
        Encoder::new(schema, encoding, &ranges)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, feature: usize) -> &Block {
        &self.blocks[feature]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Same ranges and encoding with a different schema (e.g. after overrides).
    pub fn with_schema(&self, schema: FeatureSchema) -> Result<Self> {
        if schema.features.len() != self.schema.features.len()
            || schema
                .features
                .iter()
                .zip(&self.schema.features)
                .any(|(a, b)| a.name != b.name || a.kind != b.kind || a.levels != b.levels)
        {
            return Err(Error::Schema("schema does not match the encoder's features".into()));
        }
        schema.validate()?;
        Ok(Encoder {
            schema,
            ..self.clone()
        })
    }

    /// Checks one raw value against its feature, normalising categorical
    /// numbers to their level names.
    pub fn check_value(&self, feature: usize, v: &Value) -> Result<Value, String> {
        let f = &self.schema.features[feature];
        match (f.kind, v) {
            (FeatureKind::Continuous, Value::Num(x)) if x.is_finite() => Ok(Value::Num(*x)),
            (FeatureKind::Continuous, Value::Num(_)) => Err("non-finite continuous value".into()),
            (FeatureKind::Continuous, Value::Text(s)) => s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Value::Num)
                .ok_or_else(|| format!("non-numeric continuous value `{s}`")),
            (FeatureKind::Categorical, Value::Text(s)) => f
                .level_index(s.trim())
                .map(|_| Value::Text(s.trim().to_string()))
                .ok_or_else(|| format!("unknown categorical level `{s}`")),
            (FeatureKind::Categorical, Value::Num(x)) => {
                let s = x.to_string();
                f.level_index(&s)
                    .map(|_| Value::Text(s.clone()))
                    .ok_or_else(|| format!("unknown categorical level `{s}`"))
            }
        }
    }

    /// Orders a keyed record by schema and validates every value.
    pub fn values_from_record(&self, record: &Record) -> Result<Vec<Value>> {
        for key in record.keys() {
            if self.schema.index_of(key).is_none() {
                return Err(Error::feature(key, "not a feature of the schema"));
            }
        }
        self.schema
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let v = record.get(&f.name).ok_or_else(|| Error::MissingColumn(f.name.clone()))?;
                self.check_value(i, v).map_err(|r| Error::feature(&f.name, r))
            })
            .collect()
    }

    pub fn record_from_values(&self, values: &[Value]) -> Record {
        self.schema
            .features
            .iter()
            .zip(values)
            .map(|(f, v)| (f.name.clone(), v.clone()))
            .collect()
    }

    pub fn encode(&self, values: &[Value]) -> Result<Vec<f64>> {
        if values.len() != self.schema.features.len() {
            return Err(Error::WidthMismatch {
                expected: self.schema.features.len(),
                got: values.len(),
            });
        }
        let mut x = vec![0.0; self.width];
        for (b, v) in self.blocks.iter().zip(values) {
            let f = &self.schema.features[b.feature];
            let v = self.check_value(b.feature, v).map_err(|r| Error::feature(&f.name, r))?;
            match (b.kind, v) {
                (BlockKind::Continuous { .. }, Value::Num(raw)) => x[b.offset] = b.scale(raw),
                (BlockKind::OneHot { .. }, Value::Text(level)) => {
                    x[b.offset + f.level_index(&level).expect("checked")] = 1.0;
                }
                (BlockKind::Ordinal { .. }, Value::Text(level)) => {
                    x[b.offset] = b.scale(f.level_index(&level).expect("checked") as f64);
                }
                _ => unreachable!("check_value normalises kinds"),
            }
        }
        Ok(x)
    }

    pub fn encode_record(&self, record: &Record) -> Result<Vec<f64>> {
        self.encode(&self.values_from_record(record)?)
    }

    /// Decodes an encoded (possibly relaxed) vector. Categorical blocks are
    /// projected to their argmax level, lowest index on ties.
    pub fn decode(&self, x: &[f64]) -> Result<Vec<Value>> {
        if x.len() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: x.len(),
            });
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let f = &self.schema.features[b.feature];
                match b.kind {
                    BlockKind::Continuous { .. } => Value::Num(b.unscale(x[b.offset])),
                    _ => Value::Text(f.levels[b.read(x) as usize].clone()),
                }
            })
            .collect())
    }

    pub fn decode_record(&self, x: &[f64]) -> Result<Record> {
        Ok(self.record_from_values(&self.decode(x)?))
    }

    /// Snaps categorical blocks of a relaxed vector to valid codes.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for b in &self.blocks {
            match b.kind {
                BlockKind::Continuous { .. } => {}
                BlockKind::OneHot { .. } => {
                    let level = b.read(x) as usize;
                    for c in b.columns() {
                        out[c] = 0.0;
                    }
                    out[b.offset + level] = 1.0;
                }
                BlockKind::Ordinal { .. } => out[b.offset] = b.scale(b.read(x)),
            }
        }
        out
    }
}
