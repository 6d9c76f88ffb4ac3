use std::path::Path;

use rand::seq::SliceRandom;

use super::encode::{Encoder, Encoding, Record, Value};
use super::schema::FeatureSchema;
use crate::error::RowError;
use crate::{Error, Result};

/// One encoded row.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: String,
    pub raw: Vec<Value>,
    pub x: Vec<f64>,
}

/// Encoded rows plus binary labels. Immutable once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub encoder: Encoder,
    pub individuals: Vec<Individual>,
    pub labels: Vec<u8>,
}

impl Dataset {
    /// Builds a dataset from raw rows, fitting the encoder on them.
    pub fn from_rows(schema: FeatureSchema, encoding: Encoding, rows: Vec<(Vec<Value>, u8)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoData);
        }
        let raw: Vec<Vec<Value>> = rows.iter().map(|(r, _)| r.clone()).collect();
        let encoder = Encoder::fit(schema, encoding, &raw)?;
        let labels = rows.iter().map(|(_, y)| *y).collect();
        let individuals = raw
            .into_iter()
            .enumerate()
            .map(|(i, raw)| {
                let x = encoder.encode(&raw)?;
                Ok(Individual {
                    id: i.to_string(),
                    raw,
                    x,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            encoder,
            individuals,
            labels,
        })
    }

    /// Re-encodes raw rows with an existing encoder (used for splits).
    pub fn with_encoder(encoder: Encoder, rows: Vec<(Individual, u8)>) -> Self {
        let (individuals, labels) = rows
            .into_iter()
            .map(|(mut ind, y)| {
                ind.x = encoder.encode(&ind.raw).expect("rows were validated on load");
                (ind, y)
            })
            .unzip();
        Dataset {
            encoder,
            individuals,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn schema(&self) -> &FeatureSchema {
        self.encoder.schema()
    }

    pub fn width(&self) -> usize {
        self.encoder.width()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.individuals.iter().map(|i| i.x.as_slice())
    }

    pub fn find(&self, id: &str) -> Option<&Individual> {
        self.individuals.iter().find(|i| i.id == id)
    }

    pub fn record(&self, index: usize) -> Record {
        self.encoder.record_from_values(&self.individuals[index].raw)
    }

    /// Deterministic shuffled split; the encoder (and its scaling) is shared.
    pub fn split(&self, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut crate::rng_for(seed, 0x5711));
        let n_test = ((self.len() as f64) * test_fraction).round() as usize;
        let pick = |ids: &[usize]| Dataset {
            encoder: self.encoder.clone(),
            individuals: ids.iter().map(|&i| self.individuals[i].clone()).collect(),
            labels: ids.iter().map(|&i| self.labels[i]).collect(),
        };
        let (test, train) = idx.split_at(n_test.min(self.len()));
        (pick(train), pick(test))
    }

    /// Writes the raw rows as CSV with a header (`features..., label`).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let schema = self.schema();
        let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
        header.push(&schema.label);
        w.write_record(&header)?;
        for (ind, y) in self.individuals.iter().zip(&self.labels) {
            let mut rec: Vec<String> = ind.raw.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_label(s: &str) -> Option<u8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "positive" => Some(1),
        "0" | "false" | "no" | "negative" => Some(0),
        other => other.parse::<f64>().ok().map(|v| u8::from(v > 0.5)),
    }
}

/// Loads a headered CSV whose columns are the schema features plus the label
/// column (an optional `id` column is used as the identifier).
pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema, encoding: Encoding) -> Result<Dataset> {
    let reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    read_dataset(reader, schema, encoding)
}

pub fn read_dataset<R: std::io::Read>(
    mut reader: csv::Reader<R>,
    schema: &FeatureSchema,
    encoding: Encoding,
) -> Result<Dataset> {
    schema.validate()?;
    let header = reader.headers()?.clone();
    let position = |name: &str| header.iter().position(|h| h == name);
    let mut columns = Vec::with_capacity(schema.features.len());
    for f in &schema.features {
        columns.push(position(&f.name).ok_or_else(|| Error::MissingColumn(f.name.clone()))?);
    }
    let label_col = position(&schema.label).ok_or_else(|| Error::MissingColumn(schema.label.clone()))?;
    let id_col = position("id");
    for h in header.iter() {
        if h != schema.label && h != "id" && schema.index_of(h).is_none() {
            return Err(Error::UnexpectedColumn(h.to_string()));
        }
    }

    // Scaling needs the extrema, so validate everything first with a
    // provisional encoder and fit the real one afterwards.
    let provisional = Encoder::new(schema.clone(), encoding, &vec![(0.0, 1.0); schema.features.len()])?;
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    let mut errors = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut values = Vec::with_capacity(columns.len());
        for (i, &c) in columns.iter().enumerate() {
            let cell = rec.get(c).unwrap_or("");
            match provisional.check_value(i, &Value::Text(cell.to_string())) {
                Ok(v) => values.push(v),
                Err(reason) => errors.push(RowError {
                    row,
                    feature: schema.features[i].name.clone(),
                    reason,
                }),
            }
        }
        let label = rec.get(label_col).and_then(parse_label);
        if label.is_none() {
            errors.push(RowError {
                row,
                feature: schema.label.clone(),
                reason: format!("unreadable label `{}`", rec.get(label_col).unwrap_or("")),
            });
        }
        if values.len() == columns.len() {
            if let Some(y) = label {
                rows.push((values, y));
                ids.push(id_col.and_then(|c| rec.get(c)).map(str::to_string).unwrap_or_else(|| row.to_string()));
            }
        }
    }
    if !errors.is_empty() {
        return Err(Error::InvalidRows(errors));
    }
    let mut data = Dataset::from_rows(schema.clone(), encoding, rows)?;
    for (ind, id) in data.individuals.iter_mut().zip(ids) {
        ind.id = id;
    }
    Ok(data)
}
