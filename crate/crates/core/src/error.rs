use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single row that failed validation while loading a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// Zero-based data row index (the header is not counted).
    pub row: usize,
    pub feature: String,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {} feature `{}`: {}", self.row, self.feature, self.reason)
    }
}

/// What a search saw before giving up without an effective semifactual.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchDiagnostics {
    pub evaluated: usize,
    pub positive: usize,
    pub positive_gain: usize,
    pub note: String,
}

impl fmt::Display for SearchDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} candidates evaluated, {} kept the positive label, {} of those had positive gain",
            self.evaluated, self.positive, self.positive_gain
        )?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("feature `{feature}`: {reason}")]
    Feature { feature: String, reason: String },

    #[error("no data rows")]
    NoData,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("unexpected column `{0}`")]
    UnexpectedColumn(String),

    #[error("{} invalid row(s): {}", .0.len(), join_rows(.0))]
    InvalidRows(Vec<RowError>),

    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("empty action space: no feature can be changed")]
    EmptyActionSpace,

    #[error("infeasible action: {0}")]
    InfeasibleAction(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("cycle detected in causal graph at `{0}`")]
    Cycle(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("not a positive outcome: score {score:.6} does not exceed threshold {psi}")]
    NotPositive { score: f64, psi: f64 },

    #[error("no effective semifactual: {0}")]
    EmptyResult(SearchDiagnostics),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn feature(feature: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Feature {
            feature: feature.into(),
            reason: reason.into(),
        }
    }

    /// The feature this error is about, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Feature { feature, .. } => Some(feature),
            Error::MissingColumn(c) | Error::UnexpectedColumn(c) => Some(c),
            Error::InvalidRows(rows) => rows.first().map(|r| r.feature.as_str()),
            Error::UnknownNode(n) | Error::Cycle(n) => Some(n),
            _ => None,
        }
    }
}

fn join_rows(rows: &[RowError]) -> String {
    const SHOWN: usize = 5;
    let mut s = rows
        .iter()
        .take(SHOWN)
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if rows.len() > SHOWN {
        s.push_str(&format!("; ... and {} more", rows.len() - SHOWN));
    }
    s
}
