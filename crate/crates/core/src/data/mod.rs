//! Dataset ingestion, feature encoding and per-individual action spaces.

mod action;
mod dataset;
mod encode;
mod schema;

pub use action::{Action, ActionSpace, Coord, CoordKind, Provenance, MIN_CHANGE};
pub use dataset::{load_dataset, read_dataset, Dataset, Individual};
pub use encode::{Block, BlockKind, Encoder, Encoding, Record, Value};
pub use schema::{Direction, FeatureKind, FeatureOverride, FeatureSchema, FeatureSpec, Overrides, Polarity};
