//! Plain-language rendering of explanation items.

use serde_json::Value as Json;

use super::Item;
use crate::data::{FeatureSchema, Record};

fn number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// One phrase per feature the item's action changes, in schema order.
pub fn describe_changes(schema: &FeatureSchema, original: &Record, item: &Item) -> Vec<String> {
    schema
        .features
        .iter()
        .filter_map(|f| {
            let value = item.action.get(&f.name)?;
            match value {
                Json::Number(n) => {
                    let d = n.as_f64()?;
                    if d.abs() < 1e-9 {
                        None
                    } else if d > 0.0 {
                        Some(format!("increased {} by {}", f.name, number(d)))
                    } else {
                        Some(format!("decreased {} by {}", f.name, number(-d)))
                    }
                }
                Json::String(level) => {
                    let before = original.get(&f.name).map(|v| v.to_string()).unwrap_or_default();
                    (before != *level).then(|| format!("changed {} from {} to {}", f.name, before, level))
                }
                _ => None,
            }
        })
        .collect()
}

/// "Even if you ..., the outcome would still be positive."
pub fn even_if_sentence(schema: &FeatureSchema, original: &Record, item: &Item) -> String {
    let changes = describe_changes(schema, original, item);
    let outcome = if schema.positive_label_meaning.is_empty() {
        "the outcome would still be positive".to_string()
    } else {
        format!("you would still get: {}", schema.positive_label_meaning)
    };
    match changes.len() {
        0 => format!("Even if you changed nothing, {outcome}."),
        1 => format!("Even if you {}, {outcome}.", changes[0]),
        n => format!(
            "Even if you {} and {}, {outcome}.",
            changes[..n - 1].join(", "),
            changes[n - 1]
        ),
    }
}
