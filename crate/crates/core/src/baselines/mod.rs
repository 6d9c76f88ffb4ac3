//! Comparison methods, modified to produce semifactuals, behind the same
//! [`ExplanationSet`] contract as the S-GEN engines.
//!
//! * `dice_star`: diverse counterfactuals, then a search back across the
//!   boundary from each of them.
//! * `piece_star`: features moved one by one to their expected value under the
//!   opposite class, least probable first, stopping before the boundary.
//! * `dser_star`: sequential distance-maximising hill climbs with repulsion
//!   from earlier solutions.
//! * `karimi_star` and `dominguez_star`: gradient recourse through the causal
//!   model toward the boundary, stopped one step early (the latter also stops
//!   before a nearby individual would cross).

mod dice;
mod dser;
mod piece;
mod walk;

use serde::{Deserialize, Serialize};

pub use dice::{dice_star, DiceConfig};
pub use dser::{dser_star, DserConfig};
pub use piece::{modification_order, piece_star, BetaFit};
pub use walk::{dominguez_star, karimi_star, WalkConfig};

use crate::data::Action;
use crate::rng_for;
use crate::sgen::{ExplanationSet, Item, Problem};
use crate::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub dice: DiceConfig,
    pub dser: DserConfig,
    pub walk: WalkConfig,
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.dice.validate()?;
        self.dser.validate()?;
        self.walk.validate()
    }
}

/// Item for a non-causal action, with freshly sampled robustness.
fn substitution_item(problem: &Problem, action: Action, rng: &mut crate::Rng) -> Result<Item> {
    let theta = problem.space.apply(&action);
    let robustness = problem.robustness_sampled(&theta, rng);
    problem.item(action, theta, robustness, None)
}

/// Assembles a baseline's set: unique items in order, complemented to `m`.
/// With nothing found the set holds the unchanged individual and is flagged.
fn finish(
    problem: &Problem,
    method: &str,
    seed: u64,
    m: usize,
    candidates: Vec<Item>,
    warnings: Vec<String>,
    config: serde_json::Value,
) -> Result<ExplanationSet> {
    let mut items = Vec::new();
    for c in candidates {
        if items.len() == m {
            break;
        }
        crate::sgen::push_unique(&mut items, c);
    }
    if items.is_empty() {
        let identity = problem.space.identity();
        let mut rng = rng_for(seed, 4);
        items.push(substitution_item(problem, identity, &mut rng)?);
    }
    crate::sgen::complement(&mut items, m, &mut rng_for(seed, 3));
    let mut set = problem.set(method, seed, m, items, config);
    set.warnings = warnings;
    Ok(set)
}
