//! One entry point for every explanation method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::data::{Dataset, Encoder, Encoding};
use crate::objective::NeighborIndex;
use crate::predictors::Predictor;
use crate::scm::Scm;
use crate::sgen::{self, EngineConfig, ExplanationSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sgen,
    SgenCausal,
    DiceStar,
    PieceStar,
    DserStar,
    KarimiStar,
    DominguezStar,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sgen,
        Method::SgenCausal,
        Method::DiceStar,
        Method::PieceStar,
        Method::DserStar,
        Method::KarimiStar,
        Method::DominguezStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgen => "sgen",
            Method::SgenCausal => "sgen_causal",
            Method::DiceStar => "dice_star",
            Method::PieceStar => "piece_star",
            Method::DserStar => "dser_star",
            Method::KarimiStar => "karimi_star",
            Method::DominguezStar => "dominguez_star",
        }
    }

    /// Methods that push actions through a causal model.
    pub fn is_causal(self) -> bool {
        matches!(self, Method::SgenCausal | Method::KarimiStar | Method::DominguezStar)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// What a method may need besides the individual.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub model: &'a Predictor,
    pub encoder: &'a Encoder,
    /// Training rows, required by `piece_star`.
    pub data: Option<&'a Dataset>,
    /// Training rows for plausibility.
    pub neighbors: Option<&'a NeighborIndex>,
    /// Causal model; causal methods fall back to independent features.
    pub scm: Option<&'a Scm>,
}

pub fn explain(method: Method, x: &[f64], ctx: Context, m: usize, cfg: &EngineConfig, seed: u64) -> Result<ExplanationSet> {
    let Context {
        model,
        encoder,
        neighbors,
        ..
    } = ctx;
    let independent;
    let scm = if method.is_causal() {
        match ctx.scm {
            Some(s) => Some(s),
            None => {
                if encoder.encoding() != Encoding::Ordinal {
                    return Err(Error::Unsupported(format!(
                        "{method} needs ordinal encoding (one column per feature)"
                    )));
                }
                independent = Scm::independent(encoder.schema().features.iter().map(|f| f.name.clone()));
                Some(&independent)
            }
        }
    } else {
        None
    };
    match method {
        Method::Sgen => sgen::explain_noncausal(x, model, encoder, neighbors, m, cfg, seed),
        Method::SgenCausal => sgen::explain_causal(x, model, scm.expect("causal"), encoder, neighbors, cfg, seed),
        Method::DiceStar => baselines::dice_star(x, model, encoder, neighbors, m, cfg, seed),
        Method::PieceStar => {
            let data = ctx
                .data
                .ok_or_else(|| Error::Config("piece_star needs the training dataset".into()))?;
            baselines::piece_star(x, model, data, m, cfg, seed)
        }
        Method::DserStar => baselines::dser_star(x, model, encoder, neighbors, m, cfg, seed),
        Method::KarimiStar => baselines::karimi_star(x, model, scm.expect("causal"), encoder, neighbors, m, cfg, seed),
        Method::DominguezStar => {
            baselines::dominguez_star(x, model, scm.expect("causal"), encoder, neighbors, m, cfg, seed)
        }
    }
}
