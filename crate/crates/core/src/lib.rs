//! Semifactual ("even if ...") explanations that maximise a user's gain.
//!
//! Given a tabular individual that a binary classifier already scores
//! positively, the engines in this crate search for actions the individual
//! could take that leave the outcome unchanged while moving them as far as
//! possible in the direction they care about. Two engines are provided:
//!
//! * [`sgen::explain_noncausal`]: a genetic search that only needs labels
//!   from the model and treats features as independently manipulable.
//! * [`sgen::explain_causal`]: a projected-gradient maximin over a linear
//!   additive-noise structural causal model, so that downstream effects of an
//!   action count towards the gain.
//!
//! The [`baselines`] module re-implements the comparison methods behind the
//! same [`sgen::ExplanationSet`] contract, and [`evaluation`] holds the
//! metrics, the adversarial-radius probe and the benchmark harness.
//! [`method::explain`] dispatches to any of them by name.

pub mod baselines;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod method;
pub mod objective;
pub mod predictors;
pub mod scm;
pub mod sgen;
pub mod synth;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used by every engine.
pub type Rng = ChaCha8Rng;

/// Seeds an engine RNG. `stream` separates independent consumers of one seed.
pub fn rng_for(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
