//! Quality-diversity optimization of neural-network policies.
//!
//! Three archive-based optimizers share one substrate:
//!
//! - MAP-Elites with an iso+line genetic operator,
//! - PGA-MAP-Elites, which adds a TD3 critic and policy-gradient offspring,
//! - DCG-MAP-Elites, whose critic and actor are conditioned on a target
//!   descriptor so gradient offspring stay in their parent's niche. The
//!   conditioned actor doubles as a distilled policy for the whole archive.
//!
//! Everything is deterministic given a seed and runs on one core.

pub mod archive;
pub mod envs;
mod error;
pub mod metrics;
pub mod nn;
pub mod rl;
pub mod runner;
pub mod variation;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
