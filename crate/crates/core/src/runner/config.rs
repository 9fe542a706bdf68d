use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::rl::Td3Config;
use crate::variation::{GaParams, PgParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    MapElites,
    PgaMe,
    DcgMe,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MapElites => "map_elites",
            Algorithm::PgaMe => "pga_me",
            Algorithm::DcgMe => "dcg_me",
        }
    }
}

/// Variants of DCG-MAP-Elites with one mechanism removed or replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    None,
    /// No actor rollouts, so every stored transition has `d′ = d`.
    NoActorEval,
    /// No actor rollouts; each offspring episode is stored a second time
    /// with a uniformly random target descriptor.
    SyntheticNegatives,
    /// The actor's descriptor input is frozen at zero weight.
    UnconditionedActor,
}

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::NoActorEval => "no_actor_eval",
            Ablation::SyntheticNegatives => "synthetic_negatives",
            Ablation::UnconditionedActor => "unconditioned_actor",
        }
    }

    pub fn evaluates_actor(self) -> bool {
        matches!(self, Ablation::None | Ablation::UnconditionedActor)
    }
}

/// Hidden layer widths. PGA-MAP-Elites uses `policy_hidden` for its actor so
/// the actor can enter the archive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub policy_hidden: Vec<usize>,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            policy_hidden: vec![16, 16],
            actor_hidden: vec![32, 32],
            critic_hidden: vec![32, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub env: EnvKind,
    /// Offspring evaluations after initialization.
    pub eval_budget: usize,
    pub batch_size: usize,
    /// Genetic offspring per iteration; the rest come from the gradient
    /// operator.
    pub ga_count: usize,
    pub descriptor_noise_sigma: f64,
    pub td3: Td3Config,
    pub ga: GaParams,
    pub pg: PgParams,
    pub networks: NetworkConfig,
    pub seed: u64,
    pub ablation: Ablation,
    /// Charge actor rollouts against `eval_budget`.
    pub count_actor_evals: bool,
    pub centroids: usize,
    pub cvt_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::DcgMe,
            env: EnvKind::PointOmni,
            eval_budget: 51_200,
            batch_size: 256,
            ga_count: 128,
            descriptor_noise_sigma: 0.0004,
            td3: Td3Config::default(),
            ga: GaParams::default(),
            pg: PgParams::default(),
            networks: NetworkConfig::default(),
            seed: 0,
            ablation: Ablation::None,
            count_actor_evals: false,
            centroids: 1024,
            cvt_seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.batch_size == 0 {
            return fail("batch_size must be ≥ 1".into());
        }
        if self.ga_count > self.batch_size {
            return fail(format!(
                "ga_count ({}) must satisfy g ≤ b with batch_size b = {}",
                self.ga_count, self.batch_size
            ));
        }
        if self.eval_budget < self.batch_size {
            return fail(format!(
                "eval_budget ({}) must be at least batch_size ({})",
                self.eval_budget, self.batch_size
            ));
        }
        if !(self.descriptor_noise_sigma >= 0.0) {
            return fail("descriptor_noise_sigma must be ≥ 0".into());
        }
        if self.centroids == 0 {
            return fail("centroids must be ≥ 1".into());
        }
        if self.ablation != Ablation::None && self.algorithm != Algorithm::DcgMe {
            return fail(format!(
                "ablation {} only applies to dcg_me, not {}",
                self.ablation.name(),
                self.algorithm.name()
            ));
        }
        if self.algorithm == Algorithm::PgaMe && self.batch_size < 2 {
            return fail("pga_me needs batch_size ≥ 2 to make room for the actor".into());
        }
        self.ga.validate()?;
        if self.algorithm != Algorithm::MapElites {
            self.td3.validate()?;
            self.pg.validate()?;
        }
        Ok(())
    }
}
