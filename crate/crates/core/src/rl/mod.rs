//! Replay storage and TD3 training, standard and descriptor-conditioned.
//!
//! A conditioned critic estimates `Q(s, a | d′)`: the return of taking `a`
//! in `s` *and* ending the episode with descriptor `d′`. It is learned by
//! scaling each reward with the similarity between the descriptor `d` the
//! trajectory actually reached and the target `d′` it was conditioned on.

mod actor_critic;
mod buffer;
mod io;

pub use actor_critic::{
    actor_dpg_gradient, actor_dpg_update, critic_target, critic_update, soft_update, train_actor_critic, ActorCritic,
    Net, TrainStats,
};
pub use buffer::{Batch, ReplayBuffer};


use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An environment step extended with the descriptor the trajectory
/// reached (`observed`) and the descriptor it was conditioned on (`target`).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    pub observed_descriptor: Vec<f64>,
    pub target_descriptor: Vec<f64>,
}

/// `exp(−‖d − d′‖ / l)` with the Euclidean norm.
pub fn similarity(d: &[f64], d_target: &[f64], lengthscale: f64) -> f64 {
    (-euclidean(d, d_target) / lengthscale).exp()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Config {
    pub gamma: f64,
    /// Actor and target updates happen every `actor_delay` critic steps.
    pub actor_delay: usize,
    pub tau: f64,
    pub smoothing_noise_sigma: f64,
    pub smoothing_noise_clip: f64,
    pub batch_size: usize,
    pub training_steps: usize,
    pub lengthscale: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub buffer_capacity: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            actor_delay: 2,
            tau: 0.005,
            smoothing_noise_sigma: 0.2,
            smoothing_noise_clip: 0.5,
            batch_size: 100,
            training_steps: 300,
            lengthscale: 0.008,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            buffer_capacity: 1_000_000,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("td3.gamma must satisfy 0 < gamma ≤ 1");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("td3.tau must lie in (0, 1]");
        }
        if !(self.lengthscale > 0.0) {
            return fail("td3.lengthscale must be > 0");
        }
        if !(self.smoothing_noise_clip >= 0.0) {
            return fail("td3.smoothing_noise_clip must be ≥ 0");
        }
        if !(self.smoothing_noise_sigma >= 0.0) {
            return fail("td3.smoothing_noise_sigma must be ≥ 0");
        }
        if self.actor_delay == 0 {
            return fail("td3.actor_delay must be ≥ 1");
        }
        if self.batch_size == 0 {
            return fail("td3.batch_size must be ≥ 1");
        }
        if self.buffer_capacity == 0 {
            return fail("td3.buffer_capacity must be ≥ 1");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return fail("td3 learning rates must be > 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
