//! Deterministic fixed-horizon tasks and episode rollouts.
//!
//! - `point_omni`: a point robot in the unit square, velocity-commanded,
//!   descriptor = final position.
//! - `point_trap_omni`: the same arena with a U-shaped trap around the
//!   start, open towards `-x`.
//! - `duty_cycle_uni`: two "feet"; a foot is in contact on steps where its
//!   action component is positive. Descriptor = per-foot contact fraction.
//!
//! Every task pays `1 + energy_coef · (1 − ‖a‖² / (bound² · action_dim))` per step,
//! so rewards lie in `[1, 1 + energy_coef]` and the energy-optimal behaviour is to
//! stand still.

mod geometry;
mod policy;

pub use geometry::Wall;
pub use policy::{ConditionedPolicy, MlpPolicy, Policy};

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    PointOmni,
    PointTrapOmni,
    DutyCycleUni,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::PointOmni => "point_omni",
            EnvKind::PointTrapOmni => "point_trap_omni",
            EnvKind::DutyCycleUni => "duty_cycle_uni",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub state_dim: usize,
    pub action_dim: usize,
    pub episode_length: usize,
    pub action_bound: f64,
    pub descriptor_dim: usize,
    /// Integration step of the point tasks.
    pub dt: f64,
    /// Weight of the energy penalty in the reward.
    pub energy_coef: f64,
    pub walls: Vec<Wall>,
}

pub const DEFAULT_ENERGY_COEF: f64 = 0.5;

impl EnvSpec {
    pub fn new(kind: EnvKind) -> Self {
        let base = EnvSpec {
            kind,
            state_dim: 3,
            action_dim: 2,
            episode_length: 100,
            action_bound: 1.0,
            descriptor_dim: 2,
            dt: 0.01,
            energy_coef: DEFAULT_ENERGY_COEF,
            walls: Vec::new(),
        };
        match kind {
            EnvKind::PointOmni => base,
            EnvKind::PointTrapOmni => EnvSpec {
                walls: vec![
                    Wall::new([0.6, 0.4], [0.6, 0.6]),
                    Wall::new([0.45, 0.6], [0.6, 0.6]),
                    Wall::new([0.45, 0.4], [0.6, 0.4]),
                ],
                ..base
            },
            EnvKind::DutyCycleUni => EnvSpec {
                episode_length: 200,
                ..base
            },
        }
    }

    pub fn point_omni() -> Self {
        Self::new(EnvKind::PointOmni)
    }

    pub fn point_trap_omni() -> Self {
        Self::new(EnvKind::PointTrapOmni)
    }

    pub fn duty_cycle_uni() -> Self {
        Self::new(EnvKind::DutyCycleUni)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::InvalidConfig("episode_length must be ≥ 1".into()));
        }
        if !(self.action_bound > 0.0) {
            return Err(Error::InvalidConfig("action_bound must be > 0".into()));
        }
        if !(self.energy_coef >= 0.0) {
            return Err(Error::InvalidConfig("energy_coef must be ≥ 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be > 0".into()));
        }
        Ok(())
    }

    /// Largest possible per-step reward.
    pub fn max_reward(&self) -> f64 {
        1.0 + self.energy_coef
    }

    pub fn reward(&self, action: &[f64]) -> f64 {
        let energy: f64 = action.iter().map(|a| a * a).sum();
        let scale = self.action_bound * self.action_bound * self.action_dim as f64;
        1.0 + self.energy_coef * (1.0 - energy / scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub observation: Vec<f64>,
    pub step_index: usize,
    /// Point tasks: position in the unit square.
    pub position: [f64; 2],
    /// Duty task: contact counts per foot.
    pub duty: [usize; 2],
    /// Duty task: accumulated forward progress.
    pub progress: f64,
}

impl EnvState {
    fn observe(&mut self, spec: &EnvSpec) {
        let t = self.step_index as f64 / spec.episode_length as f64;
        self.observation = match spec.kind {
            EnvKind::PointOmni | EnvKind::PointTrapOmni => {
                vec![self.position[0], self.position[1], t]
            }
            EnvKind::DutyCycleUni => {
                let len = spec.episode_length as f64;
                vec![self.duty[0] as f64 / len, self.duty[1] as f64 / len, t]
            }
        };
    }
}

pub fn env_reset(spec: &EnvSpec) -> EnvState {
    let position = match spec.kind {
        EnvKind::PointOmni | EnvKind::PointTrapOmni => [0.5, 0.5],
        EnvKind::DutyCycleUni => [0.0, 0.0],
    };
    let mut state = EnvState {
        observation: Vec::new(),
        step_index: 0,
        position,
        duty: [0, 0],
        progress: 0.0,
    };
    state.observe(spec);
    state
}

/// Advances one step. Actions are clipped into `[-bound, bound]` first.
pub fn env_step(spec: &EnvSpec, state: &EnvState, action: &[f64]) -> Result<(EnvState, f64)> {
    let (next, _, reward) = step_clipped(spec, state, action)?;
    Ok((next, reward))
}

fn step_clipped(
    spec: &EnvSpec,
    state: &EnvState,
    action: &[f64],
) -> Result<(EnvState, Vec<f64>, f64)> {
    if state.step_index >= spec.episode_length {
        return Err(Error::EpisodeFinished(spec.episode_length));
    }
    if action.len() != spec.action_dim {
        return Err(Error::dims("action", spec.action_dim, action.len()));
    }
    let bound = spec.action_bound;
    let action: Vec<f64> = action.iter().map(|a| a.clamp(-bound, bound)).collect();
    let mut next = state.clone();
    match spec.kind {
        EnvKind::PointOmni | EnvKind::PointTrapOmni => {
            let p = state.position;
            let q = [
                (p[0] + spec.dt * action[0]).clamp(0.0, 1.0),
                (p[1] + spec.dt * action[1]).clamp(0.0, 1.0),
            ];
            next.position = geometry::resolve_motion(p, q, &spec.walls);
        }
        EnvKind::DutyCycleUni => {
            next.progress += (action[0] + action[1]).max(0.0) / 2.0;
            for (count, &a) in next.duty.iter_mut().zip(&action) {
                if a > 0.0 {
                    *count += 1;
                }
            }
        }
    }
    next.step_index += 1;
    next.observe(spec);
    let reward = spec.reward(&action);
    Ok((next, action, reward))
}

pub fn extract_descriptor(spec: &EnvSpec, final_state: &EnvState) -> Result<Vec<f64>> {
    if final_state.step_index != spec.episode_length {
        return Err(Error::EpisodeIncomplete {
            done: final_state.step_index,
            total: spec.episode_length,
        });
    }
    Ok(match spec.kind {
        EnvKind::PointOmni | EnvKind::PointTrapOmni => final_state.position.to_vec(),
        EnvKind::DutyCycleUni => {
            let len = spec.episode_length as f64;
            final_state.duty.iter().map(|&c| c as f64 / len).collect()
        }
    })
}

/// One environment step as seen by a learner. `done` marks true
/// termination, which the fixed-horizon tasks here never produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// Undiscounted return.
    pub fitness: f64,
    pub descriptor: Vec<f64>,
    pub transitions: Vec<Step>,
}

pub fn rollout<P: Policy + ?Sized>(spec: &EnvSpec, policy: &P) -> Result<EvalResult> {
    let mut state = env_reset(spec);
    let mut transitions = Vec::with_capacity(spec.episode_length);
    let mut fitness = 0.0;
    for _ in 0..spec.episode_length {
        let action = policy.act(&state.observation)?;
        let (next, clipped, reward) = step_clipped(spec, &state, &action)?;
        fitness += reward;
        transitions.push(Step {
            state: std::mem::take(&mut state.observation),
            action: clipped,
            reward,
            next_state: next.observation.clone(),
            done: false,
        });
        state = next;
    }
    Ok(EvalResult {
        fitness,
        descriptor: extract_descriptor(spec, &state)?,
        transitions,
    })
}

/// Runs `episodes` rollouts in lockstep. `policy` maps a matrix of
/// observations (one row per episode) to a matrix of actions.
pub fn rollout_batch<F>(spec: &EnvSpec, episodes: usize, mut policy: F) -> Result<Vec<EvalResult>>
where
    F: FnMut(ArrayView2<'_, f64>) -> Result<Array2<f64>>,
{
    let mut states = vec![env_reset(spec); episodes];
    let mut results: Vec<EvalResult> = (0..episodes)
        .map(|_| EvalResult {
            fitness: 0.0,
            descriptor: Vec::new(),
            transitions: Vec::with_capacity(spec.episode_length),
        })
        .collect();
    let mut obs = Array2::zeros((episodes, spec.state_dim));
    for _ in 0..spec.episode_length {
        for (mut row, s) in obs.rows_mut().into_iter().zip(&states) {
            row.assign(&ArrayView1::from(&s.observation[..]));
        }
        let actions = policy(obs.view())?;
        if actions.dim() != (episodes, spec.action_dim) {
            return Err(Error::dims("batched actions", spec.action_dim, actions.ncols()));
        }
        for ((state, result), action) in states.iter_mut().zip(&mut results).zip(actions.rows()) {
            let action = action.to_vec();
            let (next, clipped, reward) = step_clipped(spec, state, &action)?;
            result.fitness += reward;
            result.transitions.push(Step {
                state: std::mem::take(&mut state.observation),
                action: clipped,
                reward,
                next_state: next.observation.clone(),
                done: false,
            });
            *state = next;
        }
    }
    for (state, result) in states.iter().zip(&mut results) {
        result.descriptor = extract_descriptor(spec, state)?;
    }
    Ok(results)
}
