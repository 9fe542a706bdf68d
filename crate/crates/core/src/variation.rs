//! Offspring generators: the iso+line genetic operator and the
//! critic-guided policy-gradient operator.

use ndarray::{s, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::nn::{batch, AdamState, MlpArch, ParamVector};
use crate::rl::{ActorCritic, Net, ReplayBuffer};
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    /// Isotropic Gaussian step.
    pub sigma1: f64,
    /// Step along the line joining the two parents.
    pub sigma2: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self { sigma1: 0.005, sigma2: 0.05 }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::InvalidConfig("ga.sigma1 and ga.sigma2 must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgParams {
    pub gradient_steps: usize,
    pub batch_size: usize,
    pub policy_lr: f64,
}

impl Default for PgParams {
    fn default() -> Self {
        Self {
            gradient_steps: 30,
            batch_size: 100,
            policy_lr: 5e-3,
        }
    }
}

impl PgParams {
    pub fn validate(&self) -> Result<()> {
        if self.gradient_steps == 0 {
            return Err(Error::InvalidConfig("pg.gradient_steps must be ≥ 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("pg.batch_size must be ≥ 1".into()));
        }
        if !(self.policy_lr > 0.0) {
            return Err(Error::InvalidConfig("pg.policy_lr must be > 0".into()));
        }
        Ok(())
    }
}

/// `x1 + σ1·N(0, I) + σ2·n·(x2 − x1)` with a scalar `n ~ N(0, 1)` per pair.
pub fn variation_ga(parents: &[(&[f64], &[f64])], params: &GaParams, rng: &mut Rng) -> Result<Vec<ParamVector>> {
    parents
        .iter()
        .map(|&(x1, x2)| {
            if x1.len() != x2.len() {
                return Err(Error::dims("second parent", x1.len(), x2.len()));
            }
            let line: f64 = StandardNormal.sample(rng);
            let child = x1
                .iter()
                .zip(x2)
                .map(|(&a, &b)| {
                    let iso: f64 = StandardNormal.sample(rng);
                    a + params.sigma1 * iso + params.sigma2 * line * (b - a)
                })
                .collect();
            Ok(ParamVector::new(child))
        })
        .collect()
}

/// Improves copies of `parents` by gradient ascent on the first critic.
///
/// Each parent gets `params.gradient_steps` Adam steps (fresh optimizer
/// state per parent), each on a fresh batch of replay states. With
/// `parent_descriptors`, the critic's descriptor input is fixed to the
/// parent's own descriptor.
pub fn variation_pg(
    parents: &[&[f64]],
    policy_arch: &MlpArch,
    ac: &ActorCritic,
    buffer: &ReplayBuffer,
    params: &PgParams,
    parent_descriptors: Option<&[Vec<f64>]>,
    rng: &mut Rng,
) -> Result<Vec<ParamVector>> {
    match (parent_descriptors, ac.is_conditioned()) {
        (Some(_), false) => return Err(Error::NotConditioned("descriptor-conditioned variation")),
        (None, true) => {
            return Err(Error::InvalidConfig(
                "a conditioned critic needs one descriptor per parent".into(),
            ))
        }
        (Some(d), true) if d.len() != parents.len() => {
            return Err(Error::dims("parent descriptors", parents.len(), d.len()))
        }
        _ => {}
    }
    if policy_arch.input_dim() != ac.state_dim() || policy_arch.output_dim() != ac.action_dim() {
        return Err(Error::InvalidArch(format!(
            "policy maps {} → {}, critic expects {} → {}",
            policy_arch.input_dim(),
            policy_arch.output_dim(),
            ac.state_dim(),
            ac.action_dim()
        )));
    }
    if buffer.is_empty() && !parents.is_empty() && params.gradient_steps > 0 {
        return Err(Error::EmptyBuffer);
    }

    let mut policies = Vec::with_capacity(parents.len());
    let mut descriptors = Vec::with_capacity(parents.len());
    for (i, parent) in parents.iter().enumerate() {
        policy_arch.check_params(parent)?;
        let descriptor = parent_descriptors.map(|d| d[i].as_slice()).unwrap_or(&[]);
        if descriptor.len() != ac.descriptor_dim() {
            return Err(Error::dims("parent descriptor", ac.descriptor_dim(), descriptor.len()));
        }
        descriptors.push(descriptor);
        policies.push(Net {
            arch: policy_arch.clone(),
            params: ParamVector::new(parent.to_vec()),
        });
    }
    ascend(&mut policies, ac, buffer, params, &descriptors, rng, |_| {})?;
    Ok(policies.into_iter().map(|p| p.params).collect())
}

/// Runs the gradient steps on all `policies` in lockstep, calling
/// `after_step` after each step. Every policy draws its own state batch; the
/// critic evaluates all of them in a single pass.
pub(crate) fn ascend(
    policies: &mut [Net],
    ac: &ActorCritic,
    buffer: &ReplayBuffer,
    params: &PgParams,
    descriptors: &[&[f64]],
    rng: &mut Rng,
    mut after_step: impl FnMut(&[Net]),
) -> Result<()> {
    let (p, n) = (policies.len(), params.batch_size);
    let (s_dim, a_dim, d_dim) = (ac.state_dim(), ac.action_dim(), ac.descriptor_dim());
    if p == 0 {
        return Ok(());
    }
    let mut opts: Vec<AdamState> = policies
        .iter()
        .map(|net| AdamState::new(net.params.len(), params.policy_lr))
        .collect();
    let critic = &ac.critics[0];
    let mut x = Array2::zeros((p * n, s_dim + a_dim + d_dim));
    for (i, d) in descriptors.iter().enumerate() {
        for r in i * n..(i + 1) * n {
            for (j, &v) in d.iter().enumerate() {
                x[[r, s_dim + a_dim + j]] = v;
            }
        }
    }
    let dq = Array2::from_elem((p * n, 1), 1.0 / n as f64);
    for _ in 0..params.gradient_steps {
        let mut tapes = Vec::with_capacity(p);
        for (i, policy) in policies.iter().enumerate() {
            let rows = i * n..(i + 1) * n;
            buffer.sample_states_into(x.slice_mut(s![rows.clone(), ..s_dim]), rng)?;
            let states = x.slice(s![rows.clone(), ..s_dim]).to_owned();
            let (actions, tape) = batch::forward_tape(&policy.arch, &policy.params, states.view())?;
            x.slice_mut(s![rows, s_dim..s_dim + a_dim]).assign(&actions);
            tapes.push(tape);
        }
        let (_, critic_tape) = batch::forward_tape(&critic.arch, &critic.params, x.view())?;
        let input_grad = batch::backward(&critic.arch, &critic.params, &critic_tape, dq.view(), None)?;
        for (i, (policy, tape)) in policies.iter_mut().zip(&tapes).enumerate() {
            let action_grad = input_grad.slice(s![i * n..(i + 1) * n, s_dim..s_dim + a_dim]);
            let mut grad = vec![0.0; policy.params.len()];
            batch::backward(&policy.arch, &policy.params, tape, action_grad, Some(&mut grad))?;
            grad.iter_mut().for_each(|g| *g = -*g);
            opts[i].step(&mut policy.params, &grad)?;
        }
        after_step(policies);
    }
    Ok(())
}
