use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};

use super::{similarity, Batch, ReplayBuffer, Td3Config};
use crate::nn::{batch, mlp_init_with, widen_inputs, zero_input_columns, AdamState, MlpArch, ParamVector};
use crate::{Error, Result, Rng};

/// A network and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub arch: MlpArch,
    pub params: ParamVector,
}

impl Net {
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        batch::forward(&self.arch, &self.params, x)
    }

    fn blend_from(&mut self, main: &Net, tau: f64) {
        for (t, &m) in self.params.iter_mut().zip(main.params.iter()) {
            *t = tau * m + (1.0 - tau) * *t;
        }
    }
}

/// Actor, twin critics, their target copies and optimizer states.
///
/// With `descriptor_dim > 0` every network also receives a descriptor,
/// appended after its regular inputs.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub actor: Net,
    pub critics: [Net; 2],
    pub actor_target: Net,
    pub critic_targets: [Net; 2],
    actor_opt: AdamState,
    critic_opts: [AdamState; 2],
    state_dim: usize,
    action_dim: usize,
    descriptor_dim: usize,
    action_bound: f64,
    actor_descriptor_frozen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainStats {
    pub critic_updates: usize,
    pub actor_updates: usize,
    /// Mean over all updates and both critics.
    pub mean_critic_loss: f64,
}

impl ActorCritic {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        descriptor_dim: usize,
        action_bound: f64,
        actor_hidden: &[usize],
        critic_hidden: &[usize],
        cfg: &Td3Config,
        rng: &mut Rng,
    ) -> Result<Self> {
        let actor_arch =
            MlpArch::policy(state_dim + descriptor_dim, actor_hidden, action_dim, action_bound)?;
        let critic_arch = MlpArch::critic(state_dim + action_dim + descriptor_dim, critic_hidden)?;
        let actor = Net {
            params: mlp_init_with(&actor_arch, rng),
            arch: actor_arch,
        };
        let critics = [(); 2].map(|_| Net {
            params: mlp_init_with(&critic_arch, rng),
            arch: critic_arch.clone(),
        });
        Ok(Self::assemble(actor, critics, state_dim, action_dim, descriptor_dim, action_bound, cfg))
    }

    pub(super) fn assemble(
        actor: Net,
        critics: [Net; 2],
        state_dim: usize,
        action_dim: usize,
        descriptor_dim: usize,
        action_bound: f64,
        cfg: &Td3Config,
    ) -> Self {
        Self {
            actor_opt: AdamState::new(actor.params.len(), cfg.actor_lr),
            critic_opts: [
                AdamState::new(critics[0].params.len(), cfg.critic_lr),
                AdamState::new(critics[1].params.len(), cfg.critic_lr),
            ],
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            state_dim,
            action_dim,
            descriptor_dim,
            action_bound,
            actor_descriptor_frozen: false,
        }
    }

    /// A conditioned copy of a standard trainer whose networks ignore the
    /// descriptor entirely (zero-weight descriptor columns). Optimizer
    /// states start fresh.
    pub fn conditioned_from(standard: &ActorCritic, descriptor_dim: usize, cfg: &Td3Config) -> Result<Self> {
        if standard.is_conditioned() {
            return Err(Error::InvalidConfig("trainer is already descriptor-conditioned".into()));
        }
        let widen = |net: &Net| {
            let (arch, params) = widen_inputs(&net.arch, &net.params, descriptor_dim);
            Net { arch, params }
        };
        let mut out = Self::assemble(
            widen(&standard.actor),
            [widen(&standard.critics[0]), widen(&standard.critics[1])],
            standard.state_dim,
            standard.action_dim,
            descriptor_dim,
            standard.action_bound,
            cfg,
        );
        out.actor_target = widen(&standard.actor_target);
        out.critic_targets = [widen(&standard.critic_targets[0]), widen(&standard.critic_targets[1])];
        Ok(out)
    }

    pub fn is_conditioned(&self) -> bool {
        self.descriptor_dim > 0
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn descriptor_dim(&self) -> usize {
        self.descriptor_dim
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    pub fn actor_descriptor_frozen(&self) -> bool {
        self.actor_descriptor_frozen
    }

    /// Makes the actor blind to its descriptor input: the descriptor
    /// weights are zeroed now and kept at zero by every later update.
    pub fn freeze_actor_descriptor(&mut self) -> Result<()> {
        if !self.is_conditioned() {
            return Err(Error::NotConditioned("freezing the actor descriptor input"));
        }
        let cols = self.state_dim..self.state_dim + self.descriptor_dim;
        zero_input_columns(&self.actor.arch, &mut self.actor.params, cols.clone());
        zero_input_columns(&self.actor_target.arch, &mut self.actor_target.params, cols);
        self.actor_descriptor_frozen = true;
        Ok(())
    }

    /// Actor input rows: `state` or `state ⊕ descriptor`.
    pub fn actor_input(&self, states: ArrayView2<'_, f64>, descriptors: ArrayView2<'_, f64>) -> Array2<f64> {
        if self.is_conditioned() {
            concatenate(Axis(1), &[states, descriptors]).expect("matching rows")
        } else {
            states.to_owned()
        }
    }

    /// Critic input rows: `state ⊕ action` or `state ⊕ action ⊕ descriptor`.
    pub fn critic_input(
        &self,
        states: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
        descriptors: ArrayView2<'_, f64>,
    ) -> Array2<f64> {
        if self.is_conditioned() {
            concatenate(Axis(1), &[states, actions, descriptors]).expect("matching rows")
        } else {
            concatenate(Axis(1), &[states, actions]).expect("matching rows")
        }
    }

    /// First critic's value for each row.
    pub fn q1(
        &self,
        states: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
        descriptors: ArrayView2<'_, f64>,
    ) -> Result<Array1<f64>> {
        let x = self.critic_input(states, actions, descriptors);
        Ok(self.critics[0].forward(x.view())?.column(0).to_owned())
    }

    pub fn act(&self, states: ArrayView2<'_, f64>, descriptors: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.actor.forward(self.actor_input(states, descriptors).view())
    }
}

/// Regression targets for both critics, with clipped smoothing noise on the
/// target actor's next action. Conditioned trainers scale each reward by
/// the similarity of its observed and target descriptors and condition all
/// target networks on the target descriptor.
pub fn critic_target(batch: &Batch, ac: &ActorCritic, cfg: &Td3Config, rng: &mut Rng) -> Result<Array1<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let n = batch.len();
    let bound = ac.action_bound;
    let sigma = cfg.smoothing_noise_sigma * bound;
    let clip = cfg.smoothing_noise_clip * bound;
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("smoothing noise: {e}")))?;

    let actor_in = ac.actor_input(batch.next_states.view(), batch.targets.view());
    let mut next_actions = ac.actor_target.forward(actor_in.view())?;
    for a in next_actions.iter_mut() {
        let eps = normal.sample(rng).clamp(-clip, clip);
        *a = (*a + eps).clamp(-bound, bound);
    }
    let critic_in = ac.critic_input(batch.next_states.view(), next_actions.view(), batch.targets.view());
    let q1 = ac.critic_targets[0].forward(critic_in.view())?;
    let q2 = ac.critic_targets[1].forward(critic_in.view())?;

    let mut y = Array1::zeros(n);
    for i in 0..n {
        let scale = if ac.is_conditioned() {
            similarity(
                batch.observed.row(i).as_slice().expect("contiguous"),
                batch.targets.row(i).as_slice().expect("contiguous"),
                cfg.lengthscale,
            )
        } else {
            1.0
        };
        let bootstrap = q1[[i, 0]].min(q2[[i, 0]]);
        y[i] = scale * batch.rewards[i] + cfg.gamma * (1.0 - batch.dones[i]) * bootstrap;
    }
    Ok(y)
}

/// One Adam step on the mean-squared error of each critic. Returns the
/// losses measured before the step.
pub fn critic_update(ac: &mut ActorCritic, batch: &Batch, targets: &Array1<f64>) -> Result<[f64; 2]> {
    if targets.len() != batch.len() {
        return Err(Error::dims("critic targets", batch.len(), targets.len()));
    }
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let n = batch.len() as f64;
    let x = ac.critic_input(batch.states.view(), batch.actions.view(), batch.targets.view());
    let mut losses = [0.0; 2];
    for (k, loss) in losses.iter_mut().enumerate() {
        let critic = &mut ac.critics[k];
        let (q, tape) = batch::forward_tape(&critic.arch, &critic.params, x.view())?;
        let mut out_grad = Array2::zeros(q.raw_dim());
        let mut sq = 0.0;
        for i in 0..batch.len() {
            let err = q[[i, 0]] - targets[i];
            sq += err * err;
            out_grad[[i, 0]] = 2.0 * err / n;
        }
        *loss = sq / n;
        let mut grad = vec![0.0; critic.params.len()];
        batch::backward(&critic.arch, &critic.params, &tape, out_grad.view(), Some(&mut grad))?;
        ac.critic_opts[k].step(&mut critic.params, &grad)?;
    }
    Ok(losses)
}

/// Gradient of the batch-mean first-critic value with respect to the
/// parameters of `policy`, whose actions are fed to the critic together with
/// `states` (and `descriptors` for a conditioned critic).
pub(crate) fn dpg_gradient(
    ac: &ActorCritic,
    policy: &Net,
    policy_input: ArrayView2<'_, f64>,
    states: ArrayView2<'_, f64>,
    descriptors: ArrayView2<'_, f64>,
) -> Result<(Vec<f64>, f64)> {
    let n = states.nrows() as f64;
    let (actions, policy_tape) = batch::forward_tape(&policy.arch, &policy.params, policy_input)?;
    let critic = &ac.critics[0];
    let x = ac.critic_input(states, actions.view(), descriptors);
    let (q, critic_tape) = batch::forward_tape(&critic.arch, &critic.params, x.view())?;
    let mean_q = q.sum() / n;
    let dq = Array2::from_elem(q.raw_dim(), 1.0 / n);
    let input_grad = batch::backward(&critic.arch, &critic.params, &critic_tape, dq.view(), None)?;
    let action_grad = input_grad.slice(s![.., ac.state_dim..ac.state_dim + ac.action_dim]);
    let mut grad = vec![0.0; policy.params.len()];
    batch::backward(&policy.arch, &policy.params, &policy_tape, action_grad, Some(&mut grad))?;
    Ok((grad, mean_q))
}

/// Gradient of the batch-mean first-critic value `Q(s, π(s|d′)|d′)` with
/// respect to the actor parameters, and that mean.
pub fn actor_dpg_gradient(ac: &ActorCritic, batch: &Batch) -> Result<(Vec<f64>, f64)> {
    let input = ac.actor_input(batch.states.view(), batch.targets.view());
    dpg_gradient(ac, &ac.actor, input.view(), batch.states.view(), batch.targets.view())
}

/// One deterministic-policy-gradient ascent step on the actor. Returns the
/// batch-mean first-critic value before the step.
pub fn actor_dpg_update(ac: &mut ActorCritic, batch: &Batch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let (mut grad, mean_q) = actor_dpg_gradient(ac, batch)?;
    for g in grad.iter_mut() {
        *g = -*g;
    }
    if ac.actor_descriptor_frozen {
        let cols = ac.state_dim..ac.state_dim + ac.descriptor_dim;
        zero_input_columns(&ac.actor.arch, &mut grad, cols);
    }
    ac.actor_opt.step(&mut ac.actor.params, &grad)?;
    Ok(mean_q)
}

/// `target ← τ·main + (1−τ)·target` for the actor and both critics.
pub fn soft_update(ac: &mut ActorCritic, tau: f64) {
    ac.actor_target.blend_from(&ac.actor, tau);
    for k in 0..2 {
        ac.critic_targets[k].blend_from(&ac.critics[k], tau);
    }
}

/// `cfg.training_steps` iterations of critic regression, with an actor step
/// and target update on every `cfg.actor_delay`-th iteration.
pub fn train_actor_critic(
    ac: &mut ActorCritic,
    buffer: &ReplayBuffer,
    cfg: &Td3Config,
    rng: &mut Rng,
) -> Result<TrainStats> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    if buffer.descriptor_dim() != ac.descriptor_dim && ac.is_conditioned() {
        return Err(Error::dims("buffer descriptor", ac.descriptor_dim, buffer.descriptor_dim()));
    }
    let mut stats = TrainStats::default();
    let mut loss_sum = 0.0;
    for t in 1..=cfg.training_steps {
        let batch = buffer.sample_batch(cfg.batch_size, rng)?;
        let y = critic_target(&batch, ac, cfg, rng)?;
        let [l1, l2] = critic_update(ac, &batch, &y)?;
        loss_sum += 0.5 * (l1 + l2);
        stats.critic_updates += 1;
        if t % cfg.actor_delay == 0 {
            actor_dpg_update(ac, &batch)?;
            soft_update(ac, cfg.tau);
            stats.actor_updates += 1;
        }
    }
    if stats.critic_updates > 0 {
        stats.mean_critic_loss = loss_sum / stats.critic_updates as f64;
    }
    Ok(stats)
}
