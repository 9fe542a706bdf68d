use std::collections::VecDeque;

use ndarray::{arr1, arr2, Array1, Array2};
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

use super::actor_critic::dpg_gradient;
use super::*;
use crate::nn::{mlp_forward, MlpArch, ParamVector};
use crate::rng_from_seed;

fn transition(k: usize) -> Transition {
    let x = k as f64;
    Transition {
        state: vec![x, x + 0.5],
        action: vec![-x],
        reward: x * 0.1,
        next_state: vec![x + 1.0, x + 1.5],
        done: k % 7 == 0,
        observed_descriptor: vec![0.1, 0.2],
        target_descriptor: vec![0.3, (k % 10) as f64 / 10.0],
    }
}

fn batch_of(ts: &[Transition]) -> Batch {
    let rows = |f: &dyn Fn(&Transition) -> Vec<f64>| {
        let cols = f(&ts[0]).len();
        let flat: Vec<f64> = ts.iter().flat_map(f).collect();
        Array2::from_shape_vec((ts.len(), cols), flat).unwrap()
    };
    Batch {
        states: rows(&|t| t.state.clone()),
        actions: rows(&|t| t.action.clone()),
        rewards: ts.iter().map(|t| t.reward).collect(),
        next_states: rows(&|t| t.next_state.clone()),
        dones: ts.iter().map(|t| f64::from(u8::from(t.done))).collect(),
        observed: rows(&|t| t.observed_descriptor.clone()),
        targets: rows(&|t| t.target_descriptor.clone()),
    }
}

fn small_trainer(descriptor_dim: usize, seed: u64) -> ActorCritic {
    let cfg = Td3Config::default();
    ActorCritic::new(3, 2, descriptor_dim, 1.0, &[8, 8], &[8, 8], &cfg, &mut rng_from_seed(seed)).unwrap()
}

fn random_batch(n: usize, descriptor_dim: usize, rng: &mut crate::Rng) -> Batch {
    let ts: Vec<Transition> = (0..n)
        .map(|_| Transition {
            state: (0..3).map(|_| rng.random::<f64>()).collect(),
            action: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
            reward: rng.random_range(0.0..1.5),
            next_state: (0..3).map(|_| rng.random::<f64>()).collect(),
            done: false,
            observed_descriptor: (0..descriptor_dim).map(|_| rng.random::<f64>()).collect(),
            target_descriptor: (0..descriptor_dim).map(|_| rng.random::<f64>()).collect(),
        })
        .collect();
    batch_of(&ts)
}

// similarity

#[test]
fn similarity_closed_forms() {
    assert_eq!(similarity(&[0.3, 0.4], &[0.3, 0.4], 0.1), 1.0);
    let l = 0.25;
    assert!((similarity(&[0.0, 0.0], &[0.6 * l, 0.8 * l], l) - (-1.0f64).exp()).abs() < 1e-15);
    let s = similarity(&[0.5, 0.5], &[0.516, 0.5], 0.008);
    assert!((s - 0.1353353).abs() < 1e-7, "{s}");
}

proptest! {
    #[test]
    fn similarity_bounded_and_decreasing(
        d in prop::collection::vec(0.0f64..1.0, 2),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
        r1 in 0.0f64..0.05, r2 in 0.0f64..0.05,
        l in 0.005f64..0.5,
    ) {
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3 && (r1 - r2).abs() > 1e-9);
        let at = |r: f64| -> Vec<f64> { d.iter().zip(&dir).map(|(x, u)| x + r * u / norm).collect() };
        let (s1, s2) = (similarity(&d, &at(r1), l), similarity(&d, &at(r2), l));
        prop_assert!(s1 > 0.0 && s1 <= 1.0);
        prop_assert!(s2 > 0.0 && s2 <= 1.0);
        if r1 < r2 { prop_assert!(s1 > s2) } else { prop_assert!(s2 > s1) }
    }
}

// replay buffer

#[test]
fn fifo_eviction_keeps_latest() {
    let mut b = ReplayBuffer::new(3, 2, 1, 2);
    let ts: Vec<Transition> = (0..5).map(transition).collect();
    b.insert(&ts).unwrap();
    assert_eq!(b.len(), 3);
    assert_eq!(b.iter().collect::<Vec<_>>(), ts[2..].to_vec());
    b.insert(&[]).unwrap();
    assert_eq!(b.iter().collect::<Vec<_>>(), ts[2..].to_vec());
}

#[test]
fn buffer_matches_reference_ring() {
    let mut rng = rng_from_seed(3);
    let mut b = ReplayBuffer::new(37, 2, 1, 2);
    let mut model: VecDeque<Transition> = VecDeque::new();
    let mut next = 0;
    for _ in 0..10_000 {
        if rng.random_bool(0.6) {
            let k = rng.random_range(0..4);
            let ts: Vec<Transition> = (next..next + k).map(transition).collect();
            next += k;
            b.insert(&ts).unwrap();
            for t in ts {
                if model.len() == 37 {
                    model.pop_front();
                }
                model.push_back(t);
            }
        } else if !model.is_empty() {
            let drawn = b.sample(3, &mut rng).unwrap();
            assert!(drawn.iter().all(|t| model.contains(t)));
        }
        assert!(b.len() <= b.capacity());
        assert_eq!(b.len(), model.len());
    }
    assert_eq!(b.iter().collect::<Vec<_>>(), model.into_iter().collect::<Vec<_>>());
}

#[test]
fn sampling_rules() {
    let mut b = ReplayBuffer::new(10, 2, 1, 2);
    assert!(matches!(b.sample(1, &mut rng_from_seed(0)), Err(crate::Error::EmptyBuffer)));
    b.insert(&[transition(4)]).unwrap();
    assert_eq!(b.sample(5, &mut rng_from_seed(0)).unwrap(), vec![transition(4); 5]);

    b.insert(&(0..3).map(transition).collect::<Vec<_>>()).unwrap();
    let a = b.sample(20, &mut rng_from_seed(9)).unwrap();
    assert_eq!(a, b.sample(20, &mut rng_from_seed(9)).unwrap());
    let m = b.sample_batch(20, &mut rng_from_seed(9)).unwrap();
    assert_eq!(m, batch_of(&a));
}

#[test]
fn sampling_is_uniform() {
    let mut b = ReplayBuffer::new(4, 2, 1, 2);
    b.insert(&(0..4).map(transition).collect::<Vec<_>>()).unwrap();
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for t in b.sample(draws, &mut rng_from_seed(11)).unwrap() {
        counts[t.state[0] as usize] += 1;
    }
    let mean = draws as f64 / 4.0;
    let sd = (draws as f64 * 0.25 * 0.75).sqrt();
    for c in counts {
        assert!((c as f64 - mean).abs() < 3.0 * sd, "{counts:?}");
    }
}

#[test]
fn episode_insert_tags_descriptors() {
    let mut b = ReplayBuffer::new(10, 1, 1, 2);
    let steps = vec![
        crate::envs::Step { state: vec![0.0], action: vec![1.0], reward: 1.0, next_state: vec![1.0], done: false },
        crate::envs::Step { state: vec![1.0], action: vec![1.0], reward: 2.0, next_state: vec![2.0], done: false },
    ];
    b.insert_episode(&steps, &[0.2, 0.3], &[0.4, 0.5]).unwrap();
    let all: Vec<_> = b.iter().collect();
    assert_eq!(all.len(), 2);
    assert!(all.iter().all(|t| t.observed_descriptor == [0.2, 0.3] && t.target_descriptor == [0.4, 0.5]));
    assert!(b.insert_episode(&steps, &[0.2], &[0.4, 0.5]).is_err());
    assert_eq!(b.len(), 2);
}

// critic targets

/// One-layer nets with hand-set parameters: `state_dim = action_dim =
/// descriptor_dim = 1`.
fn linear_trainer() -> ActorCritic {
    let cfg = Td3Config::default();
    let mut ac = ActorCritic::new(1, 1, 1, 1.0, &[], &[], &cfg, &mut rng_from_seed(0)).unwrap();
    // actor: a = tanh(0.5 s' − 0.3 d′ + 0.1)
    ac.actor_target.params = ParamVector::new(vec![0.5, -0.3, 0.1]);
    // critics: q = u·(s', a, d′) + c
    ac.critic_targets[0].params = ParamVector::new(vec![1.0, 2.0, -1.0, 0.2]);
    ac.critic_targets[1].params = ParamVector::new(vec![0.5, 3.0, 0.5, -0.1]);
    ac
}

fn one_transition(d: f64, d_target: f64, done: bool) -> Batch {
    batch_of(&[Transition {
        state: vec![0.2],
        action: vec![0.1],
        reward: 1.3,
        next_state: vec![0.7],
        done,
        observed_descriptor: vec![d],
        target_descriptor: vec![d_target],
    }])
}

#[test]
fn target_matches_hand_computation() {
    let ac = linear_trainer();
    let cfg = Td3Config { lengthscale: 0.1, ..Td3Config::default() };
    let batch = one_transition(0.4, 0.45, false);

    let mut rng = rng_from_seed(21);
    let eps: f64 = Normal::new(0.0, 0.2).unwrap().sample(&mut rng.clone());
    let eps = eps.clamp(-0.5, 0.5);
    let a = ((0.5f64 * 0.7 - 0.3 * 0.45 + 0.1).tanh() + eps).clamp(-1.0, 1.0);
    let q1 = 0.7 + 2.0 * a - 0.45 + 0.2;
    let q2 = 0.35 + 3.0 * a + 0.225 - 0.1;
    let s = (-0.05f64 / 0.1).exp();
    let expected = s * 1.3 + 0.99 * q1.min(q2);

    let y = critic_target(&batch, &ac, &cfg, &mut rng).unwrap();
    assert!((y[0] - expected).abs() < 1e-12, "{} vs {expected}", y[0]);

    let terminal = one_transition(0.4, 0.45, true);
    let y = critic_target(&terminal, &ac, &cfg, &mut rng_from_seed(21)).unwrap();
    assert!((y[0] - s * 1.3).abs() < 1e-12);
}

#[test]
fn zero_discount_gives_scaled_reward() {
    let ac = linear_trainer();
    let l = 0.008;
    let cfg = Td3Config { gamma: 0.0, lengthscale: l, ..Td3Config::default() };
    let mut batch = one_transition(0.3, 0.3 + l * 2f64.ln(), false);
    batch.rewards[0] = 1.0;
    let y = critic_target(&batch, &ac, &cfg, &mut rng_from_seed(1)).unwrap();
    assert!((y[0] - 0.5).abs() < 1e-12, "{}", y[0]);
}

#[test]
fn matching_descriptors_reduce_to_standard_target() {
    let cfg = Td3Config::default();
    let standard = small_trainer(0, 5);
    let conditioned = ActorCritic::conditioned_from(&standard, 2, &cfg).unwrap();
    let mut batch = random_batch(64, 2, &mut rng_from_seed(6));
    batch.observed = batch.targets.clone();
    let a = critic_target(&batch, &standard, &cfg, &mut rng_from_seed(7)).unwrap();
    let b = critic_target(&batch, &conditioned, &cfg, &mut rng_from_seed(7)).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn target_bounds(seed in 0u64..1000) {
        let cfg = Td3Config { lengthscale: 0.05, ..Td3Config::default() };
        let ac = small_trainer(2, seed);
        let batch = random_batch(32, 2, &mut rng_from_seed(seed + 1));
        let mut rng = rng_from_seed(seed + 2);
        let y = critic_target(&batch, &ac, &cfg, &mut rng.clone()).unwrap();

        // replay the noise to recover the bootstrap values
        let normal: Normal<f64> = Normal::new(0.0, 0.2).unwrap();
        let mut next = ac.actor_target.forward(ac.actor_input(batch.next_states.view(), batch.targets.view()).view()).unwrap();
        next.mapv_inplace(|a| (a + normal.sample(&mut rng).clamp(-0.5, 0.5)).clamp(-1.0, 1.0));
        let x = ac.critic_input(batch.next_states.view(), next.view(), batch.targets.view());
        let q1 = ac.critic_targets[0].forward(x.view()).unwrap();
        let q2 = ac.critic_targets[1].forward(x.view()).unwrap();
        let r_max = batch.rewards.fold(0.0f64, |m, &r| m.max(r));
        let q_max = q1.iter().chain(q2.iter()).fold(f64::MIN, |m, &q| m.max(q));
        for i in 0..batch.len() {
            let s = similarity(
                batch.observed.row(i).as_slice().unwrap(),
                batch.targets.row(i).as_slice().unwrap(),
                cfg.lengthscale,
            );
            let sr = s * batch.rewards[i];
            prop_assert!(y[i] <= sr + cfg.gamma * q1[[i, 0]] + 1e-12);
            prop_assert!(y[i] <= sr + cfg.gamma * q2[[i, 0]] + 1e-12);
            prop_assert!(y[i] <= r_max + cfg.gamma * q_max.max(0.0) + 1e-12);
        }
    }
}

// critic regression

#[test]
fn exact_targets_leave_critics_unchanged() {
    let mut ac = small_trainer(2, 1);
    ac.critics[1] = ac.critics[0].clone();
    let batch = random_batch(16, 2, &mut rng_from_seed(2));
    let before = ac.critics[0].clone();
    let y = ac.q1(batch.states.view(), batch.actions.view(), batch.targets.view()).unwrap();
    let losses = critic_update(&mut ac, &batch, &y).unwrap();
    assert_eq!(losses, [0.0, 0.0]);
    assert_eq!(ac.critics[0], before);
    assert_eq!(ac.critics[1], before);
}

#[test]
fn critic_regression_converges_on_fixed_transition() {
    let cfg = Td3Config { critic_lr: 1e-3, ..Td3Config::default() };
    let mut ac = ActorCritic::new(3, 2, 2, 1.0, &[8, 8], &[8, 8], &cfg, &mut rng_from_seed(4)).unwrap();
    let batch = random_batch(1, 2, &mut rng_from_seed(5));
    let y = arr1(&[0.75]);
    let mut converged = None;
    for step in 0..5000 {
        critic_update(&mut ac, &batch, &y).unwrap();
        let q = ac.q1(batch.states.view(), batch.actions.view(), batch.targets.view()).unwrap();
        if (q[0] - 0.75).abs() < 1e-3 {
            converged = Some(step);
            break;
        }
    }
    assert!(converged.is_some());
}

#[test]
fn critic_first_step_descends() {
    let cfg = Td3Config { critic_lr: 1e-5, ..Td3Config::default() };
    let mut ac = ActorCritic::new(3, 2, 2, 1.0, &[8, 8], &[8, 8], &cfg, &mut rng_from_seed(8)).unwrap();
    let batch = random_batch(50, 2, &mut rng_from_seed(9));
    let y: Array1<f64> = batch.rewards.clone();
    let before = critic_update(&mut ac, &batch, &y).unwrap();
    let after = critic_update(&mut ac, &batch, &y).unwrap();
    assert!(after[0] < before[0] && after[1] < before[1]);
}

// actor updates

fn mean_q(ac: &ActorCritic, actor: &[f64], batch: &Batch) -> f64 {
    let x = ac.actor_input(batch.states.view(), batch.targets.view());
    let a = crate::nn::batch::forward(&ac.actor.arch, actor, x.view()).unwrap();
    ac.q1(batch.states.view(), a.view(), batch.targets.view()).unwrap().mean().unwrap()
}

#[test]
fn dpg_gradient_matches_finite_differences() {
    for conditioned in [0, 2] {
        let ac = small_trainer(conditioned, 12);
        let batch = random_batch(20, 2, &mut rng_from_seed(13));
        let input = ac.actor_input(batch.states.view(), batch.targets.view());
        let (g, _) = dpg_gradient(&ac, &ac.actor, input.view(), batch.states.view(), batch.targets.view()).unwrap();
        let h = 1e-6;
        let mut p = ac.actor.params.to_vec();
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..p.len() {
            let orig = p[i];
            p[i] = orig + h;
            let up = mean_q(&ac, &p, &batch);
            p[i] = orig - h;
            let down = mean_q(&ac, &p, &batch);
            p[i] = orig;
            let fd = (up - down) / (2.0 * h);
            err += (fd - g[i]).powi(2);
            norm += fd * fd;
        }
        let rel = (err / norm).sqrt();
        assert!(rel < 1e-4, "relative error {rel}");
    }
}

#[test]
fn actor_step_is_adam_ascent() {
    let mut ac = small_trainer(2, 14);
    let batch = random_batch(20, 2, &mut rng_from_seed(15));
    let input = ac.actor_input(batch.states.view(), batch.targets.view());
    let (g, _) = dpg_gradient(&ac, &ac.actor, input.view(), batch.states.view(), batch.targets.view()).unwrap();
    let before = ac.actor.params.clone();
    actor_dpg_update(&mut ac, &batch).unwrap();
    for ((new, old), gi) in ac.actor.params.iter().zip(before.iter()).zip(&g) {
        let expected = old + 3e-4 * gi / (gi.abs() + 1e-8);
        assert!((new - expected).abs() < 1e-12);
    }
}

#[test]
fn action_blind_critic_gives_zero_actor_gradient() {
    let mut ac = small_trainer(2, 16);
    let first = ac.critics[0].arch.layers().next().unwrap();
    for o in 0..first.n_out {
        for c in 3..5 {
            ac.critics[0].params[first.offset + o * first.n_in + c] = 0.0;
        }
    }
    let batch = random_batch(20, 2, &mut rng_from_seed(17));
    let before = ac.actor.params.clone();
    actor_dpg_update(&mut ac, &batch).unwrap();
    assert_eq!(ac.actor.params, before);
}

/// ReLU critic equal to the piecewise-linear interpolant of `−(a − 2)²` on
/// knots `−1, −0.75, …, 5`, independent of the state.
fn quadratic_critic(ac: &mut ActorCritic, knots: &[f64]) {
    let f = |a: f64| -(a - 2.0) * (a - 2.0);
    let slopes: Vec<f64> = knots.windows(2).map(|w| (f(w[1]) - f(w[0])) / (w[1] - w[0])).collect();
    let k = knots.len();
    // hidden units: relu(a), relu(−a), relu(a − k_j) for interior knots
    let hidden = k;
    let mut w1 = vec![0.0; hidden * 2];
    let mut b1 = vec![0.0; hidden];
    let mut w2 = vec![0.0; hidden];
    w1[1] = 1.0;
    w1[3] = -1.0;
    w2[0] = slopes[0];
    w2[1] = -slopes[0];
    for j in 1..k - 1 {
        w1[(j + 1) * 2 + 1] = 1.0;
        b1[j + 1] = -knots[j];
        w2[j + 1] = slopes[j] - slopes[j - 1];
    }
    let c = f(knots[0]) - slopes[0] * knots[0];
    let params: Vec<f64> = w1.into_iter().chain(b1).chain(w2).chain([c]).collect();
    ac.critics[0].params = ParamVector::new(params);
}

#[test]
fn scalar_dpg_drives_action_to_critic_peak() {
    let knots: Vec<f64> = (0..25).map(|i| -1.0 + 0.25 * i as f64).collect();
    let cfg = Td3Config { actor_lr: 1e-3, ..Td3Config::default() };
    let mut ac = ActorCritic::new(1, 1, 0, 5.0, &[], &[knots.len()], &cfg, &mut rng_from_seed(0)).unwrap();
    quadratic_critic(&mut ac, &knots);
    let check = crate::nn::mlp_forward(&ac.critics[0].arch, &ac.critics[0].params, &[0.3, 1.0]).unwrap()[0];
    assert!((check + 1.0).abs() < 1e-12, "{check}");
    ac.actor.params = ParamVector::new(vec![0.0, 0.0]);
    let batch = batch_of(&[Transition {
        state: vec![1.0],
        action: vec![0.0],
        reward: 0.0,
        next_state: vec![1.0],
        done: false,
        observed_descriptor: vec![],
        target_descriptor: vec![],
    }]);
    for _ in 0..3000 {
        actor_dpg_update(&mut ac, &batch).unwrap();
    }
    let a = ac.act(batch.states.view(), batch.targets.view()).unwrap()[[0, 0]];
    assert!((a - 2.0).abs() < 0.05, "{a}");
}

// targets and training loop

#[test]
fn soft_update_closed_forms() {
    let mut ac = small_trainer(0, 18);
    let ones = |net: &mut Net| net.params.iter_mut().for_each(|p| *p = 1.0);
    let zeros = |net: &mut Net| net.params.iter_mut().for_each(|p| *p = 0.0);
    ones(&mut ac.actor);
    ac.critics.iter_mut().for_each(ones);
    zeros(&mut ac.actor_target);
    ac.critic_targets.iter_mut().for_each(zeros);
    soft_update(&mut ac, 0.005);
    for net in std::iter::once(&ac.actor_target).chain(&ac.critic_targets) {
        assert!(net.params.iter().all(|&p| (p - 0.005).abs() < 1e-15));
    }
    for _ in 1..100 {
        soft_update(&mut ac, 0.005);
    }
    let expected = 1.0 - 0.995f64.powi(100);
    assert!(ac.actor_target.params.iter().all(|&p| (p - expected).abs() < 1e-12));
    soft_update(&mut ac, 1.0);
    assert_eq!(ac.actor_target.params, ac.actor.params);
    assert_eq!(ac.critic_targets, ac.critics);
}

fn filled_buffer(descriptor_dim: usize, n: usize, seed: u64) -> ReplayBuffer {
    let mut b = ReplayBuffer::new(1000, 3, 2, descriptor_dim);
    let batch = random_batch(n, descriptor_dim, &mut rng_from_seed(seed));
    let ts: Vec<Transition> = (0..n)
        .map(|i| Transition {
            state: batch.states.row(i).to_vec(),
            action: batch.actions.row(i).to_vec(),
            reward: batch.rewards[i],
            next_state: batch.next_states.row(i).to_vec(),
            done: false,
            observed_descriptor: batch.observed.row(i).to_vec(),
            target_descriptor: batch.targets.row(i).to_vec(),
        })
        .collect();
    b.insert(&ts).unwrap();
    b
}

#[test]
fn training_step_counts() {
    let buffer = filled_buffer(2, 50, 19);
    let mut ac = small_trainer(2, 20);
    let before = ac.clone();
    let cfg = Td3Config { training_steps: 0, ..Td3Config::default() };
    let stats = train_actor_critic(&mut ac, &buffer, &cfg, &mut rng_from_seed(0)).unwrap();
    assert_eq!(stats.critic_updates, 0);
    assert_eq!(ac.actor, before.actor);
    assert_eq!(ac.critics, before.critics);

    let cfg = Td3Config { training_steps: 3, actor_delay: 2, ..Td3Config::default() };
    let stats = train_actor_critic(&mut ac, &buffer, &cfg, &mut rng_from_seed(0)).unwrap();
    assert_eq!((stats.critic_updates, stats.actor_updates), (3, 1));

    let empty = ReplayBuffer::new(10, 3, 2, 2);
    assert!(matches!(
        train_actor_critic(&mut ac, &empty, &cfg, &mut rng_from_seed(0)),
        Err(crate::Error::EmptyBuffer)
    ));
}

#[test]
fn bandit_training_finds_optimal_action() {
    let mut rng = rng_from_seed(22);
    let mut buffer = ReplayBuffer::new(10_000, 1, 1, 0);
    let ts: Vec<Transition> = (0..2000)
        .map(|_| {
            let a: f64 = rng.random_range(-1.0..1.0);
            Transition {
                state: vec![0.5],
                action: vec![a],
                reward: 1.0 - a * a,
                next_state: vec![0.5],
                done: true,
                observed_descriptor: vec![],
                target_descriptor: vec![],
            }
        })
        .collect();
    buffer.insert(&ts).unwrap();
    let cfg = Td3Config { training_steps: 3000, actor_lr: 1e-3, critic_lr: 1e-3, ..Td3Config::default() };
    let mut ac = ActorCritic::new(1, 1, 0, 1.0, &[32, 32], &[32, 32], &cfg, &mut rng).unwrap();
    train_actor_critic(&mut ac, &buffer, &cfg, &mut rng).unwrap();

    let action = mlp_forward(&ac.actor.arch, &ac.actor.params, &[0.5]).unwrap()[0];
    let grid: Vec<f64> = (0..=200).map(|i| -1.0 + 0.01 * i as f64).collect();
    let q: Vec<f64> = grid
        .iter()
        .map(|&a| mlp_forward(&ac.critics[0].arch, &ac.critics[0].params, &[0.5, a]).unwrap()[0])
        .collect();
    let best = grid[q.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0];
    assert!(best.abs() < 0.1, "critic argmax {best}");
    assert!(action.abs() < 0.1, "actor output {action}");
}

/// Drops the trailing `extra` first-layer input columns.
fn narrow(arch: &MlpArch, params: &[f64], extra: usize) -> (Vec<f64>, bool) {
    let mut out = Vec::new();
    let mut zero = true;
    for (l, layer) in arch.layers().enumerate() {
        if l == 0 {
            for row in params[layer.weights()].chunks_exact(layer.n_in) {
                out.extend_from_slice(&row[..layer.n_in - extra]);
                zero &= row[layer.n_in - extra..].iter().all(|&w| w == 0.0);
            }
            out.extend_from_slice(&params[layer.bias()]);
        } else {
            out.extend_from_slice(&params[layer.offset..layer.offset + layer.param_count()]);
        }
    }
    (out, zero)
}

#[test]
fn conditioned_training_reduces_to_standard() {
    let cfg = Td3Config { training_steps: 100, batch_size: 32, ..Td3Config::default() };
    let mut buffer = filled_buffer(2, 200, 23);
    let collapsed: Vec<Transition> = buffer
        .iter()
        .map(|t| Transition { observed_descriptor: vec![0.0; 2], target_descriptor: vec![0.0; 2], ..t })
        .collect();
    buffer = ReplayBuffer::new(1000, 3, 2, 2);
    buffer.insert(&collapsed).unwrap();

    let mut standard = small_trainer(0, 24);
    let mut conditioned = ActorCritic::conditioned_from(&standard, 2, &cfg).unwrap();
    let s1 = train_actor_critic(&mut standard, &buffer, &cfg, &mut rng_from_seed(25)).unwrap();
    let s2 = train_actor_critic(&mut conditioned, &buffer, &cfg, &mut rng_from_seed(25)).unwrap();
    assert_eq!(s1, s2);

    let pairs = [
        (&standard.actor, &conditioned.actor),
        (&standard.actor_target, &conditioned.actor_target),
        (&standard.critics[0], &conditioned.critics[0]),
        (&standard.critics[1], &conditioned.critics[1]),
        (&standard.critic_targets[0], &conditioned.critic_targets[0]),
        (&standard.critic_targets[1], &conditioned.critic_targets[1]),
    ];
    for (std_net, cond_net) in pairs {
        let (params, untouched) = narrow(&cond_net.arch, &cond_net.params, 2);
        assert!(untouched);
        assert_eq!(params, std_net.params.to_vec());
    }
}

#[test]
fn frozen_actor_ignores_descriptor() {
    let cfg = Td3Config { training_steps: 50, batch_size: 16, ..Td3Config::default() };
    let buffer = filled_buffer(2, 100, 26);
    let mut ac = small_trainer(2, 27);
    assert!(small_trainer(0, 1).freeze_actor_descriptor().is_err());
    ac.freeze_actor_descriptor().unwrap();
    train_actor_critic(&mut ac, &buffer, &cfg, &mut rng_from_seed(28)).unwrap();
    let (_, untouched) = narrow(&ac.actor.arch, &ac.actor.params, 2);
    assert!(untouched);
    let s = arr2(&[[0.1, 0.2, 0.3], [0.1, 0.2, 0.3]]);
    let d = arr2(&[[0.0, 0.0], [0.9, 0.4]]);
    let a = ac.act(s.view(), d.view()).unwrap();
    assert_eq!(a.row(0), a.row(1));
}

#[test]
fn config_validation() {
    assert!(Td3Config::default().validate().is_ok());
    for bad in [
        Td3Config { gamma: 0.0, ..Td3Config::default() },
        Td3Config { gamma: 1.5, ..Td3Config::default() },
        Td3Config { tau: 0.0, ..Td3Config::default() },
        Td3Config { lengthscale: 0.0, ..Td3Config::default() },
        Td3Config { smoothing_noise_clip: -1.0, ..Td3Config::default() },
        Td3Config { actor_delay: 0, ..Td3Config::default() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn trainer_round_trips_through_disk() {
    let cfg = Td3Config::default();
    let mut ac = small_trainer(2, 30);
    ac.freeze_actor_descriptor().unwrap();
    let buffer = filled_buffer(2, 50, 31);
    train_actor_critic(&mut ac, &buffer, &Td3Config { training_steps: 4, ..cfg.clone() }, &mut rng_from_seed(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ac.save(dir.path()).unwrap();
    let back = ActorCritic::load(dir.path(), &cfg).unwrap();
    assert_eq!(back.actor, ac.actor);
    assert_eq!(back.actor_target, ac.actor_target);
    assert_eq!(back.critics, ac.critics);
    assert_eq!(back.critic_targets, ac.critic_targets);
    assert!(back.actor_descriptor_frozen());
    assert_eq!(back.descriptor_dim(), 2);

    std::fs::copy(dir.path().join("critic1.arch"), dir.path().join("actor.arch")).unwrap();
    assert!(ActorCritic::load(dir.path(), &cfg).is_err());
}
