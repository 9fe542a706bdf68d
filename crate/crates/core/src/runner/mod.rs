//! The optimization loop shared by MAP-Elites, PGA-MAP-Elites and
//! DCG-MAP-Elites.

mod config;

pub use config::{Ablation, Algorithm, NetworkConfig, RunConfig};

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::archive::{cvt_centroids, Archive, Centroids, Elite};
use crate::envs::{rollout_batch, EnvSpec, EvalResult};
use crate::nn::{mlp_forward, mlp_init_with, MlpArch, ParamVector};
use crate::rl::{train_actor_critic, ActorCritic, ReplayBuffer};
use crate::variation::{variation_ga, variation_pg};
use crate::{rng_from_seed, Error, Result, Rng};

/// Archive statistics after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    /// Offspring evaluations counted against the budget so far.
    pub evaluations: usize,
    /// Actor rollouts so far, whether or not they count against the budget.
    pub actor_evaluations: usize,
    pub qd_score: f64,
    pub coverage: f64,
    pub max_fitness: f64,
    pub wall_time: Duration,
}

/// What [`run_with`] hands its observer after every iteration.
pub struct Progress<'a> {
    pub log: &'a IterationLog,
    pub archive: &'a Archive,
    pub actor_critic: Option<&'a ActorCritic>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub archive: Archive,
    /// `None` for MAP-Elites.
    pub actor_critic: Option<ActorCritic>,
    pub buffer: Option<ReplayBuffer>,
    pub logs: Vec<IterationLog>,
    /// Gradient offspring dropped for non-finite parameters.
    pub discarded_offspring: usize,
}

/// CVT centroids, computed once per `(count, dim, seed)` per process.
pub fn shared_centroids(count: usize, dim: usize, seed: u64) -> Centroids {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, u64), Centroids>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("centroid cache").get(&(count, dim, seed)) {
        return c.clone();
    }
    let fresh = cvt_centroids(count, dim, seed);
    cache
        .lock()
        .expect("centroid cache")
        .entry((count, dim, seed))
        .or_insert(fresh)
        .clone()
}

/// Descriptors of `count` uniformly selected elites, each perturbed by
/// `N(0, sigma²)` per coordinate and clamped into the unit cube.
pub fn sample_target_descriptors(
    archive: &Archive,
    count: usize,
    sigma: f64,
    rng: &mut Rng,
) -> Result<Vec<Vec<f64>>> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(format!("descriptor noise: {e}")))?;
    let picked: Vec<Vec<f64>> = archive
        .select_uniform(count, rng)?
        .into_iter()
        .map(|e| e.descriptor.clone())
        .collect();
    Ok(picked
        .into_iter()
        .map(|d| d.into_iter().map(|v| (v + noise.sample(rng)).clamp(0.0, 1.0)).collect())
        .collect())
}

/// One rollout of the conditioned actor per target descriptor.
pub fn rollout_actor(ac: &ActorCritic, env: &EnvSpec, targets: &[Vec<f64>]) -> Result<Vec<EvalResult>> {
    if !ac.is_conditioned() {
        return Err(Error::NotConditioned("actor evaluation"));
    }
    let d = ac.descriptor_dim();
    let mut conditioning = Array2::zeros((targets.len(), d));
    for (mut row, t) in conditioning.rows_mut().into_iter().zip(targets) {
        if t.len() != d {
            return Err(Error::dims("target descriptor", d, t.len()));
        }
        row.assign(&ArrayView1::from(&t[..]));
    }
    rollout_batch(env, targets.len(), |obs| ac.act(obs, conditioning.view()))
}

/// Rolls out the conditioned actor once per target descriptor and stores
/// the transitions, tagged with the reached and the targeted descriptor.
pub fn evaluate_actor_batch(
    ac: &ActorCritic,
    env: &EnvSpec,
    targets: &[Vec<f64>],
    buffer: &mut ReplayBuffer,
) -> Result<Vec<EvalResult>> {
    let results = rollout_actor(ac, env, targets)?;
    for (r, t) in results.iter().zip(targets) {
        buffer.insert_episode(&r.transitions, &r.descriptor, t)?;
    }
    Ok(results)
}

/// Evaluates one episode per genotype.
pub fn evaluate_population(env: &EnvSpec, arch: &MlpArch, genotypes: &[ParamVector]) -> Result<Vec<EvalResult>> {
    rollout_batch(env, genotypes.len(), |obs| {
        let mut actions = Array2::zeros((genotypes.len(), env.action_dim));
        for ((g, o), mut out) in genotypes.iter().zip(obs.rows()).zip(actions.rows_mut()) {
            let a = mlp_forward(arch, g, o.as_slice().expect("contiguous rows"))?;
            out.assign(&ArrayView1::from(&a[..]));
        }
        Ok(actions)
    })
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_| Ok(()))
}

/// Runs to the evaluation budget, calling `observer` after every iteration.
pub fn run_with(config: &RunConfig, mut observer: impl FnMut(Progress<'_>) -> Result<()>) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let env = EnvSpec::new(config.env);
    let mut rng = rng_from_seed(config.seed);
    let centroids = shared_centroids(config.centroids, env.descriptor_dim, config.cvt_seed);
    let policy_arch = MlpArch::policy(
        env.state_dim,
        &config.networks.policy_hidden,
        env.action_dim,
        env.action_bound,
    )?;
    let mut archive = Archive::new(centroids, policy_arch.clone());

    let mut ac = match config.algorithm {
        Algorithm::MapElites => None,
        Algorithm::PgaMe => Some(ActorCritic::new(
            env.state_dim,
            env.action_dim,
            0,
            env.action_bound,
            &config.networks.policy_hidden,
            &config.networks.critic_hidden,
            &config.td3,
            &mut rng,
        )?),
        Algorithm::DcgMe => {
            let mut ac = ActorCritic::new(
                env.state_dim,
                env.action_dim,
                env.descriptor_dim,
                env.action_bound,
                &config.networks.actor_hidden,
                &config.networks.critic_hidden,
                &config.td3,
                &mut rng,
            )?;
            if config.ablation == Ablation::UnconditionedActor {
                ac.freeze_actor_descriptor()?;
            }
            Some(ac)
        }
    };
    let mut buffer = ac.as_ref().map(|_| {
        ReplayBuffer::new(
            config.td3.buffer_capacity,
            env.state_dim,
            env.action_dim,
            env.descriptor_dim,
        )
    });

    let initial: Vec<ParamVector> = (0..config.batch_size)
        .map(|_| mlp_init_with(&policy_arch, &mut rng))
        .collect();
    let results = evaluate_population(&env, &policy_arch, &initial)?;
    add_offspring(&mut archive, buffer.as_mut(), initial, results, config, &mut rng)?;

    let mut logs = Vec::new();
    let mut evaluations = 0;
    let mut actor_evaluations = 0;
    let mut discarded_offspring = 0;
    let b = config.batch_size;
    while evaluations < config.eval_budget {
        if let (Some(ac), Some(buffer)) = (ac.as_mut(), buffer.as_ref()) {
            if !buffer.is_empty() {
                train_actor_critic(ac, buffer, &config.td3, &mut rng)?;
            }
        }

        let (ga_count, pg_count) = match config.algorithm {
            Algorithm::MapElites => (b, 0),
            Algorithm::PgaMe => {
                let ga = config.ga_count.min(b - 1);
                (ga, b - 1 - ga)
            }
            Algorithm::DcgMe => (config.ga_count, b - config.ga_count),
        };
        let selected: Vec<Elite> = archive
            .select_uniform(ga_count + pg_count, &mut rng)?
            .into_iter()
            .cloned()
            .collect();
        let partners: Vec<Elite> = archive
            .select_uniform(ga_count, &mut rng)?
            .into_iter()
            .cloned()
            .collect();
        let pairs: Vec<(&[f64], &[f64])> = selected[..ga_count]
            .iter()
            .zip(&partners)
            .map(|(x1, x2)| (&x1.genotype[..], &x2.genotype[..]))
            .collect();
        let mut offspring = variation_ga(&pairs, &config.ga, &mut rng)?;

        if let (Some(ac), Some(buffer)) = (ac.as_ref(), buffer.as_ref()) {
            let pg_parents: Vec<&[f64]> = selected[ga_count..].iter().map(|e| &e.genotype[..]).collect();
            if !pg_parents.is_empty() && !buffer.is_empty() {
                let descriptors: Vec<Vec<f64>> =
                    selected[ga_count..].iter().map(|e| e.descriptor.clone()).collect();
                let conditioning = ac.is_conditioned().then_some(&descriptors[..]);
                let children =
                    variation_pg(&pg_parents, &policy_arch, ac, buffer, &config.pg, conditioning, &mut rng)?;
                for child in children {
                    if child.is_finite() {
                        offspring.push(child);
                    } else {
                        discarded_offspring += 1;
                        log::warn!("discarding gradient offspring with non-finite parameters");
                    }
                }
            }
            if config.algorithm == Algorithm::PgaMe {
                offspring.push(ac.actor.params.clone());
            }
        }

        if config.algorithm == Algorithm::DcgMe && config.ablation.evaluates_actor() {
            let ac = ac.as_ref().expect("dcg trainer");
            let buffer = buffer.as_mut().expect("dcg buffer");
            let targets = sample_target_descriptors(&archive, b, config.descriptor_noise_sigma, &mut rng)?;
            evaluate_actor_batch(ac, &env, &targets, buffer)?;
            actor_evaluations += targets.len();
            if config.count_actor_evals {
                evaluations += targets.len();
            }
        }

        let results = evaluate_population(&env, &policy_arch, &offspring)?;
        evaluations += offspring.len();
        add_offspring(&mut archive, buffer.as_mut(), offspring, results, config, &mut rng)?;

        let metrics = archive.metrics();
        let log = IterationLog {
            iteration: logs.len() + 1,
            evaluations,
            actor_evaluations,
            qd_score: metrics.qd_score,
            coverage: metrics.coverage,
            max_fitness: metrics.max_fitness.expect("archive is seeded"),
            wall_time: start.elapsed(),
        };
        observer(Progress {
            log: &log,
            archive: &archive,
            actor_critic: ac.as_ref(),
        })?;
        logs.push(log);
    }

    Ok(RunOutput {
        archive,
        actor_critic: ac,
        buffer,
        logs,
        discarded_offspring,
    })
}

/// Stores offspring transitions (target = reached descriptor) and offers
/// every offspring to the archive.
fn add_offspring(
    archive: &mut Archive,
    buffer: Option<&mut ReplayBuffer>,
    offspring: Vec<ParamVector>,
    results: Vec<EvalResult>,
    config: &RunConfig,
    rng: &mut Rng,
) -> Result<()> {
    if let Some(buffer) = buffer {
        for r in &results {
            buffer.insert_episode(&r.transitions, &r.descriptor, &r.descriptor)?;
            if config.ablation == Ablation::SyntheticNegatives {
                let fake: Vec<f64> = (0..r.descriptor.len()).map(|_| rng.random::<f64>()).collect();
                buffer.insert_episode(&r.transitions, &r.descriptor, &fake)?;
            }
        }
    }
    for (genotype, r) in offspring.into_iter().zip(results) {
        archive.try_insert(genotype, r.fitness, &r.descriptor)?;
    }
    Ok(())
}
