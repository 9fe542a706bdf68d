use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActorCritic, Net, Td3Config};
use crate::nn::{load_network, save_network};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Meta {
    state_dim: usize,
    action_dim: usize,
    descriptor_dim: usize,
    action_bound: f64,
    actor_descriptor_frozen: bool,
}

const NETS: [&str; 6] = [
    "actor",
    "actor_target",
    "critic1",
    "critic2",
    "critic1_target",
    "critic2_target",
];

impl ActorCritic {
    /// Writes all six networks and a `meta.json` into `dir`. Optimizer
    /// moments are not stored.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let meta = Meta {
            state_dim: self.state_dim(),
            action_dim: self.action_dim(),
            descriptor_dim: self.descriptor_dim(),
            action_bound: self.action_bound(),
            actor_descriptor_frozen: self.actor_descriptor_frozen(),
        };
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
        let nets = [
            &self.actor,
            &self.actor_target,
            &self.critics[0],
            &self.critics[1],
            &self.critic_targets[0],
            &self.critic_targets[1],
        ];
        for (name, net) in NETS.iter().zip(nets) {
            save_network(dir, name, &net.arch, &net.params)?;
        }
        Ok(())
    }

    /// Restores a trainer written by [`ActorCritic::save`] with fresh
    /// optimizer states built from `cfg`.
    pub fn load(dir: &Path, cfg: &Td3Config) -> Result<Self> {
        let meta: Meta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
        let mut nets = Vec::with_capacity(NETS.len());
        for name in NETS {
            let (arch, params) = load_network(dir, name)?;
            nets.push(Net { arch, params });
        }
        let expected_actor = meta.state_dim + meta.descriptor_dim;
        let expected_critic = meta.state_dim + meta.action_dim + meta.descriptor_dim;
        for (i, net) in nets.iter().enumerate() {
            let input = if i < 2 { expected_actor } else { expected_critic };
            if net.arch.input_dim() != input {
                return Err(Error::Format {
                    path: dir.join(format!("{}.arch", NETS[i])).display().to_string(),
                    reason: format!("input width {} does not match meta.json ({input})", net.arch.input_dim()),
                });
            }
        }
        let mut it = nets.into_iter();
        let mut next = || it.next().expect("six networks");
        let (actor, actor_target) = (next(), next());
        let critics = [next(), next()];
        let critic_targets = [next(), next()];
        let mut ac = ActorCritic::assemble(
            actor,
            critics,
            meta.state_dim,
            meta.action_dim,
            meta.descriptor_dim,
            meta.action_bound,
            cfg,
        );
        ac.actor_target = actor_target;
        ac.critic_targets = critic_targets;
        if meta.actor_descriptor_frozen {
            ac.freeze_actor_descriptor()?;
        }
        Ok(ac)
    }
}
