//! TOML experiment files.
//!
//! A file holds the [`RunConfig`] keys at top level (with `[td3]`, `[ga]`,
//! `[pg]` and `[networks]` tables) plus four harness keys: `replications`,
//! `output_dir`, `log_every` and `checkpoint_every`. Every key is optional.
//!
//! ```toml
//! algorithm = "dcg_me"
//! env = "point_trap_omni"
//! eval_budget = 51200
//! replications = 5
//!
//! [pg]
//! gradient_steps = 10
//! ```

use std::path::PathBuf;

use qdrl_core::runner::RunConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    /// Runs use seeds `run.seed`, `run.seed + 1`, ….
    pub replications: usize,
    pub output_dir: PathBuf,
    /// Metrics are logged every `log_every` iterations and after the last.
    pub log_every: usize,
    /// Archive and trainer snapshots every this many iterations; 0 disables.
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Harness {
    replications: usize,
    output_dir: PathBuf,
    log_every: usize,
    checkpoint_every: usize,
}

impl Default for Harness {
    fn default() -> Self {
        Self {
            replications: 1,
            output_dir: PathBuf::from("runs"),
            log_every: 1,
            checkpoint_every: 0,
        }
    }
}

const HARNESS_KEYS: [&str; 4] = ["replications", "output_dir", "log_every", "checkpoint_every"];

impl Default for ExperimentConfig {
    fn default() -> Self {
        let h = Harness::default();
        Self {
            run: RunConfig::default(),
            replications: h.replications,
            output_dir: h.output_dir,
            log_every: h.log_every,
            checkpoint_every: h.checkpoint_every,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.replications == 0 {
            return Err(CliError::Config("replications must be ≥ 1".into()));
        }
        if self.log_every == 0 {
            return Err(CliError::Config("log_every must be ≥ 1".into()));
        }
        self.run.validate().map_err(|e| CliError::Config(strip_prefix(e)))
    }
}

fn strip_prefix(e: qdrl_core::Error) -> String {
    match e {
        qdrl_core::Error::InvalidConfig(msg) => msg,
        other => other.to_string(),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let mut harness_table = toml::Table::new();
    for key in HARNESS_KEYS {
        if let Some(v) = table.remove(key) {
            harness_table.insert(key.to_string(), v);
        }
    }
    let harness: Harness = harness_table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let run: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let config = ExperimentConfig {
        run,
        replications: harness.replications,
        output_dir: harness.output_dir,
        log_every: harness.log_every,
        checkpoint_every: harness.checkpoint_every,
    };
    config.validate()?;
    Ok(config)
}

/// Serializes every field, defaults included.
pub fn emit_config(config: &ExperimentConfig) -> String {
    let mut table = toml::Table::try_from(&config.run).expect("run config is representable in TOML");
    let harness = Harness {
        replications: config.replications,
        output_dir: config.output_dir.clone(),
        log_every: config.log_every,
        checkpoint_every: config.checkpoint_every,
    };
    let harness = toml::Table::try_from(&harness).expect("harness is representable in TOML");
    table.extend(harness);
    toml::to_string(&table).expect("tables serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdrl_core::runner::{Algorithm, RunConfig};

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.run.batch_size, 256);
        assert_eq!(c.run.ga_count, 128);
        assert_eq!(c.run.td3.gamma, 0.99);
        assert_eq!(c.run.td3.lengthscale, 0.008);
        assert_eq!(c.run.descriptor_noise_sigma, 0.0004);
        assert_eq!(c.run.ga.sigma1, 0.005);
        assert_eq!(c.run.ga.sigma2, 0.05);
        assert_eq!(c.run.pg.policy_lr, 5e-3);
        assert_eq!(c.run.td3.tau, 0.005);
    }

    #[test]
    fn ga_count_above_batch_names_the_constraint() {
        let err = parse_config("ga_count = 300\nbatch_size = 256\n").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("g ≤ b"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for doc in ["bogus = 1", "[td3]\ngama = 0.9", "[networks]\nwidth = 3"] {
            let err = parse_config(doc).unwrap_err();
            assert!(err.to_string().contains("unknown field"), "{doc}: {err}");
        }
        assert!(parse_config("replications = 0").is_err());
        assert!(parse_config("log_every = 0").is_err());
        assert!(parse_config("algorithm = \"cma_me\"").is_err());
        assert!(parse_config("batch_size = ").is_err());
    }

    #[test]
    fn emitted_config_round_trips() {
        let doc = r#"
            algorithm = "pga_me"
            env = "point_trap_omni"
            eval_budget = 2048
            seed = 7
            replications = 3
            output_dir = "out/trap"
            checkpoint_every = 5
            [td3]
            training_steps = 50
            [networks]
            critic_hidden = [16, 8]
        "#;
        let first = parse_config(doc).unwrap();
        assert_eq!(first.run.algorithm, Algorithm::PgaMe);
        assert_eq!(first.run.networks.critic_hidden, vec![16, 8]);
        let text = emit_config(&first);
        let second = parse_config(&text).unwrap();
        assert_eq!(first, second);
        assert_eq!(text, emit_config(&second));
        assert_eq!(parse_config(&emit_config(&ExperimentConfig::default())).unwrap().run, RunConfig::default());
    }
}
