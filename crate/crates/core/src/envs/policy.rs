use crate::nn::{mlp_forward, MlpArch};
use crate::Result;

/// Deterministic map from an observation to an action.
pub trait Policy {
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>>;
}

impl<F> Policy for F
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>> {
        Ok(self(observation))
    }
}

/// An archive genotype acting on raw observations.
#[derive(Debug, Clone, Copy)]
pub struct MlpPolicy<'a> {
    pub arch: &'a MlpArch,
    pub params: &'a [f64],
}

impl Policy for MlpPolicy<'_> {
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>> {
        mlp_forward(self.arch, self.params, observation)
    }
}

/// A descriptor-conditioned actor with its conditioning input fixed;
/// the network sees `observation ⊕ descriptor`.
#[derive(Debug, Clone, Copy)]
pub struct ConditionedPolicy<'a> {
    pub arch: &'a MlpArch,
    pub params: &'a [f64],
    pub descriptor: &'a [f64],
}

impl Policy for ConditionedPolicy<'_> {
    fn act(&self, observation: &[f64]) -> Result<Vec<f64>> {
        let mut input = Vec::with_capacity(observation.len() + self.descriptor.len());
        input.extend_from_slice(observation);
        input.extend_from_slice(self.descriptor);
        mlp_forward(self.arch, self.params, &input)
    }
}
