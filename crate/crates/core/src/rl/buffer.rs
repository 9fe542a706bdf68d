use ndarray::{Array1, Array2};
use rand::Rng as _;

use super::Transition;
use crate::envs::Step;
use crate::{Error, Result, Rng};

/// Bounded FIFO of transitions with uniform sampling.
///
/// Rows are stored flat as `state | action | reward | next_state | done |
/// observed | target`.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    descriptor_dim: usize,
    data: Vec<f64>,
    /// Slot the next row is written to once the buffer is full.
    head: usize,
    len: usize,
}

/// Column-major view of sampled transitions, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    /// `1.0` where the transition terminated the episode.
    pub dones: Array1<f64>,
    pub observed: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize, descriptor_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            state_dim,
            action_dim,
            descriptor_dim,
            data: Vec::new(),
            head: 0,
            len: 0,
        }
    }

    fn row_len(&self) -> usize {
        2 * self.state_dim + self.action_dim + 2 + 2 * self.descriptor_dim
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn descriptor_dim(&self) -> usize {
        self.descriptor_dim
    }

    fn push_row(&mut self, write: impl FnOnce(&mut [f64])) {
        let row = self.row_len();
        if self.len < self.capacity {
            let start = self.data.len();
            self.data.resize(start + row, 0.0);
            write(&mut self.data[start..]);
            self.len += 1;
        } else {
            let start = self.head * row;
            write(&mut self.data[start..start + row]);
            self.head = (self.head + 1) % self.capacity;
        }
    }

    fn check_dims(&self, state: usize, action: usize, next: usize, d: usize, dt: usize) -> Result<()> {
        let checks = [
            ("transition state", self.state_dim, state),
            ("transition action", self.action_dim, action),
            ("transition next state", self.state_dim, next),
            ("observed descriptor", self.descriptor_dim, d),
            ("target descriptor", self.descriptor_dim, dt),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(Error::dims(what, expected, actual));
            }
        }
        Ok(())
    }

    pub fn insert(&mut self, transitions: &[Transition]) -> Result<()> {
        for t in transitions {
            self.check_dims(
                t.state.len(),
                t.action.len(),
                t.next_state.len(),
                t.observed_descriptor.len(),
                t.target_descriptor.len(),
            )?;
        }
        for t in transitions {
            self.push_row(|row| {
                fill_row(
                    row,
                    &t.state,
                    &t.action,
                    t.reward,
                    &t.next_state,
                    t.done,
                    &t.observed_descriptor,
                    &t.target_descriptor,
                )
            });
        }
        Ok(())
    }

    /// Inserts one episode, tagging every step with the same descriptor pair.
    pub fn insert_episode(&mut self, steps: &[Step], observed: &[f64], target: &[f64]) -> Result<()> {
        for s in steps {
            self.check_dims(
                s.state.len(),
                s.action.len(),
                s.next_state.len(),
                observed.len(),
                target.len(),
            )?;
        }
        for s in steps {
            self.push_row(|row| {
                fill_row(row, &s.state, &s.action, s.reward, &s.next_state, s.done, observed, target)
            });
        }
        Ok(())
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        let start = if self.len < self.capacity { 0 } else { self.head };
        (0..self.len).map(move |k| self.slot((start + k) % self.len.max(1)))
    }

    fn slot(&self, slot: usize) -> Transition {
        let row = &self.data[slot * self.row_len()..(slot + 1) * self.row_len()];
        let (s, a, rest) = (self.state_dim, self.action_dim, self.descriptor_dim);
        let mut at = 0;
        let mut take = |n: usize| {
            let part = row[at..at + n].to_vec();
            at += n;
            part
        };
        let state = take(s);
        let action = take(a);
        let reward = take(1)[0];
        let next_state = take(s);
        let done = take(1)[0] != 0.0;
        let observed_descriptor = take(rest);
        let target_descriptor = take(rest);
        Transition {
            state,
            action,
            reward,
            next_state,
            done,
            observed_descriptor,
            target_descriptor,
        }
    }

    fn draw_slots(&self, n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if self.len == 0 {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..n).map(|_| rng.random_range(0..self.len)).collect())
    }

    /// States of `out.nrows()` uniform draws, written into `out`.
    pub fn sample_states_into(&self, mut out: ndarray::ArrayViewMut2<'_, f64>, rng: &mut Rng) -> Result<()> {
        if out.ncols() != self.state_dim {
            return Err(Error::dims("sampled state columns", self.state_dim, out.ncols()));
        }
        let slots = self.draw_slots(out.nrows(), rng)?;
        let row_len = self.row_len();
        for (r, slot) in slots.into_iter().enumerate() {
            copy_into(out.row_mut(r), &self.data[slot * row_len..slot * row_len + self.state_dim]);
        }
        Ok(())
    }

    /// `n` uniform draws with replacement.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<Transition>> {
        Ok(self.draw_slots(n, rng)?.into_iter().map(|i| self.slot(i)).collect())
    }

    /// Same draws as [`ReplayBuffer::sample`], assembled into matrices.
    pub fn sample_batch(&self, n: usize, rng: &mut Rng) -> Result<Batch> {
        let slots = self.draw_slots(n, rng)?;
        let (s, a, d) = (self.state_dim, self.action_dim, self.descriptor_dim);
        let mut batch = Batch {
            states: Array2::zeros((n, s)),
            actions: Array2::zeros((n, a)),
            rewards: Array1::zeros(n),
            next_states: Array2::zeros((n, s)),
            dones: Array1::zeros(n),
            observed: Array2::zeros((n, d)),
            targets: Array2::zeros((n, d)),
        };
        let row_len = self.row_len();
        for (r, &slot) in slots.iter().enumerate() {
            let row = &self.data[slot * row_len..(slot + 1) * row_len];
            let mut at = 0;
            let mut next = |k: usize| {
                let part = &row[at..at + k];
                at += k;
                part
            };
            copy_into(batch.states.row_mut(r), next(s));
            copy_into(batch.actions.row_mut(r), next(a));
            batch.rewards[r] = next(1)[0];
            copy_into(batch.next_states.row_mut(r), next(s));
            batch.dones[r] = next(1)[0];
            copy_into(batch.observed.row_mut(r), next(d));
            copy_into(batch.targets.row_mut(r), next(d));
        }
        Ok(batch)
    }
}

fn copy_into(mut dst: ndarray::ArrayViewMut1<'_, f64>, src: &[f64]) {
    for (x, &v) in dst.iter_mut().zip(src) {
        *x = v;
    }
}

#[allow(clippy::too_many_arguments)]
fn fill_row(
    row: &mut [f64],
    state: &[f64],
    action: &[f64],
    reward: f64,
    next_state: &[f64],
    done: bool,
    observed: &[f64],
    target: &[f64],
) {
    let mut at = 0;
    for part in [state, action, &[reward], next_state, &[f64::from(u8::from(done))], observed, target] {
        row[at..at + part.len()].copy_from_slice(part);
        at += part.len();
    }
}
