//! Backward-pass prepopulation of the Q-table.
//!
//! At the end of an episode the rewards are accumulated from the last step
//! backwards and each visited pair is raised to the accumulated value when
//! that is at least as good as what it already holds (a pair never written
//! before is always written). With the default order
//! the value written at step `k` is the return *after* action `k`; with
//! `include_immediate_reward` the reward of step `k` is added first.
//!
//! During training the guard reads a separate record of best returns (see
//! [`backward_pass_mirrored`]). Reading the TD-updated table instead lets a
//! first-visit TD write such as `alpha * target`, close to 0, block every
//! later write of the real (negative) return.

use alloc::vec::Vec;

use thiserror::Error;

use crate::env::{Observation, TraceStep};
use crate::qtable::QTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("trace has {pairs} state-action pairs but {rewards} rewards")]
pub struct TraceLengthMismatch {
    pub pairs: usize,
    pub rewards: usize,
}

/// Visited `(observation, action)` pairs of one episode and their rewards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub pairs: Vec<(Observation, usize)>,
    pub rewards: Vec<i64>,
}

impl EpisodeTrace {
    pub fn from_steps(steps: &[TraceStep]) -> Self {
        Self {
            pairs: steps
                .iter()
                .map(|s| (s.observation.clone(), s.action))
                .collect(),
            rewards: steps.iter().map(|s| s.reward).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Runs one backward pass of `trace` over `q`.
pub fn backward_pass(
    q: &mut QTable,
    trace: &EpisodeTrace,
    include_immediate_reward: bool,
) -> Result<(), TraceLengthMismatch> {
    if trace.pairs.len() != trace.rewards.len() {
        return Err(TraceLengthMismatch {
            pairs: trace.pairs.len(),
            rewards: trace.rewards.len(),
        });
    }
    backward_pass_steps(
        q,
        trace
            .pairs
            .iter()
            .zip(&trace.rewards)
            .map(|((obs, a), &r)| (obs, *a, r)),
        include_immediate_reward,
        |_, _, _| {},
    );
    Ok(())
}

/// Backward pass straight over an environment trace.
pub fn backward_pass_trace(q: &mut QTable, steps: &[TraceStep], include_immediate_reward: bool) {
    backward_pass_steps(
        q,
        steps.iter().map(|s| (&s.observation, s.action, s.reward)),
        include_immediate_reward,
        |_, _, _| {},
    );
}

/// Backward pass whose guard reads `record`, a table only the backward pass
/// writes, instead of the TD-updated `q`. Every value written to `record` is
/// also written to `q`, so a pair whose TD estimate has drifted above the
/// best observed return is reset to that return when the return is matched
/// or improved.
pub fn backward_pass_mirrored(
    record: &mut QTable,
    q: &mut QTable,
    steps: &[TraceStep],
    include_immediate_reward: bool,
) {
    backward_pass_steps(
        record,
        steps.iter().map(|s| (&s.observation, s.action, s.reward)),
        include_immediate_reward,
        |obs, action, value| q.set(obs, action, value),
    );
}

fn backward_pass_steps<'a, I, F>(
    q: &mut QTable,
    steps: I,
    include_immediate_reward: bool,
    mut on_write: F,
) where
    I: DoubleEndedIterator<Item = (&'a Observation, usize, i64)>,
    F: FnMut(&Observation, usize, f64),
{
    let mut cumulative = 0.0;
    for (obs, action, reward) in steps.rev() {
        if include_immediate_reward {
            cumulative += reward as f64;
        }
        if q.stored(obs, action).is_none_or(|v| v <= cumulative) {
            q.set(obs, action, cumulative);
            on_write(obs, action, cumulative);
        }
        if !include_immediate_reward {
            cumulative += reward as f64;
        }
    }
}

/// The stored heuristic estimate for `(obs, action)`; 0 if never visited.
pub fn heuristic_value(q: &QTable, obs: &Observation, action: usize) -> f64 {
    q.get(obs, action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pairs() -> Vec<(Observation, usize)> {
        (0..3)
            .map(|k| (Observation::from_merged(vec![-1, k]).unwrap(), 0))
            .collect()
    }

    #[test]
    fn first_pass_stores_post_action_returns() {
        let mut q = QTable::new();
        let t = EpisodeTrace {
            pairs: pairs(),
            rewards: vec![-5, -7, -8],
        };
        backward_pass(&mut q, &t, false).unwrap();
        let p = pairs();
        assert_eq!(q.get(&p[2].0, 0), 0.0);
        assert_eq!(q.get(&p[1].0, 0), -8.0);
        assert_eq!(q.get(&p[0].0, 0), -15.0);
        assert_eq!(heuristic_value(&q, &p[0].0, 0), -15.0);
    }

    #[test]
    fn second_pass_keeps_the_better_value() {
        let mut q = QTable::new();
        backward_pass(
            &mut q,
            &EpisodeTrace {
                pairs: pairs(),
                rewards: vec![-5, -7, -8],
            },
            false,
        )
        .unwrap();
        backward_pass(
            &mut q,
            &EpisodeTrace {
                pairs: pairs(),
                rewards: vec![-5, -6, -4],
            },
            false,
        )
        .unwrap();
        let p = pairs();
        assert_eq!(q.get(&p[1].0, 0), -4.0);
        assert_eq!(q.get(&p[0].0, 0), -10.0);
        assert_eq!(heuristic_value(&q, &p[0].0, 0), -10.0);
    }

    #[test]
    fn immediate_reward_variant_includes_step_reward() {
        let mut q = QTable::new();
        let t = EpisodeTrace {
            pairs: pairs(),
            rewards: vec![-5, -7, -8],
        };
        backward_pass(&mut q, &t, true).unwrap();
        let p = pairs();
        assert_eq!(q.get(&p[2].0, 0), -8.0);
        assert_eq!(q.get(&p[1].0, 0), -15.0);
        assert_eq!(q.get(&p[0].0, 0), -20.0);
    }

    #[test]
    fn mirrored_pass_resets_drifted_values() {
        use crate::env::Allocation;
        let steps: Vec<TraceStep> = pairs()
            .into_iter()
            .zip([-5, -7, -8])
            .map(|((observation, action), reward)| TraceStep {
                observation,
                action,
                allocation: Allocation::wait(1),
                clock: 0,
                reward,
            })
            .collect();
        let p = pairs();
        let mut record = QTable::new();
        let mut q = QTable::new();
        // a TD estimate far above the true return
        q.set(&p[0].0, 0, -1.0);
        backward_pass_mirrored(&mut record, &mut q, &steps, false);
        assert_eq!(q.get(&p[0].0, 0), -15.0);
        assert_eq!(record.get(&p[0].0, 0), -15.0);
        // a worse replay leaves both untouched
        q.set(&p[0].0, 0, -2.0);
        let mut worse = steps.clone();
        worse[1].reward = -20;
        backward_pass_mirrored(&mut record, &mut q, &worse, false);
        assert_eq!(q.get(&p[0].0, 0), -2.0);
        assert_eq!(record.get(&p[0].0, 0), -15.0);
        // an equal replay resets q again
        backward_pass_mirrored(&mut record, &mut q, &steps, false);
        assert_eq!(q.get(&p[0].0, 0), -15.0);
    }

    #[test]
    fn empty_trace_and_mismatch() {
        let mut q = QTable::new();
        backward_pass(&mut q, &EpisodeTrace::default(), false).unwrap();
        assert!(q.is_empty());
        let t = EpisodeTrace {
            pairs: pairs(),
            rewards: vec![-1],
        };
        assert_eq!(
            backward_pass(&mut q, &t, false),
            Err(TraceLengthMismatch {
                pairs: 3,
                rewards: 1
            })
        );
        assert_eq!(heuristic_value(&q, &pairs()[0].0, 0), 0.0);
    }
}
