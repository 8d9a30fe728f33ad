//! Tabular Q-learning over the environment, optionally guided by the
//! backward-pass prepopulation heuristic.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{Allocation, AllocationMask, Env, EnvError, Observation};
use crate::instance::{Instance, Time};
use crate::prepopulate::backward_pass_mirrored;
use crate::qtable::QTable;
use crate::schedule::Schedule;
use crate::stopwatch::Stopwatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("no legal action to select from")]
    NoLegalAction,
    #[error("invalid learner configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Multiplicative per-episode decay of epsilon.
    pub epsilon_decay: f64,
    pub episodes: usize,
    /// A greedy evaluation episode runs after every this many episodes.
    pub test_interval: usize,
    pub seed: u64,
    pub prepopulate: bool,
    /// Add each step's own reward before writing the backward-pass value.
    pub include_immediate_reward: bool,
    /// Number of greedy tests without improvement after which the run is
    /// considered converged.
    pub convergence_patience: usize,
    /// End training at convergence instead of running every episode.
    pub stop_at_convergence: bool,
    /// Wall-clock limit in seconds, checked between episodes.
    pub time_limit: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 1.0,
            epsilon_start: 1.0,
            epsilon_min: 0.05,
            epsilon_decay: 0.999,
            episodes: 10_000,
            test_interval: 100,
            seed: 0,
            prepopulate: true,
            include_immediate_reward: false,
            convergence_patience: 20,
            stop_at_convergence: false,
            time_limit: None,
        }
    }
}

impl LearnerConfig {
    /// Plain Q-learning without the backward pass.
    pub fn classical() -> Self {
        Self {
            prepopulate: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(LearnError::Config("alpha must lie in [0, 1]"));
        }
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(LearnError::Config("gamma must lie in [0, 1]"));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.epsilon_start) || !unit(self.epsilon_min) {
            return Err(LearnError::Config("epsilon must lie in [0, 1]"));
        }
        if self.epsilon_min > self.epsilon_start {
            return Err(LearnError::Config("epsilon_min exceeds epsilon_start"));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(LearnError::Config("epsilon_decay must lie in (0, 1]"));
        }
        if self.episodes == 0 || self.test_interval == 0 {
            return Err(LearnError::Config(
                "episodes and test_interval must be positive",
            ));
        }
        Ok(())
    }
}

/// Epsilon-greedy choice among `legal_count` actions. Greedy ties go to the
/// lowest index.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    obs: &Observation,
    legal_count: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, LearnError> {
    if legal_count == 0 {
        return Err(LearnError::NoLegalAction);
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..legal_count));
    }
    Ok(q.argmax(obs, legal_count).unwrap_or(0))
}

/// One temporal-difference update. `next_legal_count` is 0 for a terminal
/// next state, which makes the bootstrap term 0.
#[allow(clippy::too_many_arguments)]
pub fn update(
    q: &mut QTable,
    obs: &Observation,
    action: usize,
    reward: i64,
    next: &Observation,
    next_legal_count: usize,
    alpha: f64,
    gamma: f64,
) {
    let old = q.get(obs, action);
    let target = reward as f64 + gamma * q.max_value(next, next_legal_count);
    let new = old + alpha * (target - old);
    if new != old {
        q.set(obs, action, new);
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub best_schedule: Schedule,
    pub best_makespan: Time,
    /// Allocations chosen in the best episode, in order.
    pub best_policy: Vec<Allocation>,
    /// Makespan of every training episode.
    pub episode_makespans: Vec<Time>,
    /// `(episodes completed, greedy makespan)` of every test.
    pub test_makespans: Vec<(usize, Time)>,
    /// Episodes completed when `best_makespan` was first recorded.
    pub episodes_to_best: usize,
    /// Wall-clock seconds from the start of training to that point.
    pub seconds_to_best: f64,
    /// Episodes completed at the first test reaching the best greedy
    /// makespan of the run.
    pub test_episodes_to_best: Option<usize>,
    pub test_seconds_to_best: Option<f64>,
    /// Episodes completed when the patience criterion was first met.
    pub converged_at: Option<usize>,
    pub episodes_run: usize,
    pub elapsed_seconds: f64,
}

impl TrainingReport {
    /// Equality ignoring wall-clock fields.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.best_schedule == other.best_schedule
            && self.best_makespan == other.best_makespan
            && self.best_policy == other.best_policy
            && self.episode_makespans == other.episode_makespans
            && self.test_makespans == other.test_makespans
            && self.episodes_to_best == other.episodes_to_best
            && self.test_episodes_to_best == other.test_episodes_to_best
            && self.converged_at == other.converged_at
            && self.episodes_run == other.episodes_run
    }
}

/// A Q-learning run over one instance. Keeps its Q-table after training.
pub struct Learner<'a> {
    inst: &'a Instance,
    mask: Option<&'a dyn AllocationMask>,
    cfg: LearnerConfig,
    q: QTable,
    rng: ChaCha8Rng,
    /// Best observed returns, written only by the backward pass.
    best_returns: QTable,
}

impl<'a> Learner<'a> {
    pub fn new(inst: &'a Instance, cfg: LearnerConfig) -> Result<Self, LearnError> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self {
            inst,
            mask: None,
            cfg,
            q: QTable::new(),
            rng,
            best_returns: QTable::new(),
        })
    }

    /// Restricts every episode to allocations `mask` allows.
    pub fn with_mask(mut self, mask: &'a dyn AllocationMask) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn q_table(&self) -> &QTable {
        &self.q
    }

    pub fn into_q_table(self) -> QTable {
        self.q
    }

    fn env(&self) -> Result<Env<'a>, EnvError> {
        match self.mask {
            Some(mask) => Env::with_mask(self.inst, mask),
            None => Ok(Env::new(self.inst)),
        }
    }

    /// Runs one episode; `learn` toggles TD updates and the backward pass.
    fn episode(&mut self, env: &mut Env<'a>, epsilon: f64, learn: bool) -> Result<(), LearnError> {
        let mut obs = env.reset()?;
        while !env.is_done() {
            let n = env.legal_allocations().len();
            let action = select_action(&self.q, &obs, n, epsilon, &mut self.rng)?;
            let step = env.step(action)?;
            if learn {
                let next_n = if step.done {
                    0
                } else {
                    env.legal_allocations().len()
                };
                update(
                    &mut self.q,
                    &obs,
                    action,
                    step.reward,
                    &step.observation,
                    next_n,
                    self.cfg.alpha,
                    self.cfg.gamma,
                );
            }
            obs = step.observation;
        }
        if learn && self.cfg.prepopulate {
            backward_pass_mirrored(
                &mut self.best_returns,
                &mut self.q,
                env.state().trace(),
                self.cfg.include_immediate_reward,
            );
        }
        Ok(())
    }

    /// Trains for the configured number of episodes, timing with `watch`.
    pub fn train_with(&mut self, watch: &dyn Stopwatch) -> Result<TrainingReport, LearnError> {
        let start = watch.seconds();
        let elapsed = || watch.seconds() - start;
        let mut env = self.env()?;
        let mut epsilon = self.cfg.epsilon_start;

        let mut best: Option<(Time, Schedule, Vec<Allocation>)> = None;
        let mut episodes_to_best = 0;
        let mut seconds_to_best = 0.0;
        let mut episode_makespans = Vec::with_capacity(self.cfg.episodes);
        let mut test_makespans = Vec::new();
        let mut best_test: Option<Time> = None;
        let mut test_episodes_to_best = None;
        let mut test_seconds_to_best = None;
        let mut stale_tests = 0;
        let mut converged_at = None;
        let mut episodes_run = 0;

        let mut record = |env: &Env<'a>, done_episodes: usize, t: f64| -> Time {
            let schedule = env.extract_schedule().expect("episode finished");
            let makespan = schedule.makespan().unwrap_or(0);
            if best.as_ref().is_none_or(|(b, _, _)| makespan < *b) {
                let policy = env
                    .state()
                    .trace()
                    .iter()
                    .map(|s| s.allocation.clone())
                    .collect();
                best = Some((makespan, schedule, policy));
                episodes_to_best = done_episodes;
                seconds_to_best = t;
            }
            makespan
        };

        for ep in 1..=self.cfg.episodes {
            self.episode(&mut env, epsilon, true)?;
            episodes_run = ep;
            episode_makespans.push(record(&env, ep, elapsed()));

            if ep % self.cfg.test_interval == 0 {
                self.episode(&mut env, 0.0, false)?;
                let t = elapsed();
                let makespan = record(&env, ep, t);
                test_makespans.push((ep, makespan));
                if best_test.is_none_or(|b| makespan < b) {
                    best_test = Some(makespan);
                    test_episodes_to_best = Some(ep);
                    test_seconds_to_best = Some(t);
                    stale_tests = 0;
                } else {
                    stale_tests += 1;
                    if stale_tests >= self.cfg.convergence_patience && converged_at.is_none() {
                        converged_at = Some(ep);
                        if self.cfg.stop_at_convergence {
                            break;
                        }
                    }
                }
            }

            epsilon = (epsilon * self.cfg.epsilon_decay).max(self.cfg.epsilon_min);
            if self.cfg.time_limit.is_some_and(|limit| elapsed() >= limit) {
                break;
            }
        }

        let (best_makespan, best_schedule, best_policy) = best.expect("at least one episode ran");
        Ok(TrainingReport {
            best_schedule,
            best_makespan,
            best_policy,
            episode_makespans,
            test_makespans,
            episodes_to_best,
            seconds_to_best,
            test_episodes_to_best,
            test_seconds_to_best,
            converged_at,
            episodes_run,
            elapsed_seconds: elapsed(),
        })
    }

    /// Greedy episode with the current table; no learning.
    pub fn greedy_schedule(&mut self) -> Result<Schedule, LearnError> {
        let mut env = self.env()?;
        self.episode(&mut env, 0.0, false)?;
        Ok(env.extract_schedule()?)
    }
}

/// Trains on `inst` with wall-clock timing from the default stopwatch.
pub fn train(inst: &Instance, cfg: LearnerConfig) -> Result<TrainingReport, LearnError> {
    Learner::new(inst, cfg)?.train_with(&crate::stopwatch::default_stopwatch())
}

/// Same as [`train`], also returning the learned table.
pub fn train_with_table(
    inst: &Instance,
    cfg: LearnerConfig,
) -> Result<(TrainingReport, QTable), LearnError> {
    let mut learner = Learner::new(inst, cfg)?;
    let report = learner.train_with(&crate::stopwatch::default_stopwatch())?;
    Ok((report, learner.into_q_table()))
}

/// Follows the greedy policy of `q` from the initial state.
pub fn greedy_rollout(inst: &Instance, q: &QTable) -> Result<Schedule, EnvError> {
    let mut env = Env::new(inst).without_trace();
    let mut obs = env.observation();
    while !env.is_done() {
        let n = env.legal_allocations().len();
        let action = q.argmax(&obs, n).unwrap_or(0);
        obs = env.step(action)?.observation;
    }
    env.extract_schedule()
}
