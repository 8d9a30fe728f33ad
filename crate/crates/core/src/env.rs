//! The deterministic flexible job-shop environment.
//!
//! At every decision point the agent picks an index into the list of legal
//! allocations: per-job machine assignments (or waits) that are executable in
//! the current state. After an allocation is applied, the clock jumps forward
//! through completion events until the next state that admits an allocation
//! other than pure wait, or until every job is finished. The reward of a step
//! is the (non-positive) clock difference, so an episode's rewards sum to the
//! negative makespan.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::instance::{Instance, JobId, MachineId, Time};
use crate::schedule::{Schedule, ScheduleEntry};

/// Sentinel used in the merged observation for an unassigned job and for a
/// finished job's operation index.
pub const NONE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("action {action} out of range ({len} legal allocations)")]
    ActionOutOfRange { action: usize, len: usize },
    #[error("episode already finished")]
    Terminal,
    #[error("episode not finished")]
    NotTerminal,
    #[error("no executable allocation while every machine is idle (at t={clock})")]
    Deadlock { clock: Time },
}

/// Per-job allocation status followed by per-job operation status, merged
/// into one array: `[machine or -1; n] ++ [op index or -1 when finished; n]`.
/// This is the Q-table key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation(Box<[i32]>);

impl Observation {
    /// Rebuilds an observation from its merged form.
    pub fn from_merged(values: Vec<i32>) -> Option<Self> {
        if !values.len().is_multiple_of(2) || values.iter().any(|&v| v < NONE) {
            return None;
        }
        Some(Self(values.into_boxed_slice()))
    }

    pub fn job_count(&self) -> usize {
        self.0.len() / 2
    }

    /// Machine currently processing `job`, if any.
    pub fn allocation(&self, job: JobId) -> Option<MachineId> {
        let v = self.0[job];
        (v != NONE).then_some(v as MachineId)
    }

    /// Current operation index of `job`; `None` once the job is finished.
    pub fn operation(&self, job: JobId) -> Option<usize> {
        let v = self.0[self.job_count() + job];
        (v != NONE).then_some(v as usize)
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.job_count();
        let part = |f: &mut fmt::Formatter<'_>, xs: &[i32]| -> fmt::Result {
            f.write_str("(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        f.write_str("(")?;
        part(f, &self.0[..n])?;
        f.write_str(", ")?;
        part(f, &self.0[n..])?;
        f.write_str(")")
    }
}

/// A per-job machine assignment; `None` is wait.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation(pub Vec<Option<MachineId>>);

impl Allocation {
    pub fn wait(jobs: usize) -> Self {
        Self(vec![None; jobs])
    }

    pub fn is_pure_wait(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    /// `(job, machine)` pairs of the non-wait entries.
    pub fn assignments(&self) -> impl Iterator<Item = (JobId, MachineId)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(j, m)| m.map(|m| (j, m)))
    }

    /// Vector form with `-1` for wait.
    pub fn to_vector(&self) -> Vec<i64> {
        self.0.iter().map(|m| m.map_or(-1, |m| m as i64)).collect()
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.to_vector().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Running {
    pub machine: MachineId,
    pub op: usize,
    pub start: Time,
    pub remaining: Time,
}

/// One decision taken during an episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub observation: Observation,
    pub action: usize,
    pub allocation: Allocation,
    pub clock: Time,
    pub reward: i64,
}

/// Full internal state of an episode. Unlike [`Observation`] it keeps the
/// remaining processing times and the clock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    clock: Time,
    next_op: Vec<usize>,
    op_counts: Vec<usize>,
    running: Vec<Option<Running>>,
    machine_job: Vec<Option<JobId>>,
    ready_at: Vec<Time>,
    entries: Vec<ScheduleEntry>,
    trace: Vec<TraceStep>,
}

impl EnvState {
    fn initial(inst: &Instance) -> Self {
        let n = inst.job_count();
        Self {
            clock: 0,
            next_op: vec![0; n],
            op_counts: inst.jobs().iter().map(|j| j.len()).collect(),
            running: vec![None; n],
            machine_job: vec![None; inst.machine_count()],
            ready_at: vec![0; n],
            entries: Vec::with_capacity(inst.total_operations()),
            trace: Vec::new(),
        }
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    pub fn job_count(&self) -> usize {
        self.next_op.len()
    }

    /// Index of the operation `job` is processing or will process next; equal
    /// to the job's operation count once finished.
    pub fn current_op(&self, job: JobId) -> usize {
        self.next_op[job]
    }

    pub fn is_finished(&self, job: JobId) -> bool {
        self.next_op[job] >= self.op_counts[job]
    }

    pub fn running(&self, job: JobId) -> Option<Running> {
        self.running[job]
    }

    /// Not finished and not currently processing.
    pub fn is_idle(&self, job: JobId) -> bool {
        !self.is_finished(job) && self.running[job].is_none()
    }

    pub fn machine_free(&self, machine: MachineId) -> bool {
        self.machine_job[machine].is_none()
    }

    pub fn any_running(&self) -> bool {
        self.running.iter().any(Option::is_some)
    }

    pub fn all_finished(&self) -> bool {
        (0..self.job_count()).all(|j| self.is_finished(j))
    }

    /// Time at which `job` last became free (0 initially).
    pub fn ready_at(&self, job: JobId) -> Time {
        self.ready_at[job]
    }

    /// Whether operation `op` of `job` has started (running or done).
    pub fn op_started(&self, job: JobId, op: usize) -> bool {
        self.next_op[job] > op || (self.next_op[job] == op && self.running[job].is_some())
    }

    pub fn observation(&self) -> Observation {
        let n = self.job_count();
        let mut v = Vec::with_capacity(2 * n);
        v.extend(
            self.running
                .iter()
                .map(|r| r.map_or(NONE, |r| r.machine as i32)),
        );
        v.extend((0..n).map(|j| {
            if self.is_finished(j) {
                NONE
            } else {
                self.next_op[j] as i32
            }
        }));
        Observation(v.into_boxed_slice())
    }

    /// Everything that determines the future of the episode: the clock,
    /// every job's next operation and the machine and remaining time of
    /// every running operation. Equal signatures admit the same
    /// continuations.
    pub fn signature(&self) -> Vec<u32> {
        let mut v = Vec::with_capacity(1 + 3 * self.job_count());
        v.push(self.clock);
        v.extend(self.next_op.iter().map(|&o| o as u32));
        for r in &self.running {
            match r {
                Some(r) => v.extend([r.machine as u32 + 1, r.remaining]),
                None => v.extend([0, 0]),
            }
        }
        v
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    /// Completed operations so far.
    pub fn completed(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    /// Lower bound on the makespan reachable from this state: every job must
    /// still process its remaining operations at their fastest.
    pub fn remaining_work_bound(&self, inst: &Instance) -> Time {
        let mut bound = self.clock;
        for j in 0..self.job_count() {
            let mut t = self.clock;
            let mut from = self.next_op[j];
            if let Some(r) = self.running[j] {
                t += r.remaining;
                from += 1;
            }
            t += inst.job(j).operations[from.min(self.op_counts[j])..]
                .iter()
                .map(|o| o.min_duration())
                .sum::<Time>();
            bound = bound.max(t);
        }
        bound
    }

    fn assign(&mut self, inst: &Instance, job: JobId, machine: MachineId) {
        let op = self.next_op[job];
        let remaining = inst
            .operation(job, op)
            .duration_on(machine)
            .expect("legal allocation names a capable machine");
        self.running[job] = Some(Running {
            machine,
            op,
            start: self.clock,
            remaining,
        });
        self.machine_job[machine] = Some(job);
    }

    /// Jumps to the next completion event.
    fn advance(&mut self) {
        let Some(dt) = self.running.iter().flatten().map(|r| r.remaining).min() else {
            return;
        };
        self.clock += dt;
        for j in 0..self.running.len() {
            let Some(r) = self.running[j].as_mut() else {
                continue;
            };
            r.remaining -= dt;
            if r.remaining == 0 {
                let r = *r;
                self.entries.push(ScheduleEntry {
                    job: j,
                    op: r.op,
                    machine: r.machine,
                    start: r.start,
                    end: self.clock,
                });
                self.running[j] = None;
                self.machine_job[r.machine] = None;
                self.next_op[j] += 1;
                self.ready_at[j] = self.clock;
            }
        }
    }
}

/// Restricts which machine a job's current operation may be assigned to.
pub trait AllocationMask {
    fn allows(&self, state: &EnvState, job: JobId, op: usize, machine: MachineId) -> bool;
}

/// Legal allocations of `state` in canonical order: lexicographic over jobs,
/// machines ascending with wait last for each job. Pure wait is listed (last)
/// only while some operation is running. A state without any non-wait
/// allocation yields an empty list.
pub fn legal_allocations(
    inst: &Instance,
    state: &EnvState,
    mask: Option<&dyn AllocationMask>,
) -> Vec<Allocation> {
    let n = state.job_count();
    let options: Vec<Vec<MachineId>> = (0..n)
        .map(|j| {
            if !state.is_idle(j) {
                return Vec::new();
            }
            let op = state.next_op[j];
            inst.operation(j, op)
                .alternatives()
                .iter()
                .map(|&(m, _)| m)
                .filter(|&m| state.machine_free(m))
                .filter(|&m| mask.is_none_or(|mask| mask.allows(state, j, op, m)))
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    let mut current = vec![None; n];
    let mut used = vec![false; inst.machine_count()];
    enumerate(&options, 0, &mut current, &mut used, &mut out);
    // The depth-first product always ends with pure wait.
    out.pop();
    if !out.is_empty() && state.any_running() {
        out.push(Allocation::wait(n));
    }
    out
}

fn enumerate(
    options: &[Vec<MachineId>],
    job: usize,
    current: &mut Vec<Option<MachineId>>,
    used: &mut [bool],
    out: &mut Vec<Allocation>,
) {
    if job == options.len() {
        out.push(Allocation(current.clone()));
        return;
    }
    for &m in &options[job] {
        if used[m] {
            continue;
        }
        used[m] = true;
        current[job] = Some(m);
        enumerate(options, job + 1, current, used, out);
        used[m] = false;
    }
    current[job] = None;
    enumerate(options, job + 1, current, used, out);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: i64,
    pub done: bool,
    pub clock: Time,
}

/// An episode over one instance. Owns its state; cheap to clone for search.
#[derive(Clone)]
pub struct Env<'a> {
    inst: &'a Instance,
    mask: Option<&'a dyn AllocationMask>,
    state: EnvState,
    legal: Vec<Allocation>,
    record_trace: bool,
}

impl fmt::Debug for Env<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Env")
            .field("instance", &self.inst.name())
            .field("masked", &self.mask.is_some())
            .field("state", &self.state)
            .field("legal", &self.legal.len())
            .finish()
    }
}

impl<'a> Env<'a> {
    /// Environment in its initial state.
    pub fn new(inst: &'a Instance) -> Self {
        Self::build(inst, None).expect("an unmasked instance never deadlocks")
    }

    /// Environment whose legal allocations are filtered by `mask`.
    pub fn with_mask(inst: &'a Instance, mask: &'a dyn AllocationMask) -> Result<Self, EnvError> {
        Self::build(inst, Some(mask))
    }

    fn build(inst: &'a Instance, mask: Option<&'a dyn AllocationMask>) -> Result<Self, EnvError> {
        let mut env = Self {
            inst,
            mask,
            state: EnvState::initial(inst),
            legal: Vec::new(),
            record_trace: true,
        };
        env.reset()?;
        Ok(env)
    }

    /// Skip recording the per-step trace (the schedule is still recorded).
    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    /// Back to clock 0 with every job idle at its first operation.
    pub fn reset(&mut self) -> Result<Observation, EnvError> {
        self.state = EnvState::initial(self.inst);
        self.settle()?;
        Ok(self.state.observation())
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn observation(&self) -> Observation {
        self.state.observation()
    }

    pub fn legal_allocations(&self) -> &[Allocation] {
        &self.legal
    }

    pub fn is_done(&self) -> bool {
        self.state.all_finished()
    }

    /// Sum of rewards so far, i.e. minus the current clock.
    pub fn cumulative_reward(&self) -> i64 {
        -(self.state.clock as i64)
    }

    /// Applies legal allocation `action`, then skips forward to the next
    /// state with a non-wait allocation (or the end of the episode).
    pub fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.is_done() {
            return Err(EnvError::Terminal);
        }
        let Some(allocation) = self.legal.get(action).cloned() else {
            return Err(EnvError::ActionOutOfRange {
                action,
                len: self.legal.len(),
            });
        };
        let before = self.state.clock;
        let observation = self.record_trace.then(|| self.state.observation());

        for (job, machine) in allocation.assignments() {
            self.state.assign(self.inst, job, machine);
        }
        if allocation.is_pure_wait() {
            self.state.advance();
        }
        self.settle()?;

        let reward = before as i64 - self.state.clock as i64;
        if let Some(observation) = observation {
            self.state.trace.push(TraceStep {
                observation,
                action,
                allocation,
                clock: before,
                reward,
            });
        }
        Ok(StepResult {
            observation: self.state.observation(),
            reward,
            done: self.is_done(),
            clock: self.state.clock,
        })
    }

    /// Advances through states that only admit pure wait.
    fn settle(&mut self) -> Result<(), EnvError> {
        loop {
            self.legal = legal_allocations(self.inst, &self.state, self.mask);
            if !self.legal.is_empty() || self.state.all_finished() {
                return Ok(());
            }
            if !self.state.any_running() {
                return Err(EnvError::Deadlock {
                    clock: self.state.clock,
                });
            }
            self.state.advance();
        }
    }

    /// The schedule of a finished episode.
    pub fn extract_schedule(&self) -> Result<Schedule, EnvError> {
        if !self.is_done() {
            return Err(EnvError::NotTerminal);
        }
        Ok(Schedule::new(self.state.entries.clone()))
    }

    /// Index of `allocation` in the current legal list.
    pub fn action_of(&self, allocation: &Allocation) -> Option<usize> {
        self.legal.iter().position(|a| a == allocation)
    }
}
