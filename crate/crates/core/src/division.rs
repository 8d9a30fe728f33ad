//! Instance division: split every job into contiguous segments, solve the
//! first segment, then repeatedly extend the instance by the next segment
//! while holding the operations already solved to their machines and to
//! their relative order on each machine. Start times stay free, so new
//! operations can interleave with the fixed ones.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::env::{Allocation, AllocationMask, EnvError, EnvState};
use crate::instance::{DurationEstimate, Instance, JobId, JobSpec, MachineId};
use crate::qlearning::{LearnError, Learner, LearnerConfig};
use crate::schedule::{validate_schedule, Schedule};
use crate::stopwatch::Stopwatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitStrategy {
    /// Segments with equal operation counts; earlier segments take the
    /// remainder.
    #[default]
    ByOpCount,
    /// Segments by expected start time: with `T` the longest expected job
    /// length, an operation expected to start at `s` goes to segment
    /// `floor(s * parts / T)`.
    ByDuration(DurationEstimate),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DivisionError {
    #[error("cannot split into {parts} parts (allowed 2..={max})")]
    PartsOutOfRange { parts: usize, max: usize },
    #[error("stage {stage} out of range 1..={parts}")]
    StageOutOfRange { stage: usize, parts: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("divided solve produced an invalid schedule")]
    InvalidSchedule,
}

/// Per-job cut points of a split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub parts: usize,
    /// `boundaries[j]` has `parts + 1` non-decreasing entries from 0 to the
    /// job's operation count; segment `k` holds operations
    /// `boundaries[j][k]..boundaries[j][k + 1]`.
    pub boundaries: Vec<Vec<usize>>,
    source: Instance,
}

impl SplitPlan {
    pub fn source(&self) -> &Instance {
        &self.source
    }

    fn slice(&self, from: usize, to: usize, suffix: &str) -> Instance {
        let jobs = self
            .source
            .jobs()
            .iter()
            .zip(&self.boundaries)
            .map(|(job, cuts)| JobSpec::new(job.operations[cuts[from]..cuts[to]].to_vec()))
            .collect();
        let name = alloc::format!("{}{}", self.source.name(), suffix);
        Instance::with_empty_jobs(name, self.source.machine_count(), jobs)
            .expect("segments of a valid instance are valid")
    }

    /// Segment `k` (0-based) as a sub-instance; jobs without operations in
    /// the segment are kept as empty jobs.
    pub fn segment(&self, k: usize) -> Result<Instance, DivisionError> {
        if k >= self.parts {
            return Err(DivisionError::StageOutOfRange {
                stage: k + 1,
                parts: self.parts,
            });
        }
        Ok(self.slice(k, k + 1, &alloc::format!("#{}", k + 1)))
    }

    /// Segments `1..=upto` concatenated per job.
    pub fn combine(&self, upto: usize) -> Result<Instance, DivisionError> {
        if upto == 0 || upto > self.parts {
            return Err(DivisionError::StageOutOfRange {
                stage: upto,
                parts: self.parts,
            });
        }
        if upto == self.parts {
            return Ok(self.source.clone());
        }
        Ok(self.slice(0, upto, &alloc::format!("#1-{upto}")))
    }
}

fn op_count_cuts(len: usize, parts: usize) -> Vec<usize> {
    let (base, extra) = (len / parts, len % parts);
    let mut cuts = vec![0];
    let mut at = 0;
    for k in 0..parts {
        at += base + usize::from(k < extra);
        cuts.push(at);
    }
    cuts
}

fn duration_cuts(estimates: &[Vec<f64>], parts: usize) -> Vec<Vec<usize>> {
    let longest = estimates
        .iter()
        .map(|ops| ops.iter().sum::<f64>())
        .fold(0.0, f64::max);
    estimates
        .iter()
        .map(|ops| {
            let mut segment_of = Vec::with_capacity(ops.len());
            let mut start = 0.0;
            for d in ops {
                let k = (start * parts as f64 / longest) as usize;
                segment_of.push(k.min(parts - 1));
                start += d;
            }
            let mut cuts = vec![0; parts + 1];
            for k in 0..parts {
                cuts[k + 1] = segment_of.iter().filter(|&&s| s <= k).count();
            }
            cuts
        })
        .collect()
}

/// Splits `inst` into `parts` sub-instances.
pub fn split(
    inst: &Instance,
    strategy: SplitStrategy,
    parts: usize,
) -> Result<(Vec<Instance>, SplitPlan), DivisionError> {
    let max = inst.max_operations();
    if parts < 2 || parts > max {
        return Err(DivisionError::PartsOutOfRange { parts, max });
    }
    let boundaries = match strategy {
        SplitStrategy::ByOpCount => inst
            .jobs()
            .iter()
            .map(|j| op_count_cuts(j.len(), parts))
            .collect(),
        SplitStrategy::ByDuration(estimate) => {
            duration_cuts(&inst.estimated_durations(estimate), parts)
        }
    };
    let plan = SplitPlan {
        strategy,
        parts,
        boundaries,
        source: inst.clone(),
    };
    let segments = (0..parts)
        .map(|k| plan.segment(k))
        .collect::<Result<_, _>>()?;
    Ok((segments, plan))
}

/// Machine and per-machine order fixed for a prefix of every job.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyConstraint {
    /// `machines[j][o]`: required machine of operation `o` of job `j`.
    machines: Vec<Vec<MachineId>>,
    /// `position[j][o]`: index of the operation in its machine's sequence.
    position: Vec<Vec<usize>>,
    /// Constrained operations of every machine in processing order.
    sequences: Vec<Vec<(JobId, usize)>>,
}

impl PolicyConstraint {
    /// Constraint fixing every operation of `sched` to its machine and to
    /// its start-time order on that machine.
    pub fn from_schedule(inst: &Instance, sched: &Schedule) -> Self {
        let mut machines: Vec<Vec<MachineId>> =
            inst.jobs().iter().map(|j| vec![0; j.len()]).collect();
        let mut position: Vec<Vec<usize>> = inst.jobs().iter().map(|j| vec![0; j.len()]).collect();
        let mut sequences = Vec::with_capacity(inst.machine_count());
        for m in 0..inst.machine_count() {
            let seq: Vec<(JobId, usize)> = sched
                .machine_sequence(m)
                .iter()
                .map(|e| (e.job, e.op))
                .collect();
            for (i, &(j, o)) in seq.iter().enumerate() {
                machines[j][o] = m;
                position[j][o] = i;
            }
            sequences.push(seq);
        }
        Self {
            machines,
            position,
            sequences,
        }
    }

    /// Required machine of `(job, op)`, if constrained.
    pub fn machine(&self, job: JobId, op: usize) -> Option<MachineId> {
        self.machines.get(job).and_then(|ops| ops.get(op)).copied()
    }

    /// Number of constrained operations.
    pub fn len(&self) -> usize {
        self.machines.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Constrained operations of `machine` in their fixed order.
    pub fn sequence(&self, machine: MachineId) -> &[(JobId, usize)] {
        self.sequences.get(machine).map_or(&[], |s| &s[..])
    }

    /// Whether every constrained operation of `sched` runs on its required
    /// machine.
    pub fn machines_respected(&self, sched: &Schedule) -> bool {
        sched
            .entries()
            .iter()
            .all(|e| self.machine(e.job, e.op).is_none_or(|m| m == e.machine))
    }
}

impl AllocationMask for PolicyConstraint {
    fn allows(&self, state: &EnvState, job: JobId, op: usize, machine: MachineId) -> bool {
        let Some(required) = self.machine(job, op) else {
            return true;
        };
        required == machine
            && self.sequences[machine][..self.position[job][op]]
                .iter()
                .all(|&(j, o)| state.op_started(j, o))
    }
}

/// Result of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BestPolicy {
    /// Allocations of the best episode, in order.
    pub policy: Vec<Allocation>,
    /// Constraint over every operation of the stage's instance.
    pub constraint: PolicyConstraint,
    pub schedule: Schedule,
    /// The constraint deadlocked and the stage was re-solved without it.
    pub fell_back: bool,
}

/// Trains on `inst` restricted to allocations consistent with `prev`.
pub fn get_best_policy(
    inst: &Instance,
    prev: Option<&PolicyConstraint>,
    cfg: &LearnerConfig,
    watch: &dyn Stopwatch,
) -> Result<BestPolicy, DivisionError> {
    let mut learner = Learner::new(inst, cfg.clone())?;
    if let Some(mask) = prev {
        learner = learner.with_mask(mask);
    }
    let (report, fell_back) = match learner.train_with(watch) {
        Ok(report) => (report, false),
        Err(LearnError::Env(EnvError::Deadlock { clock })) => {
            log::warn!(
                "policy constraint deadlocks {} at t={clock}; solving without it",
                inst.name()
            );
            let report = Learner::new(inst, cfg.clone())?.train_with(watch)?;
            (report, true)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(BestPolicy {
        constraint: PolicyConstraint::from_schedule(inst, &report.best_schedule),
        policy: report.best_policy,
        schedule: report.best_schedule,
        fell_back,
    })
}

/// Outcome of [`solve_divided`].
#[derive(Debug, Clone, PartialEq)]
pub struct DividedSolution {
    pub plan: SplitPlan,
    /// One entry per stage; the last one covers the full instance.
    pub stages: Vec<BestPolicy>,
}

impl DividedSolution {
    pub fn schedule(&self) -> &Schedule {
        &self.stages.last().expect("at least two stages").schedule
    }
}

/// Solves `inst` stage by stage, each stage constrained by the best policy
/// of the previous one.
pub fn solve_divided(
    inst: &Instance,
    strategy: SplitStrategy,
    parts: usize,
    cfg: &LearnerConfig,
    watch: &dyn Stopwatch,
) -> Result<DividedSolution, DivisionError> {
    let (_, plan) = split(inst, strategy, parts)?;
    let mut stages: Vec<BestPolicy> = Vec::with_capacity(parts);
    for k in 1..=parts {
        let stage = plan.combine(k)?;
        let prev = stages.last().map(|s| &s.constraint);
        stages.push(get_best_policy(&stage, prev, cfg, watch)?);
    }
    let solution = DividedSolution { plan, stages };
    if !validate_schedule(inst, solution.schedule()).is_ok() {
        return Err(DivisionError::InvalidSchedule);
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::stopwatch::Frozen;

    fn op_counts(inst: &Instance) -> Vec<usize> {
        inst.jobs().iter().map(JobSpec::len).collect()
    }

    #[test]
    fn toy_split_by_op_count() {
        let inst = samples::toy();
        let (parts, plan) = split(&inst, SplitStrategy::ByOpCount, 2).unwrap();
        assert_eq!(op_counts(&parts[0]), vec![1, 2]);
        assert_eq!(op_counts(&parts[1]), vec![1, 1]);
        assert_eq!(parts[1].job(0).operations[0], inst.job(0).operations[1]);
        assert_eq!(parts[1].job(1).operations[0], inst.job(1).operations[2]);
        assert_eq!(plan.combine(1).unwrap().jobs(), parts[0].jobs());
    }

    #[test]
    fn toy_split_by_mean_duration() {
        let inst = samples::toy();
        let strategy = SplitStrategy::ByDuration(DurationEstimate::Mean);
        let (parts, plan) = split(&inst, strategy, 2).unwrap();
        assert_eq!(op_counts(&parts[0]), vec![2, 2]);
        assert_eq!(op_counts(&parts[1]), vec![0, 1]);
        assert_eq!(parts[1].job(1).operations[0], inst.job(1).operations[2]);
        assert_eq!(plan.combine(2).unwrap(), inst);
    }

    #[test]
    fn parts_out_of_range() {
        let inst = samples::toy();
        for parts in [0, 1, 4] {
            assert!(matches!(
                split(&inst, SplitStrategy::ByOpCount, parts),
                Err(DivisionError::PartsOutOfRange { .. })
            ));
        }
        let (_, plan) = split(&inst, SplitStrategy::ByOpCount, 3).unwrap();
        assert!(plan.combine(0).is_err());
        assert!(plan.combine(4).is_err());
    }

    #[test]
    fn segments_partition_every_job() {
        let inst = samples::la05();
        for strategy in [
            SplitStrategy::ByOpCount,
            SplitStrategy::ByDuration(DurationEstimate::Mean),
            SplitStrategy::ByDuration(DurationEstimate::Max),
        ] {
            for parts in 2..=5 {
                let (segments, plan) = split(&inst, strategy, parts).unwrap();
                for j in 0..inst.job_count() {
                    let joined: Vec<_> = segments
                        .iter()
                        .flat_map(|s| s.job(j).operations.iter().cloned())
                        .collect();
                    assert_eq!(joined, inst.job(j).operations);
                }
                assert_eq!(plan.combine(parts).unwrap(), inst);
            }
        }
    }

    #[test]
    fn constraint_masks_machine_and_order() {
        let inst = samples::toy();
        // job 1 op 0 on M0 first, then job 0 op 0 on M0
        let sched = Schedule::new(vec![
            crate::ScheduleEntry {
                job: 1,
                op: 0,
                machine: 0,
                start: 0,
                end: 20,
            },
            crate::ScheduleEntry {
                job: 0,
                op: 0,
                machine: 0,
                start: 20,
                end: 30,
            },
        ]);
        let c = PolicyConstraint::from_schedule(&inst, &sched);
        assert_eq!(c.sequence(0), &[(1, 0), (0, 0)]);
        let env = crate::Env::with_mask(&inst, &c).unwrap();
        // job 0 must wait for job 1 to start on M0
        assert_eq!(env.legal_allocations(), &[Allocation(vec![None, Some(0)])]);
    }

    #[test]
    fn divided_toy_keeps_stage_one_machines() {
        let inst = samples::toy();
        let cfg = LearnerConfig {
            episodes: 300,
            seed: 3,
            ..LearnerConfig::default()
        };
        for strategy in [
            SplitStrategy::ByOpCount,
            SplitStrategy::ByDuration(DurationEstimate::Mean),
        ] {
            let sol = solve_divided(&inst, strategy, 2, &cfg, &Frozen).unwrap();
            assert!(validate_schedule(&inst, sol.schedule()).is_ok());
            assert!(sol.stages[0].constraint.machines_respected(sol.schedule()));
            assert!(!sol.stages[1].fell_back);
            assert!(sol.schedule().makespan().unwrap() >= 53);
        }
    }

    #[test]
    fn single_operation_stages() {
        use crate::instance::OperationSpec;
        let inst = Instance::new(
            "chain",
            1,
            vec![JobSpec::new(vec![
                OperationSpec::new(vec![(0, 2)]),
                OperationSpec::new(vec![(0, 3)]),
            ])],
        )
        .unwrap();
        let cfg = LearnerConfig {
            episodes: 5,
            ..LearnerConfig::default()
        };
        let sol = solve_divided(&inst, SplitStrategy::ByOpCount, 2, &cfg, &Frozen).unwrap();
        assert_eq!(sol.schedule().makespan(), Ok(5));
    }
}
