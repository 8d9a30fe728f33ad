//! Flexible job-shop instances.
//!
//! An [`Instance`] is a list of jobs, each an ordered chain of operations, and
//! each operation a set of `(machine, duration)` alternatives. Machine ids are
//! 0-based everywhere inside the crate.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// 0-based machine index.
pub type MachineId = usize;
/// 0-based job index.
pub type JobId = usize;
/// Discrete timestep.
pub type Time = u32;

/// Reasons an instance fails validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("instance has no jobs")]
    NoJobs,
    #[error("instance has no machines")]
    NoMachines,
    #[error("job {job} has no operations")]
    EmptyJob { job: JobId },
    #[error("job {job} operation {op} has no machine alternatives")]
    NoAlternatives { job: JobId, op: usize },
    #[error(
        "job {job} operation {op}: machine {machine} out of range (machine count {machine_count})"
    )]
    MachineOutOfRange {
        job: JobId,
        op: usize,
        machine: MachineId,
        machine_count: usize,
    },
    #[error("job {job} operation {op}: machine {machine} listed twice")]
    DuplicateMachine {
        job: JobId,
        op: usize,
        machine: MachineId,
    },
    #[error("job {job} operation {op}: duration must be positive")]
    ZeroDuration { job: JobId, op: usize },
}

/// The machine alternatives of one operation, kept sorted by machine id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperationSpec {
    alternatives: Vec<(MachineId, Time)>,
}

impl OperationSpec {
    /// Builds an operation from `(machine, duration)` pairs in any order.
    pub fn new(mut alternatives: Vec<(MachineId, Time)>) -> Self {
        alternatives.sort_by_key(|&(m, _)| m);
        Self { alternatives }
    }

    /// Alternatives in ascending machine order.
    pub fn alternatives(&self) -> &[(MachineId, Time)] {
        &self.alternatives
    }

    /// Processing time on `machine`, or `None` if the machine cannot run it.
    pub fn duration_on(&self, machine: MachineId) -> Option<Time> {
        self.alternatives
            .binary_search_by_key(&machine, |&(m, _)| m)
            .ok()
            .map(|i| self.alternatives[i].1)
    }

    pub fn min_duration(&self) -> Time {
        self.alternatives.iter().map(|&(_, d)| d).min().unwrap_or(0)
    }

    pub fn max_duration(&self) -> Time {
        self.alternatives.iter().map(|&(_, d)| d).max().unwrap_or(0)
    }

    pub fn mean_duration(&self) -> f64 {
        if self.alternatives.is_empty() {
            return 0.0;
        }
        let total: u64 = self.alternatives.iter().map(|&(_, d)| d as u64).sum();
        total as f64 / self.alternatives.len() as f64
    }
}

/// An ordered chain of operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct JobSpec {
    pub operations: Vec<OperationSpec>,
}

impl JobSpec {
    pub fn new(operations: Vec<OperationSpec>) -> Self {
        Self { operations }
    }

    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }
}

/// How a single duration is derived from an operation's alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DurationEstimate {
    #[default]
    Mean,
    Min,
    Max,
}

impl DurationEstimate {
    pub fn of(self, op: &OperationSpec) -> f64 {
        match self {
            DurationEstimate::Mean => op.mean_duration(),
            DurationEstimate::Min => op.min_duration() as f64,
            DurationEstimate::Max => op.max_duration() as f64,
        }
    }
}

/// A flexible job-shop instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    name: String,
    machine_count: usize,
    jobs: Vec<JobSpec>,
}

impl Instance {
    /// Validates and builds an instance. Every job must have at least one
    /// operation.
    pub fn new(
        name: impl Into<String>,
        machine_count: usize,
        jobs: Vec<JobSpec>,
    ) -> Result<Self, InstanceError> {
        let inst = Self::with_empty_jobs(name, machine_count, jobs)?;
        if let Some(job) = inst.jobs.iter().position(JobSpec::is_empty) {
            return Err(InstanceError::EmptyJob { job });
        }
        Ok(inst)
    }

    /// Like [`Instance::new`] but admits zero-operation jobs. Sub-instances
    /// produced by instance division use this so job indices stay stable.
    pub fn with_empty_jobs(
        name: impl Into<String>,
        machine_count: usize,
        jobs: Vec<JobSpec>,
    ) -> Result<Self, InstanceError> {
        if jobs.is_empty() {
            return Err(InstanceError::NoJobs);
        }
        if machine_count == 0 {
            return Err(InstanceError::NoMachines);
        }
        for (j, job) in jobs.iter().enumerate() {
            for (o, op) in job.operations.iter().enumerate() {
                if op.alternatives.is_empty() {
                    return Err(InstanceError::NoAlternatives { job: j, op: o });
                }
                for (i, &(m, d)) in op.alternatives.iter().enumerate() {
                    if m >= machine_count {
                        return Err(InstanceError::MachineOutOfRange {
                            job: j,
                            op: o,
                            machine: m,
                            machine_count,
                        });
                    }
                    if i > 0 && op.alternatives[i - 1].0 == m {
                        return Err(InstanceError::DuplicateMachine {
                            job: j,
                            op: o,
                            machine: m,
                        });
                    }
                    if d == 0 {
                        return Err(InstanceError::ZeroDuration { job: j, op: o });
                    }
                }
            }
        }
        Ok(Self {
            name: name.into(),
            machine_count,
            jobs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    pub fn machine_count(&self) -> usize {
        self.machine_count
    }

    pub fn jobs(&self) -> &[JobSpec] {
        &self.jobs
    }

    pub fn job(&self, job: JobId) -> &JobSpec {
        &self.jobs[job]
    }

    pub fn operation(&self, job: JobId, op: usize) -> &OperationSpec {
        &self.jobs[job].operations[op]
    }

    pub fn total_operations(&self) -> usize {
        self.jobs.iter().map(JobSpec::len).sum()
    }

    pub fn max_operations(&self) -> usize {
        self.jobs.iter().map(JobSpec::len).max().unwrap_or(0)
    }

    /// Arithmetic mean of the alternative durations of every operation,
    /// shaped `[job][op]`.
    pub fn mean_durations(&self) -> Vec<Vec<f64>> {
        self.estimated_durations(DurationEstimate::Mean)
    }

    pub fn estimated_durations(&self, estimate: DurationEstimate) -> Vec<Vec<f64>> {
        self.jobs
            .iter()
            .map(|job| job.operations.iter().map(|op| estimate.of(op)).collect())
            .collect()
    }
}
