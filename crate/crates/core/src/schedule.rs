//! Schedules, makespan, and constraint validation.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::instance::{Instance, JobId, MachineId, Time};

/// One processed operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScheduleEntry {
    pub job: JobId,
    pub op: usize,
    pub machine: MachineId,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("schedule has no entries")]
    Empty,
}

/// A list of schedule entries. Entry order carries no meaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut Vec<ScheduleEntry> {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<ScheduleEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Latest end time over all entries.
    pub fn makespan(&self) -> Result<Time, ScheduleError> {
        self.entries
            .iter()
            .map(|e| e.end)
            .max()
            .ok_or(ScheduleError::Empty)
    }

    /// Entries sorted by `(job, op)`, the canonical serialization order.
    pub fn sorted(&self) -> Self {
        let mut entries = self.entries.clone();
        entries.sort_by_key(|e| (e.job, e.op, e.start, e.machine));
        Self { entries }
    }

    /// Entries of `machine` ordered by start time.
    pub fn machine_sequence(&self, machine: MachineId) -> Vec<ScheduleEntry> {
        let mut seq: Vec<_> = self
            .entries
            .iter()
            .copied()
            .filter(|e| e.machine == machine)
            .collect();
        seq.sort_by_key(|e| (e.start, e.end, e.job));
        seq
    }
}

/// Constraint classes checked by [`validate_schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    /// Two operations of the same job overlap in time.
    JobOverlap,
    /// Two operations overlap on one machine.
    MachineOverlap,
    /// An operation is split into several pieces.
    Interrupted,
    /// A later operation of a job starts no later than an earlier one.
    Precedence,
    /// An operation of the instance is not scheduled.
    Incomplete,
    /// The machine cannot execute the operation.
    Capability,
    /// `end - start` differs from the machine's processing time.
    Duration,
    /// The entry names a job or operation the instance does not have.
    UnknownOperation,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::JobOverlap => "job-overlap",
            ViolationKind::MachineOverlap => "machine-overlap",
            ViolationKind::Interrupted => "interrupted",
            ViolationKind::Precedence => "precedence",
            ViolationKind::Incomplete => "incomplete",
            ViolationKind::Capability => "capability",
            ViolationKind::Duration => "duration",
            ViolationKind::UnknownOperation => "unknown-operation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Violation {
    pub kind: ViolationKind,
    pub job: JobId,
    pub op: usize,
    /// Second party of overlap and ordering violations.
    pub other: Option<(JobId, usize)>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: job {} op {}", self.kind.label(), self.job, self.op)?;
        if let Some((j, o)) = self.other {
            write!(f, " vs job {j} op {o}")?;
        }
        Ok(())
    }
}

/// Outcome of [`validate_schedule`]; empty means valid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct violation classes, sorted.
    pub fn kinds(&self) -> Vec<ViolationKind> {
        let mut kinds: Vec<_> = self.violations.iter().map(|v| v.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

fn overlaps(a: &ScheduleEntry, b: &ScheduleEntry) -> bool {
    a.start < b.end && b.start < a.end
}

/// Checks `sched` against the job-shop rules: no same-job overlap, no machine
/// overlap, one uninterrupted interval per operation, operations of a job
/// started in their predefined order, every operation scheduled, and the
/// machine/duration of each entry consistent with the instance. Idle time is
/// allowed and never reported.
pub fn validate_schedule(inst: &Instance, sched: &Schedule) -> ValidationReport {
    fn violation(
        kind: ViolationKind,
        e: &ScheduleEntry,
        other: Option<&ScheduleEntry>,
    ) -> Violation {
        Violation {
            kind,
            job: e.job,
            op: e.op,
            other: other.map(|o| (o.job, o.op)),
        }
    }

    let mut violations = Vec::new();
    let mut known = Vec::with_capacity(sched.len());
    for e in sched.entries() {
        if e.job >= inst.job_count() || e.op >= inst.job(e.job).len() {
            violations.push(violation(ViolationKind::UnknownOperation, e, None));
        } else if e.end <= e.start {
            violations.push(violation(ViolationKind::Duration, e, None));
        } else {
            known.push(*e);
        }
    }

    // Pieces per (job, op). A split operation is one interruption; its piece
    // lengths are summed for the duration check.
    let mut pieces: Vec<Vec<Vec<ScheduleEntry>>> = inst
        .jobs()
        .iter()
        .map(|j| alloc::vec![Vec::new(); j.len()])
        .collect();
    for e in &known {
        pieces[e.job][e.op].push(*e);
    }
    for (j, ops) in pieces.iter().enumerate() {
        for (o, parts) in ops.iter().enumerate() {
            let Some(first) = parts.first() else {
                violations.push(Violation {
                    kind: ViolationKind::Incomplete,
                    job: j,
                    op: o,
                    other: None,
                });
                continue;
            };
            if parts.len() > 1 {
                violations.push(violation(ViolationKind::Interrupted, &parts[1], None));
            }
            let spec = inst.operation(j, o);
            let mut capable = true;
            for p in parts {
                if spec.duration_on(p.machine).is_none() {
                    violations.push(violation(ViolationKind::Capability, p, None));
                    capable = false;
                }
            }
            if capable {
                let processed: Time = parts.iter().map(|p| p.end - p.start).sum();
                if spec.duration_on(first.machine) != Some(processed) {
                    violations.push(violation(ViolationKind::Duration, first, None));
                }
            }
        }
    }

    for (i, a) in known.iter().enumerate() {
        for b in &known[i + 1..] {
            if a.job == b.job {
                if a.op == b.op {
                    continue;
                }
                if overlaps(a, b) {
                    violations.push(violation(ViolationKind::JobOverlap, a, Some(b)));
                }
                let (first, second) = if a.op < b.op { (a, b) } else { (b, a) };
                if second.start <= first.start {
                    violations.push(violation(ViolationKind::Precedence, first, Some(second)));
                }
            } else if a.machine == b.machine && overlaps(a, b) {
                violations.push(violation(ViolationKind::MachineOverlap, a, Some(b)));
            }
        }
    }

    ValidationReport { violations }
}
