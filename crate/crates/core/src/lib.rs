//! Flexible job-shop scheduling as a deterministic reinforcement-learning
//! environment, with a heuristic-guided tabular Q-learning solver, an
//! instance-division solver, dispatching-rule, sampling and genetic baselines,
//! and an exhaustive branch-and-bound oracle for tiny instances.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; the only thing `std` adds is a wall-clock [`stopwatch`].
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baselines;
pub mod division;
pub mod env;
pub mod instance;
pub mod prepopulate;
pub mod qlearning;
pub mod qtable;
pub mod samples;
pub mod schedule;
pub mod stopwatch;

pub use env::{legal_allocations, Allocation, Env, EnvError, EnvState, Observation, StepResult};
pub use instance::{Instance, InstanceError, JobId, JobSpec, MachineId, OperationSpec, Time};
pub use qlearning::{greedy_rollout, train, LearnerConfig, TrainingReport};
pub use qtable::QTable;
pub use schedule::{validate_schedule, Schedule, ScheduleEntry, ValidationReport, ViolationKind};
