//! Reference solvers: random sampling, the FIFO and MWKR dispatching rules,
//! a genetic algorithm over operation-based chromosomes, and an exhaustive
//! branch-and-bound search that is optimal over the environment's action
//! space.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{Allocation, Env, EnvError, EnvState};
use crate::instance::{DurationEstimate, Instance, JobId, Time};
use crate::schedule::{Schedule, ScheduleEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    /// Episodes of random sampling.
    pub episodes: usize,
    pub seed: u64,
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// The GA stops after this many generations without improvement.
    pub stagnation: usize,
    /// Search nodes the oracle may expand before giving up.
    pub node_budget: u64,
    /// Per-operation duration used by MWKR's remaining work.
    pub remaining_work: DurationEstimate,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            seed: 0,
            population: 50,
            generations: 200,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            stagnation: 50,
            node_budget: 5_000_000,
            remaining_work: DurationEstimate::Mean,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if self.episodes == 0 || self.population == 0 || self.generations == 0 {
            return Err(BaselineError::Config("counts must be positive"));
        }
        if self.stagnation == 0 || self.node_budget == 0 {
            return Err(BaselineError::Config(
                "stagnation and node budget must be positive",
            ));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.crossover_rate) || !unit(self.mutation_rate) {
            return Err(BaselineError::Config("rates must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("invalid baseline configuration: {0}")]
    Config(&'static str),
    #[error("search expanded {nodes} nodes without finishing")]
    BudgetExceeded { nodes: u64 },
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn makespan(s: &Schedule) -> Time {
    s.makespan().unwrap_or(0)
}

/// Best of `cfg.episodes` episodes of uniformly random legal actions.
pub fn random_sampling(inst: &Instance, cfg: &BaselineConfig) -> Result<Schedule, BaselineError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut env = Env::new(inst).without_trace();
    let mut best: Option<Schedule> = None;
    for _ in 0..cfg.episodes {
        env.reset()?;
        while !env.is_done() {
            let a = rng.gen_range(0..env.legal_allocations().len());
            env.step(a)?;
        }
        let s = env.extract_schedule()?;
        if best.as_ref().is_none_or(|b| makespan(&s) < makespan(b)) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one episode"))
}

/// Runs a non-delay dispatching rule: at every decision state the idle jobs
/// are taken in descending `priority` (lower job id first on ties) and each
/// gets its fastest free machine (lower machine id first on ties).
fn dispatch<F>(inst: &Instance, mut priority: F) -> Result<Schedule, EnvError>
where
    F: FnMut(&EnvState, JobId) -> f64,
{
    let mut env = Env::new(inst).without_trace();
    while !env.is_done() {
        let state = env.state();
        let mut jobs: Vec<(f64, JobId)> = (0..inst.job_count())
            .filter(|&j| state.is_idle(j))
            .map(|j| (priority(state, j), j))
            .collect();
        jobs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut used = vec![false; inst.machine_count()];
        let mut allocation = Allocation::wait(inst.job_count());
        for (_, j) in jobs {
            let op = inst.operation(j, state.current_op(j));
            let choice = op
                .alternatives()
                .iter()
                .filter(|&&(m, _)| state.machine_free(m) && !used[m])
                .min_by_key(|&&(m, d)| (d, m));
            if let Some(&(m, _)) = choice {
                used[m] = true;
                allocation.0[j] = Some(m);
            }
        }
        let action = env
            .action_of(&allocation)
            .expect("a greedy allocation of a decision state is legal");
        env.step(action)?;
    }
    env.extract_schedule()
}

/// First in, first out: the job idle the longest goes first.
pub fn fifo(inst: &Instance) -> Result<Schedule, BaselineError> {
    Ok(dispatch(inst, |state, j| {
        (state.clock() - state.ready_at(j)) as f64
    })?)
}

/// Most work remaining, with remaining work estimated by `estimate`.
pub fn mwkr(inst: &Instance, estimate: DurationEstimate) -> Result<Schedule, BaselineError> {
    let work = inst.estimated_durations(estimate);
    Ok(dispatch(inst, |state, j| {
        work[j][state.current_op(j)..].iter().sum()
    })?)
}

/// Decodes an operation-based chromosome: the k-th occurrence of job `j`
/// is operation k of `j`, placed after everything already on its machine
/// on the machine that finishes it earliest.
pub fn decode(inst: &Instance, chromosome: &[JobId]) -> Schedule {
    let mut next_op = vec![0usize; inst.job_count()];
    let mut job_ready: Vec<Time> = vec![0; inst.job_count()];
    let mut machine_ready: Vec<Time> = vec![0; inst.machine_count()];
    let mut entries = Vec::with_capacity(chromosome.len());
    for &j in chromosome {
        let op = next_op[j];
        let (machine, start, end) = inst
            .operation(j, op)
            .alternatives()
            .iter()
            .map(|&(m, d)| {
                let start = job_ready[j].max(machine_ready[m]);
                (m, start, start + d)
            })
            .min_by_key(|&(m, _, end)| (end, m))
            .expect("operations have alternatives");
        entries.push(ScheduleEntry {
            job: j,
            op,
            machine,
            start,
            end,
        });
        next_op[j] += 1;
        job_ready[j] = end;
        machine_ready[machine] = end;
    }
    Schedule::new(entries)
}

/// Precedence-preserving order crossover: genes of a random job subset keep
/// their positions from `a`, the rest are filled in the order of `b`.
fn pox<R: Rng>(a: &[JobId], b: &[JobId], jobs: usize, rng: &mut R) -> Vec<JobId> {
    let keep: Vec<bool> = (0..jobs).map(|_| rng.gen_bool(0.5)).collect();
    let mut fill = b.iter().filter(|&&j| !keep[j]);
    a.iter()
        .map(|&j| {
            if keep[j] {
                j
            } else {
                *fill.next().expect("both parents hold the same genes")
            }
        })
        .collect()
}

fn tournament<'p, R: Rng>(pop: &'p [(Time, Vec<JobId>)], rng: &mut R) -> &'p [JobId] {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if b.0 < a.0 {
        &b.1
    } else {
        &a.1
    }
}

/// Genetic algorithm with operation-based encoding, POX crossover, swap
/// mutation, binary tournament selection and elitist (mu + lambda)
/// survival.
pub fn genetic(inst: &Instance, cfg: &BaselineConfig) -> Result<Schedule, BaselineError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let genes: Vec<JobId> = inst
        .jobs()
        .iter()
        .enumerate()
        .flat_map(|(j, job)| core::iter::repeat_n(j, job.len()))
        .collect();
    let fitness = |c: &[JobId]| makespan(&decode(inst, c));

    let mut pop: Vec<(Time, Vec<JobId>)> = (0..cfg.population)
        .map(|_| {
            let mut c = genes.clone();
            c.shuffle(&mut rng);
            (fitness(&c), c)
        })
        .collect();
    pop.sort_by_key(|p| p.0);

    let mut stale = 0;
    for _ in 0..cfg.generations {
        let best = pop[0].0;
        let mut offspring = Vec::with_capacity(cfg.population);
        for _ in 0..cfg.population {
            let a = tournament(&pop, &mut rng);
            let mut child = if rng.gen_bool(cfg.crossover_rate) {
                let b = tournament(&pop, &mut rng);
                pox(a, b, inst.job_count(), &mut rng)
            } else {
                a.to_vec()
            };
            if child.len() > 1 && rng.gen_bool(cfg.mutation_rate) {
                let i = rng.gen_range(0..child.len());
                let k = rng.gen_range(0..child.len());
                child.swap(i, k);
            }
            offspring.push((fitness(&child), child));
        }
        pop.extend(offspring);
        pop.sort_by_key(|p| p.0);
        pop.truncate(cfg.population);
        if pop[0].0 < best {
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.stagnation {
                break;
            }
        }
    }
    Ok(decode(inst, &pop[0].1))
}

/// Makespan lower bound of any completion of `state`: the longest remaining
/// job chain at fastest durations, and the remaining fastest work spread
/// evenly over all machines.
fn lower_bound(inst: &Instance, state: &EnvState) -> Time {
    let mut work: u64 = 0;
    for j in 0..inst.job_count() {
        let mut from = state.current_op(j);
        if let Some(r) = state.running(j) {
            work += r.remaining as u64;
            from += 1;
        }
        let ops = &inst.job(j).operations;
        work += ops[from.min(ops.len())..]
            .iter()
            .map(|o| o.min_duration() as u64)
            .sum::<u64>();
    }
    let m = inst.machine_count() as u64;
    let spread = state.clock() + work.div_ceil(m) as Time;
    state.remaining_work_bound(inst).max(spread)
}

struct Search<'a> {
    inst: &'a Instance,
    best: Schedule,
    best_makespan: Time,
    seen: HashSet<Vec<u32>>,
    nodes: u64,
    budget: u64,
}

impl<'a> Search<'a> {
    fn visit(&mut self, env: &Env<'a>) -> Result<(), BaselineError> {
        if env.is_done() {
            let s = env.extract_schedule()?;
            if makespan(&s) < self.best_makespan {
                self.best_makespan = makespan(&s);
                self.best = s;
            }
            return Ok(());
        }
        if lower_bound(self.inst, env.state()) >= self.best_makespan {
            return Ok(());
        }
        if !self.seen.insert(env.state().signature()) {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(BaselineError::BudgetExceeded { nodes: self.nodes });
        }
        for a in 0..env.legal_allocations().len() {
            let mut child = env.clone();
            child.step(a)?;
            self.visit(&child)?;
        }
        Ok(())
    }
}

/// Optimal schedule over every legal-allocation sequence of the
/// environment, by depth-first branch and bound seeded with the better of
/// FIFO and MWKR. Fails once `cfg.node_budget` states have been expanded.
pub fn exhaustive_oracle(inst: &Instance, cfg: &BaselineConfig) -> Result<Schedule, BaselineError> {
    cfg.validate()?;
    let a = fifo(inst)?;
    let b = mwkr(inst, DurationEstimate::Mean)?;
    let seed = if makespan(&b) < makespan(&a) { b } else { a };
    let mut search = Search {
        inst,
        best_makespan: makespan(&seed),
        best: seed,
        seen: HashSet::new(),
        nodes: 0,
        budget: cfg.node_budget,
    };
    let env = Env::new(inst).without_trace();
    search.visit(&env)?;
    Ok(search.best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{JobSpec, MachineId, OperationSpec};
    use crate::samples;
    use crate::schedule::validate_schedule;

    fn machine_of(s: &Schedule, job: JobId, op: usize) -> Option<MachineId> {
        s.entries()
            .iter()
            .find(|e| e.job == job && e.op == op)
            .map(|e| e.machine)
    }

    fn single() -> Instance {
        Instance::new(
            "1x1",
            1,
            vec![JobSpec::new(vec![OperationSpec::new(vec![(0, 5)])])],
        )
        .unwrap()
    }

    fn serial() -> Instance {
        let op = |d| JobSpec::new(vec![OperationSpec::new(vec![(0, d)])]);
        Instance::new("serial", 1, vec![op(3), op(4)]).unwrap()
    }

    #[test]
    fn single_operation_everywhere() {
        let inst = single();
        let cfg = BaselineConfig {
            episodes: 3,
            ..BaselineConfig::default()
        };
        for s in [
            random_sampling(&inst, &cfg).unwrap(),
            fifo(&inst).unwrap(),
            mwkr(&inst, DurationEstimate::Mean).unwrap(),
            genetic(&inst, &cfg).unwrap(),
            exhaustive_oracle(&inst, &cfg).unwrap(),
        ] {
            assert_eq!(s.makespan(), Ok(5));
        }
    }

    #[test]
    fn oracle_on_serial_jobs() {
        let s = exhaustive_oracle(&serial(), &BaselineConfig::default()).unwrap();
        assert_eq!(s.makespan(), Ok(7));
    }

    #[test]
    fn oracle_finds_toy_optimum() {
        let s = exhaustive_oracle(&samples::toy(), &BaselineConfig::default()).unwrap();
        assert_eq!(s.makespan(), Ok(53));
    }

    #[test]
    fn oracle_budget() {
        let cfg = BaselineConfig {
            node_budget: 100,
            ..BaselineConfig::default()
        };
        assert!(matches!(
            exhaustive_oracle(&samples::la05(), &cfg),
            Err(BaselineError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn fifo_breaks_ties_by_job_id() {
        let s = fifo(&serial()).unwrap();
        let first = s.entries().iter().min_by_key(|e| e.start).unwrap();
        assert_eq!((first.job, first.start), (0, 0));
        assert_eq!(s, fifo(&serial()).unwrap());
    }

    #[test]
    fn mwkr_prefers_more_remaining_work() {
        let op = |d| OperationSpec::new(vec![(0, d)]);
        let inst = Instance::new(
            "mwkr",
            1,
            vec![
                JobSpec::new(vec![op(20)]),
                JobSpec::new(vec![op(10), op(20)]),
            ],
        )
        .unwrap();
        let s = mwkr(&inst, DurationEstimate::Mean).unwrap();
        assert_eq!(machine_of(&s, 1, 0), Some(0));
        let first = s.entries().iter().min_by_key(|e| e.start).unwrap();
        assert_eq!(first.job, 1);
    }

    #[test]
    fn degenerate_ga_returns_initial_chromosome() {
        let inst = samples::toy();
        let cfg = BaselineConfig {
            population: 1,
            crossover_rate: 0.0,
            mutation_rate: 0.0,
            seed: 9,
            ..BaselineConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = vec![0, 0, 1, 1, 1];
        c.shuffle(&mut rng);
        assert_eq!(genetic(&inst, &cfg).unwrap(), decode(&inst, &c));
    }

    #[test]
    fn baselines_are_valid_and_bounded_by_the_oracle() {
        for inst in [samples::toy(), samples::ft06()] {
            let cfg = BaselineConfig {
                episodes: 500,
                generations: 30,
                ..BaselineConfig::default()
            };
            let mut all = vec![
                random_sampling(&inst, &cfg).unwrap(),
                fifo(&inst).unwrap(),
                mwkr(&inst, DurationEstimate::Mean).unwrap(),
                mwkr(&inst, DurationEstimate::Max).unwrap(),
                genetic(&inst, &cfg).unwrap(),
            ];
            if inst.job_count() == 2 {
                let opt = exhaustive_oracle(&inst, &cfg).unwrap();
                for s in &all {
                    assert!(s.makespan().unwrap() >= opt.makespan().unwrap());
                }
                all.push(opt);
            }
            for s in &all {
                assert!(validate_schedule(&inst, s).is_ok());
            }
        }
    }

    #[test]
    fn seeded_solvers_are_deterministic() {
        let inst = samples::toy();
        let cfg = BaselineConfig {
            episodes: 200,
            generations: 20,
            seed: 4,
            ..BaselineConfig::default()
        };
        assert_eq!(random_sampling(&inst, &cfg), random_sampling(&inst, &cfg));
        assert_eq!(genetic(&inst, &cfg), genetic(&inst, &cfg));
    }
}
