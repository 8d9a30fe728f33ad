//! Running solvers on instances and tabulating the results.

use fjsched_core::baselines::{self, BaselineConfig};
use fjsched_core::division::{solve_divided, SplitStrategy};
use fjsched_core::qlearning::Learner;
use fjsched_core::stopwatch::Wall;
use fjsched_core::{validate_schedule, Instance, LearnerConfig, Schedule, Time};
use rayon::prelude::*;

use crate::cpu::thread_cpu_seconds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
pub enum Solver {
    /// Q-learning with backward-pass prepopulation.
    Rl,
    /// Q-learning without prepopulation.
    RlPlain,
    /// Prepopulated Q-learning on a divided instance.
    RlDivided,
    /// Random sampling.
    Rs,
    Fifo,
    Mwkr,
    /// Genetic algorithm.
    Ga,
    /// Exhaustive branch and bound.
    Oracle,
}

impl Solver {
    pub const ALL: [Solver; 8] = [
        Solver::Rl,
        Solver::RlPlain,
        Solver::RlDivided,
        Solver::Rs,
        Solver::Fifo,
        Solver::Mwkr,
        Solver::Ga,
        Solver::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Rl => "rl",
            Solver::RlPlain => "rl-plain",
            Solver::RlDivided => "rl-divided",
            Solver::Rs => "rs",
            Solver::Fifo => "fifo",
            Solver::Mwkr => "mwkr",
            Solver::Ga => "ga",
            Solver::Oracle => "oracle",
        }
    }
}

/// Everything a solver run needs besides the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub learner: LearnerConfig,
    pub baseline: BaselineConfig,
    pub divide_parts: usize,
    pub divide_strategy: SplitStrategy,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            learner: LearnerConfig::default(),
            baseline: BaselineConfig::default(),
            divide_parts: 2,
            divide_strategy: SplitStrategy::ByOpCount,
        }
    }
}

/// One solver on one instance.
#[derive(Debug, Clone)]
pub struct Cell {
    pub solver: Solver,
    /// The validated schedule, or why there is none.
    pub result: Result<Schedule, String>,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
    /// Extra run facts for logs, e.g. episodes to the best schedule.
    pub note: String,
}

impl Cell {
    pub fn makespan(&self) -> Option<Time> {
        self.result.as_ref().ok().and_then(|s| s.makespan().ok())
    }
}

fn solve(inst: &Instance, solver: Solver, s: &Settings) -> Result<(Schedule, String), String> {
    let learn = |cfg: LearnerConfig| -> Result<(Schedule, String), String> {
        let report = Learner::new(inst, cfg)
            .and_then(|mut l| l.train_with(&Wall::start()))
            .map_err(|e| e.to_string())?;
        let note = format!(
            "episodes {} best at episode {} ({:.3}s)",
            report.episodes_run, report.episodes_to_best, report.seconds_to_best
        );
        Ok((report.best_schedule, note))
    };
    let plain = |r: Result<Schedule, baselines::BaselineError>| {
        r.map(|s| (s, String::new())).map_err(|e| e.to_string())
    };
    match solver {
        Solver::Rl => learn(s.learner.clone()),
        Solver::RlPlain => learn(LearnerConfig {
            prepopulate: false,
            ..s.learner.clone()
        }),
        Solver::RlDivided => {
            let sol = solve_divided(
                inst,
                s.divide_strategy,
                s.divide_parts,
                &s.learner,
                &Wall::start(),
            )
            .map_err(|e| e.to_string())?;
            let stages: Vec<String> = sol
                .stages
                .iter()
                .map(|st| {
                    let m = st.schedule.makespan().unwrap_or(0);
                    if st.fell_back {
                        format!("{m}*")
                    } else {
                        m.to_string()
                    }
                })
                .collect();
            let note = format!("stage makespans {}", stages.join(" "));
            Ok((sol.schedule().clone(), note))
        }
        Solver::Rs => plain(baselines::random_sampling(
            inst,
            &BaselineConfig {
                episodes: s.learner.episodes,
                ..s.baseline.clone()
            },
        )),
        Solver::Fifo => plain(baselines::fifo(inst)),
        Solver::Mwkr => plain(baselines::mwkr(inst, s.baseline.remaining_work)),
        Solver::Ga => plain(baselines::genetic(inst, &s.baseline)),
        Solver::Oracle => plain(baselines::exhaustive_oracle(inst, &s.baseline)),
    }
}

/// Runs `solver` on `inst` and validates the schedule it returns.
pub fn run_cell(inst: &Instance, solver: Solver, settings: &Settings) -> Cell {
    let wall = std::time::Instant::now();
    let cpu = thread_cpu_seconds();
    let outcome = solve(inst, solver, settings);
    let cpu_seconds = thread_cpu_seconds() - cpu;
    let wall_seconds = wall.elapsed().as_secs_f64();
    let (result, note) = match outcome {
        Ok((sched, note)) => {
            let report = validate_schedule(inst, &sched);
            if report.is_ok() {
                (Ok(sched), note)
            } else {
                let first = report.violations[0].to_string();
                (Err(format!("invalid schedule: {first}")), note)
            }
        }
        Err(e) => (Err(e), String::new()),
    };
    Cell {
        solver,
        result,
        cpu_seconds,
        wall_seconds,
        note,
    }
}

/// All cells of one instance.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub instance: String,
    pub jobs: usize,
    pub machines: usize,
    pub cells: Vec<Cell>,
}

impl BenchRow {
    pub fn size(&self) -> String {
        format!("{}x{}", self.jobs, self.machines)
    }
}

/// Runs every solver on every instance on up to `jobs` threads. Rows and
/// cells come back in input order regardless of scheduling.
pub fn run_bench(
    instances: &[Instance],
    solvers: &[Solver],
    settings: &Settings,
    jobs: usize,
) -> Vec<BenchRow> {
    let tasks: Vec<(usize, Solver)> = (0..instances.len())
        .flat_map(|i| solvers.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let mut cells: Vec<(usize, Cell)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, s)| (i, run_cell(&instances[i], s, settings)))
            .collect()
    });
    instances
        .iter()
        .enumerate()
        .map(|(i, inst)| BenchRow {
            instance: inst.name().to_string(),
            jobs: inst.job_count(),
            machines: inst.machine_count(),
            cells: cells
                .iter_mut()
                .filter(|(k, _)| *k == i)
                .map(|(_, c)| c.clone())
                .collect(),
        })
        .collect()
}

fn columns(rows: &[BenchRow]) -> Vec<Solver> {
    rows.first()
        .map(|r| r.cells.iter().map(|c| c.solver).collect())
        .unwrap_or_default()
}

fn text_table(rows: &[BenchRow], value: impl Fn(&Cell) -> Option<String>) -> String {
    let solvers = columns(rows);
    let mut grid: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let mut head = vec!["instance".to_string(), "size".to_string()];
    head.extend(solvers.iter().map(|s| s.name().to_string()));
    grid.push(head);
    for r in rows {
        let mut line = vec![r.instance.clone(), r.size()];
        line.extend(
            r.cells
                .iter()
                .map(|c| value(c).unwrap_or_else(|| "NA".to_string())),
        );
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|k| grid.iter().map(|l| l[k].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in grid {
        let padded: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(k, (v, &w))| {
                if k < 2 {
                    format!("{v:<w$}")
                } else {
                    format!("{v:>w$}")
                }
            })
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_table(rows: &[BenchRow], value: impl Fn(&Cell) -> Option<String>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec![
        "instance".to_string(),
        "jobs".to_string(),
        "machines".to_string(),
    ];
    head.extend(columns(rows).iter().map(|s| s.name().to_string()));
    w.write_record(&head).expect("in-memory write");
    for r in rows {
        let mut rec = vec![
            r.instance.clone(),
            r.jobs.to_string(),
            r.machines.to_string(),
        ];
        rec.extend(
            r.cells
                .iter()
                .map(|c| value(c).unwrap_or_else(|| "NA".into())),
        );
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Makespans, one row per instance.
pub fn makespan_table(rows: &[BenchRow]) -> String {
    text_table(rows, |c| c.makespan().map(|m| m.to_string()))
}

pub fn makespan_csv(rows: &[BenchRow]) -> String {
    csv_table(rows, |c| c.makespan().map(|m| m.to_string()))
}

/// CPU seconds rounded to whole seconds; failed cells are NA.
pub fn cpu_table(rows: &[BenchRow]) -> String {
    text_table(rows, |c| {
        c.result
            .is_ok()
            .then(|| format!("{}", c.cpu_seconds.round() as u64))
    })
}

pub fn cpu_csv(rows: &[BenchRow]) -> String {
    csv_table(rows, |c| {
        c.result.is_ok().then(|| format!("{:.6}", c.cpu_seconds))
    })
}
