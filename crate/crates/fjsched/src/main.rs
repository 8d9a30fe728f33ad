use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fjsched::bench::{self, Cell, Settings, Solver};
use fjsched::config::Overrides;
use fjsched::{format, gantt, read_instance};
use fjsched_core::{validate_schedule, Instance};

const FAILED: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fjsched",
    version,
    about = "Flexible job-shop scheduling solvers and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve instances with the selected solvers and write the schedules.
    Solve(SolveArgs),
    /// Run solvers over instances and print comparison tables.
    Bench(BenchArgs),
    /// Check a schedule file against an instance.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (`-` for standard input); repeatable.
    #[arg(long, required = true)]
    instance: Vec<PathBuf>,
    /// Solvers to run; repeatable or comma-separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "rl")]
    solver: Vec<Solver>,
    /// Also write an SVG Gantt chart per schedule (needs --out).
    #[arg(long)]
    gantt: bool,
    /// Output directory; schedules go to standard output without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, required = true)]
    instance: Vec<PathBuf>,
    /// Solvers (table columns, in this order); all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    solver: Vec<Solver>,
    /// Output directory for tables, schedules and the run log.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cells run concurrently.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML file with defaults for the options below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Training episodes (also random-sampling episodes).
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon_start: Option<f64>,
    #[arg(long)]
    epsilon_min: Option<f64>,
    #[arg(long)]
    epsilon_decay: Option<f64>,
    #[arg(long, overrides_with = "no_prepopulate")]
    prepopulate: bool,
    #[arg(long)]
    no_prepopulate: bool,
    #[arg(long)]
    include_immediate_reward: bool,
    /// Number of parts for rl-divided.
    #[arg(long)]
    divide: Option<usize>,
    /// `ops` or `duration`.
    #[arg(long)]
    divide_strategy: Option<String>,
    /// `mean`, `min` or `max`.
    #[arg(long)]
    duration_estimate: Option<String>,
    /// Wall-clock limit per learning run.
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Search nodes the oracle may expand.
    #[arg(long)]
    node_budget: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides, String> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                Overrides::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => Overrides::default(),
        };
        let prepopulate = match (self.prepopulate, self.no_prepopulate) {
            (true, _) => Some(true),
            (false, true) => Some(false),
            _ => None,
        };
        let flags = Overrides {
            seed: self.seed,
            episodes: self.episodes,
            alpha: self.alpha,
            epsilon_start: self.epsilon_start,
            epsilon_min: self.epsilon_min,
            epsilon_decay: self.epsilon_decay,
            prepopulate,
            include_immediate_reward: self.include_immediate_reward.then_some(true),
            divide: self.divide,
            divide_strategy: self.divide_strategy.clone(),
            duration_estimate: self.duration_estimate.clone(),
            budget_seconds: self.budget_seconds,
            node_budget: self.node_budget,
            ..Overrides::default()
        };
        Ok(file.merged_with(flags))
    }
}

fn load(paths: &[PathBuf]) -> Result<Vec<Instance>, String> {
    paths.iter().map(|p| read_instance(p)).collect()
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn describe(settings: &Settings) -> String {
    format!("{:?}", settings)
}

fn log_line(inst: &Instance, cell: &Cell) -> String {
    let outcome = match (&cell.result, cell.makespan()) {
        (Ok(_), Some(m)) => format!("makespan {m}"),
        (Err(e), _) => format!("failed: {e}"),
        _ => "empty".into(),
    };
    let mut line = format!(
        "{} {} {outcome} cpu {:.3}s wall {:.3}s",
        inst.name(),
        cell.solver.name(),
        cell.cpu_seconds,
        cell.wall_seconds
    );
    if !cell.note.is_empty() {
        let _ = write!(line, " ({})", cell.note);
    }
    line
}

fn solve(args: SolveArgs) -> Result<u8, String> {
    let settings = args
        .common
        .overrides()?
        .settings()
        .map_err(|e| e.to_string())?;
    let instances = load(&args.instance)?;
    if args.gantt && args.out.is_none() {
        return Err("--gantt needs --out".into());
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    let mut status = 0;
    for inst in &instances {
        for &solver in &args.solver {
            let cell = bench::run_cell(inst, solver, &settings);
            let line = log_line(inst, &cell);
            eprintln!("{line}");
            let Ok(sched) = &cell.result else {
                status = FAILED;
                continue;
            };
            let text = format::write_schedule(sched);
            match &args.out {
                None => print!("# {} {}\n{text}", inst.name(), solver.name()),
                Some(dir) => {
                    let file =
                        |ext: &str| dir.join(format!("{}.{}.{ext}", inst.name(), solver.name()));
                    write(&file("sched"), &text)?;
                    write(&file("json"), &format::schedule_to_json(inst, sched))?;
                    if args.gantt {
                        write(&file("svg"), &gantt::render_svg(inst, sched))?;
                    }
                    let log = format!(
                        "seed {}\nsettings {}\n{line}\n",
                        settings.learner.seed,
                        describe(&settings)
                    );
                    write(&file("log"), &log)?;
                }
            }
        }
    }
    Ok(status)
}

fn bench_cmd(args: BenchArgs) -> Result<u8, String> {
    let overrides = args.common.overrides()?;
    let settings = overrides.settings().map_err(|e| e.to_string())?;
    let instances = load(&args.instance)?;
    let solvers = if args.solver.is_empty() {
        Solver::ALL.to_vec()
    } else {
        args.solver.clone()
    };
    let jobs = args
        .jobs
        .or(overrides.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = bench::run_bench(&instances, &solvers, &settings, jobs);

    let mut log = format!(
        "seed {}\nsettings {}\n",
        settings.learner.seed,
        describe(&settings)
    );
    let mut status = 0;
    for (inst, row) in instances.iter().zip(&rows) {
        for cell in &row.cells {
            let _ = writeln!(log, "{}", log_line(inst, cell));
            // budget overruns and the like are NA cells, not failures
            if matches!(&cell.result, Err(e) if e.starts_with("invalid schedule")) {
                status = FAILED;
            }
        }
    }
    let makespans = bench::makespan_table(&rows);
    match &args.out {
        None => {
            print!(
                "makespan\n{makespans}\ncpu seconds\n{}",
                bench::cpu_table(&rows)
            );
            eprint!("{log}");
        }
        Some(dir) => {
            let schedules = dir.join("schedules");
            std::fs::create_dir_all(&schedules).map_err(|e| format!("{}: {e}", dir.display()))?;
            write(&dir.join("makespan.txt"), &makespans)?;
            write(&dir.join("makespan.csv"), &bench::makespan_csv(&rows))?;
            write(&dir.join("cpu.txt"), &bench::cpu_table(&rows))?;
            write(&dir.join("cpu.csv"), &bench::cpu_csv(&rows))?;
            write(&dir.join("bench.log"), &log)?;
            for (inst, row) in instances.iter().zip(&rows) {
                for cell in &row.cells {
                    if let Ok(s) = &cell.result {
                        let name = format!("{}.{}.sched", inst.name(), cell.solver.name());
                        write(&schedules.join(name), &format::write_schedule(s))?;
                    }
                }
            }
            print!("{makespans}");
        }
    }
    Ok(status)
}

fn validate(instance: &Path, schedule: &Path) -> Result<u8, String> {
    let inst = read_instance(instance)?;
    let text =
        std::fs::read_to_string(schedule).map_err(|e| format!("{}: {e}", schedule.display()))?;
    let sched = if text.trim_start().starts_with('{') {
        format::schedule_from_json(&text).map_err(|e| format!("{}: {e}", schedule.display()))?
    } else {
        format::parse_schedule(&text).map_err(|e| format!("{}: {e}", schedule.display()))?
    };
    let report = validate_schedule(&inst, &sched);
    if report.is_ok() {
        println!("ok makespan {}", sched.makespan().unwrap_or(0));
        return Ok(0);
    }
    for v in &report.violations {
        println!("{v}");
    }
    Ok(FAILED)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench_cmd(args),
        Command::Validate { instance, schedule } => validate(&instance, &schedule),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}
