//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fjsched::bench::{run_cell, Settings, Solver};
use fjsched::core::baselines::{self, BaselineConfig};
use fjsched::core::division::{solve_divided, SplitStrategy};
use fjsched::core::instance::DurationEstimate;
use fjsched::core::samples::{self, TinyShape};
use fjsched::core::schedule::ViolationKind;
use fjsched::core::stopwatch::Wall;
use fjsched::core::{
    train, validate_schedule, Allocation, Env, EnvState, Instance, JobSpec, LearnerConfig,
    OperationSpec, Schedule, ScheduleEntry, TrainingReport,
};
use fjsched::format;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn makespan(s: &Schedule) -> u32 {
    s.makespan().unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut matched, mut problems) = (0, Vec::new());
    let total = 50;
    for k in 0..total {
        let inst = samples::random_tiny(&mut rng, TinyShape::default());
        let bl = BaselineConfig {
            seed: k,
            episodes: 2000,
            ..BaselineConfig::default()
        };
        let opt = makespan(&baselines::exhaustive_oracle(&inst, &bl).unwrap());
        let rl = train(
            &inst,
            LearnerConfig {
                episodes: 2000,
                seed: k,
                ..LearnerConfig::default()
            },
        )
        .unwrap();
        if rl.best_makespan == opt {
            matched += 1;
        }
        let others = [
            ("rl", rl.best_makespan),
            ("fifo", makespan(&baselines::fifo(&inst).unwrap())),
            (
                "mwkr",
                makespan(&baselines::mwkr(&inst, DurationEstimate::Mean).unwrap()),
            ),
            ("ga", makespan(&baselines::genetic(&inst, &bl).unwrap())),
            (
                "rs",
                makespan(&baselines::random_sampling(&inst, &bl).unwrap()),
            ),
        ];
        for (name, v) in others {
            if v < opt {
                problems.push(format!("instance {k}: {name} {v} beats oracle {opt}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "rl matched the oracle on {matched}/{total}, {} bound violations, {secs:.1}s",
        problems.len()
    );
    check(
        matched * 10 >= total * 9 && problems.is_empty() && secs < 120.0,
        detail,
    )
}

fn pinned_makespans() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (inst, expected, episodes) in [(samples::toy(), 53, 10_000), (samples::ft06(), 55, 50_000)]
    {
        let start = Instant::now();
        let r = train(
            &inst,
            LearnerConfig {
                episodes,
                ..LearnerConfig::default()
            },
        )
        .unwrap();
        let secs = start.elapsed().as_secs_f64();
        ok &= r.best_makespan == expected && secs < 60.0;
        parts.push(format!(
            "{} {} (want {expected}, {secs:.1}s)",
            inst.name(),
            r.best_makespan
        ));
    }
    check(ok, parts.join(", "))
}

fn la05_literature() -> Outcome {
    let inst = samples::la05();
    let mut settings = Settings::default();
    settings.learner.episodes = 50_000;
    settings.learner.time_limit = Some(600.0);
    let cell = run_cell(&inst, Solver::Rl, &settings);
    let sched = cell.result.map_err(|e| format!("rl failed: {e}"))?;
    let m = makespan(&sched);
    let mut ok = m <= 605;
    let mut detail = format!("rl makespan {m} in {:.1}s", cell.wall_seconds);
    if m == 593 {
        let pinned = std::fs::read_to_string(golden("la05.rl.sched")).unwrap_or_default();
        let same = pinned == format::write_schedule(&sched);
        ok &= same;
        detail.push_str(if same {
            ", golden file matches"
        } else {
            ", golden file differs"
        });
    }
    for (name, s) in [
        ("fifo", baselines::fifo(&inst)),
        ("mwkr", baselines::mwkr(&inst, DurationEstimate::Mean)),
    ] {
        let s = s.map_err(|e| format!("{name} failed: {e}"))?;
        let valid = validate_schedule(&inst, &s).is_ok();
        ok &= valid;
        detail.push_str(&format!(
            ", {name} {} {}",
            makespan(&s),
            if valid { "valid" } else { "INVALID" }
        ));
    }
    check(ok, detail)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Episodes and seconds until `r` first produced a schedule no longer than
/// `target`; a run that never does is counted at its full length.
fn time_to(r: &TrainingReport, target: u32) -> (f64, f64) {
    if r.best_makespan <= target {
        (r.episodes_to_best as f64, r.seconds_to_best)
    } else {
        (r.episodes_run as f64, r.elapsed_seconds)
    }
}

fn speedup() -> Outcome {
    let inst = samples::ft06();
    let (mut pe, mut ps, mut ce, mut cs, mut own) = (vec![], vec![], vec![], vec![], vec![]);
    for seed in 0..5 {
        let base = LearnerConfig {
            episodes: 50_000,
            seed,
            ..LearnerConfig::default()
        };
        let pre = train(&inst, base.clone()).unwrap();
        let classic = train(
            &inst,
            LearnerConfig {
                prepopulate: false,
                ..base
            },
        )
        .unwrap();
        let target = pre.best_makespan;
        pe.push(pre.episodes_to_best as f64);
        ps.push(pre.seconds_to_best);
        let (e, s) = time_to(&classic, target);
        ce.push(e);
        cs.push(s);
        own.push(format!("{}/{}", pre.best_makespan, classic.best_makespan));
    }
    let (pe, ps, ce, cs) = (median(pe), median(ps), median(ce), median(cs));
    let detail = format!(
        "median episodes {pe} vs {ce}, seconds {ps:.2} vs {cs:.2} (best prepopulated/classical per seed: {})",
        own.join(" ")
    );
    check(pe * 3.0 <= ce && ps * 3.0 <= cs, detail)
}

fn division() -> Outcome {
    let inst = samples::ft06();
    let cfg = LearnerConfig {
        episodes: 50_000,
        ..LearnerConfig::default()
    };
    let whole = train(&inst, cfg.clone()).unwrap().best_makespan;
    let mut ok = true;
    let mut parts = vec![format!("undivided {whole}")];
    for strategy in [
        SplitStrategy::ByOpCount,
        SplitStrategy::ByDuration(DurationEstimate::Mean),
    ] {
        let sol = solve_divided(&inst, strategy, 2, &cfg, &Wall::start())
            .map_err(|e| format!("{strategy:?}: {e}"))?;
        let m = makespan(sol.schedule());
        let valid = validate_schedule(&inst, sol.schedule()).is_ok();
        let first = &sol.stages[0];
        // stage-1 operations keep their machines and their relative order
        let kept = sol.stages[1..].iter().all(|s| !s.fell_back)
            && first.constraint.machines_respected(sol.schedule())
            && (0..inst.machine_count()).all(|m| {
                let order: Vec<(usize, usize)> = sol
                    .schedule()
                    .machine_sequence(m)
                    .iter()
                    .map(|e| (e.job, e.op))
                    .filter(|p| first.constraint.sequence(m).contains(p))
                    .collect();
                order == first.constraint.sequence(m)
            });
        ok &= valid && kept && (m as f64) <= whole as f64 * 1.15;
        parts.push(format!(
            "{strategy:?} {m}{}{}",
            if valid { "" } else { " invalid" },
            if kept { "" } else { " constraint broken" }
        ));
    }
    check(ok, parts.join(", "))
}

fn reward_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut bad = 0;
    for _ in 0..1000 {
        let inst = samples::random_tiny(
            &mut rng,
            TinyShape {
                jobs: (1, 5),
                machines: (1, 4),
                max_ops: 5,
                durations: (1, 30),
            },
        );
        let mut env = Env::new(&inst);
        let mut total = 0i64;
        while !env.is_done() {
            let k = rng.gen_range(0..env.legal_allocations().len());
            total += env.step(k).unwrap().reward;
        }
        if total != -(makespan(&env.extract_schedule().unwrap()) as i64) {
            bad += 1;
        }
    }
    check(bad == 0, format!("{bad} of 1000 episodes differ"))
}

/// Filter of the whole (m+1)^n assignment cube, WAIT sorted after machines.
fn brute_force(inst: &Instance, s: &EnvState) -> Vec<Allocation> {
    let (n, m) = (inst.job_count(), inst.machine_count());
    let mut out = Vec::new();
    for code in 0..(m + 1).pow(n as u32) {
        let digits: Vec<usize> = (0..n)
            .rev()
            .map(|j| code / (m + 1).pow(j as u32) % (m + 1))
            .collect();
        let v: Vec<Option<usize>> = digits.iter().map(|&d| (d < m).then_some(d)).collect();
        let executable = v.iter().enumerate().all(|(j, a)| match *a {
            None => true,
            Some(k) => {
                s.is_idle(j)
                    && inst.operation(j, s.current_op(j)).duration_on(k).is_some()
                    && s.machine_free(k)
                    && v.iter().filter(|b| **b == Some(k)).count() == 1
            }
        });
        let reasonable = s.any_running() || v.iter().any(Option::is_some);
        if executable && reasonable {
            out.push(Allocation(v));
        }
    }
    out
}

fn legal_allocations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = TinyShape {
        jobs: (3, 3),
        machines: (3, 3),
        max_ops: 3,
        durations: (1, 10),
    };
    let (mut states, mut bad) = (0, 0);
    while states < 10_000 {
        let inst = samples::random_tiny(&mut rng, shape);
        let mut env = Env::new(&inst);
        while !env.is_done() && states < 10_000 {
            if env.legal_allocations() != brute_force(&inst, env.state()).as_slice() {
                bad += 1;
            }
            states += 1;
            let k = rng.gen_range(0..env.legal_allocations().len());
            env.step(k).unwrap();
        }
    }
    check(bad == 0, format!("{bad} of {states} states differ"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &Path| -> Result<(), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_fjsched"))
            .args(["bench", "--instance"])
            .arg(data("toy.fjs"))
            .arg("--instance")
            .arg(data("ft06.fjs"))
            .args([
                "--episodes",
                "2000",
                "--seed",
                "3",
                "--node-budget",
                "200000",
                "--jobs",
                "4",
                "--out",
            ])
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        if o.status.success() {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&o.stderr).into_owned())
        }
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a)?;
    run(&b)?;
    let mut files = vec!["makespan.txt".to_string(), "makespan.csv".to_string()];
    let mut names: Vec<String> = std::fs::read_dir(a.join("schedules"))
        .map_err(|e| e.to_string())?
        .map(|e| format!("schedules/{}", e.unwrap().file_name().to_string_lossy()))
        .collect();
    names.sort();
    files.extend(names);
    let differ: Vec<&String> = files
        .iter()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok())
        .collect();
    check(
        differ.is_empty(),
        format!("{} files compared, differing: {differ:?}", files.len()),
    )
}

fn validator_mutations() -> Outcome {
    let op = |alts: &[(usize, u32)]| OperationSpec::new(alts.to_vec());
    let inst = Instance::new(
        "mutations",
        3,
        vec![
            JobSpec::new(vec![op(&[(0, 3)]), op(&[(2, 2)])]),
            JobSpec::new(vec![op(&[(1, 2)]), op(&[(0, 2)])]),
        ],
    )
    .unwrap();
    let e = |job, op, machine, start, end| ScheduleEntry {
        job,
        op,
        machine,
        start,
        end,
    };
    let base = vec![
        e(0, 0, 0, 0, 3),
        e(0, 1, 2, 3, 5),
        e(1, 0, 1, 0, 2),
        e(1, 1, 0, 3, 5),
    ];
    let with = |edit: &dyn Fn(&mut Vec<ScheduleEntry>)| {
        let mut v = base.clone();
        edit(&mut v);
        validate_schedule(&inst, &Schedule::new(v)).kinds()
    };
    let cases: Vec<(&str, Vec<ViolationKind>, Vec<ViolationKind>)> = vec![
        ("unchanged", with(&|_| {}), vec![]),
        (
            "job overlap",
            with(&|v| (v[1].start, v[1].end) = (2, 4)),
            vec![ViolationKind::JobOverlap],
        ),
        (
            "machine overlap",
            with(&|v| (v[3].start, v[3].end) = (2, 4)),
            vec![ViolationKind::MachineOverlap],
        ),
        (
            "interruption",
            with(&|v| {
                v[3].end = 4;
                v.push(e(1, 1, 0, 5, 6));
            }),
            vec![ViolationKind::Interrupted],
        ),
        (
            "order",
            with(&|v| {
                (v[1].start, v[1].end) = (0, 2);
                (v[0].start, v[0].end) = (2, 5);
                (v[3].start, v[3].end) = (5, 7);
            }),
            vec![ViolationKind::Precedence],
        ),
        (
            "idle time",
            with(&|v| (v[3].start, v[3].end) = (10, 12)),
            vec![],
        ),
        (
            "completeness",
            with(&|v| {
                v.remove(1);
            }),
            vec![ViolationKind::Incomplete],
        ),
    ];
    let wrong: Vec<String> = cases
        .iter()
        .filter(|(_, got, want)| got != want)
        .map(|(name, got, want)| format!("{name}: got {got:?}, want {want:?}"))
        .collect();
    check(
        wrong.is_empty(),
        format!(
            "{} cases, {}",
            cases.len(),
            if wrong.is_empty() {
                "all flagged as expected".into()
            } else {
                wrong.join("; ")
            }
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("1 oracle equivalence on tiny instances", oracle_equivalence),
        ("2 pinned makespans toy=53 ft06=55", pinned_makespans),
        ("3 la05 within 2% of 593", la05_literature),
        ("4 prepopulation speedup >= 3x", speedup),
        ("5 division within 15% with constraint adherence", division),
        ("6 reward sum equals minus makespan", reward_identity),
        ("7 legal allocations equal brute force", legal_allocations),
        ("8 bench determinism", determinism),
        ("9 validator mutation classes", validator_mutations),
    ];
    // sequential, so wall-clock figures are not skewed by each other
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
