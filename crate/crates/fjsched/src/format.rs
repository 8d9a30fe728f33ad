//! Text formats: instances, schedules, and Q-table dumps.
//!
//! Instance files follow the usual flexible job-shop layout: a header line
//! `jobs machines [average machines per operation]`, then one line per job,
//! `ops { alts { machine duration } }`, with 1-based machine ids.
//!
//! Schedule files hold one `job op machine start end` line per operation
//! (all ids 0-based), sorted by job then operation, followed by a
//! `makespan <value>` trailer.

use std::fmt::Write as _;

use fjsched_core::qtable::QTable;
use fjsched_core::{
    Instance, InstanceError, JobSpec, Observation, OperationSpec, Schedule, ScheduleEntry, Time,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("empty input")]
    Empty,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

fn at(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        msg: msg.into(),
    }
}

fn numbers(line: usize, text: &str) -> Result<Vec<i64>, ParseError> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| at(line, format!("`{t}` is not an integer")))
        })
        .collect()
}

fn non_blank(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses an instance file. `name` labels the result.
pub fn parse_instance(text: &str, name: &str) -> Result<Instance, ParseError> {
    let mut lines = non_blank(text);
    let (hline, header) = lines.next().ok_or(ParseError::Empty)?;
    let header = numbers(hline, header)?;
    if !(2..=3).contains(&header.len()) {
        return Err(at(hline, "header must hold 2 or 3 integers"));
    }
    let (n, m) = (header[0], header[1]);
    if n < 1 || m < 1 {
        return Err(at(hline, "job and machine counts must be positive"));
    }
    let (n, m) = (n as usize, m as usize);

    let mut jobs = Vec::with_capacity(n.min(4096));
    for (line, text) in lines {
        if jobs.len() == n {
            return Err(at(line, format!("more than {n} job lines")));
        }
        jobs.push(parse_job(line, text, m)?);
    }
    if jobs.len() < n {
        return Err(at(
            hline,
            format!("header declares {n} jobs, found {}", jobs.len()),
        ));
    }
    Ok(Instance::new(name, m, jobs)?)
}

fn parse_job(line: usize, text: &str, machines: usize) -> Result<JobSpec, ParseError> {
    let tokens = numbers(line, text)?;
    let mut it = tokens.iter().copied();
    let mut next = |what: &str| {
        it.next()
            .ok_or_else(|| at(line, format!("line ends where {what} was expected")))
    };
    let ops = next("an operation count")?;
    if ops < 1 {
        return Err(at(line, "a job needs at least one operation"));
    }
    let mut operations = Vec::new();
    for o in 0..ops {
        let alts = next("an alternative count")?;
        if alts < 1 {
            return Err(at(line, format!("operation {} has no alternatives", o + 1)));
        }
        let mut pairs = Vec::new();
        for _ in 0..alts {
            let machine = next("a machine id")?;
            let duration = next("a duration")?;
            if machine < 1 || machine as usize > machines {
                return Err(at(
                    line,
                    format!("machine {machine} outside 1..={machines}"),
                ));
            }
            if duration < 1 || duration > Time::MAX as i64 {
                return Err(at(line, format!("duration {duration} must be positive")));
            }
            let machine = machine as usize - 1;
            if pairs.iter().any(|&(m, _)| m == machine) {
                return Err(at(line, format!("machine {} listed twice", machine + 1)));
            }
            pairs.push((machine, duration as Time));
        }
        operations.push(OperationSpec::new(pairs));
    }
    let rest = tokens.len() - tokens_used(&operations);
    if rest != 0 {
        return Err(at(line, format!("{rest} unexpected trailing token(s)")));
    }
    Ok(JobSpec::new(operations))
}

fn tokens_used(ops: &[OperationSpec]) -> usize {
    1 + ops
        .iter()
        .map(|o| 1 + 2 * o.alternatives().len())
        .sum::<usize>()
}

/// Writes `inst` in the instance file format.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = format!("{} {}\n", inst.job_count(), inst.machine_count());
    for job in inst.jobs() {
        let _ = write!(out, "{}", job.len());
        for op in &job.operations {
            let _ = write!(out, " {}", op.alternatives().len());
            for &(m, d) in op.alternatives() {
                let _ = write!(out, " {} {}", m + 1, d);
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `sched` in the schedule file format.
pub fn write_schedule(sched: &Schedule) -> String {
    let mut out = String::new();
    for e in sched.sorted().entries() {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            e.job, e.op, e.machine, e.start, e.end
        );
    }
    let _ = writeln!(out, "makespan {}", sched.makespan().unwrap_or(0));
    out
}

/// Parses a schedule file. The trailer is optional; when present it must
/// match the entries.
pub fn parse_schedule(text: &str) -> Result<Schedule, ParseError> {
    let mut entries = Vec::new();
    let mut trailer = None;
    for (line, text) in non_blank(text) {
        if text.starts_with('#') {
            continue;
        }
        if trailer.is_some() {
            return Err(at(line, "content after the makespan trailer"));
        }
        if let Some(v) = text.strip_prefix("makespan") {
            let v: Time = v
                .trim()
                .parse()
                .map_err(|_| at(line, "makespan must be a non-negative integer"))?;
            trailer = Some((line, v));
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(at(line, "expected `job op machine start end`"));
        }
        let mut v = [0u64; 5];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| at(line, format!("`{f}` is not a non-negative integer")))?;
        }
        let time = |x: u64| Time::try_from(x).map_err(|_| at(line, "time out of range"));
        entries.push(ScheduleEntry {
            job: v[0] as usize,
            op: v[1] as usize,
            machine: v[2] as usize,
            start: time(v[3])?,
            end: time(v[4])?,
        });
    }
    let sched = Schedule::new(entries);
    if let Some((line, v)) = trailer {
        if sched.makespan().unwrap_or(0) != v {
            return Err(at(line, "trailer disagrees with the entries"));
        }
    }
    Ok(sched)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct JsonEntry {
    job: usize,
    op: usize,
    machine: usize,
    start: Time,
    end: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct JsonSchedule {
    instance: String,
    jobs: usize,
    machines: usize,
    makespan: Time,
    entries: Vec<JsonEntry>,
}

/// Self-describing JSON export of a schedule.
pub fn schedule_to_json(inst: &Instance, sched: &Schedule) -> String {
    let doc = JsonSchedule {
        instance: inst.name().to_string(),
        jobs: inst.job_count(),
        machines: inst.machine_count(),
        makespan: sched.makespan().unwrap_or(0),
        entries: sched
            .sorted()
            .entries()
            .iter()
            .map(|e| JsonEntry {
                job: e.job,
                op: e.op,
                machine: e.machine,
                start: e.start,
                end: e.end,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes") + "\n"
}

pub fn schedule_from_json(text: &str) -> Result<Schedule, serde_json::Error> {
    let doc: JsonSchedule = serde_json::from_str(text)?;
    Ok(Schedule::new(
        doc.entries
            .into_iter()
            .map(|e| ScheduleEntry {
                job: e.job,
                op: e.op,
                machine: e.machine,
                start: e.start,
                end: e.end,
            })
            .collect(),
    ))
}

const QTABLE_HEADER: &str = "# fjsched q-table v1";

/// Flat dump of a Q-table: a version header, then
/// `observation action value` per stored pair, with the merged observation
/// comma-separated.
pub fn write_qtable(q: &QTable) -> String {
    let mut out = String::from(QTABLE_HEADER);
    out.push('\n');
    for (obs, a, v) in q.entries() {
        let key: Vec<String> = obs.as_slice().iter().map(i32::to_string).collect();
        let _ = writeln!(out, "{} {} {}", key.join(","), a, v);
    }
    out
}

pub fn parse_qtable(text: &str) -> Result<QTable, ParseError> {
    let mut lines = non_blank(text);
    match lines.next() {
        Some((_, QTABLE_HEADER)) => {}
        Some((line, _)) => return Err(at(line, format!("expected `{QTABLE_HEADER}`"))),
        None => return Err(ParseError::Empty),
    }
    let mut entries = Vec::new();
    for (line, text) in lines {
        let fields: Vec<&str> = text.split_whitespace().collect();
        let [key, action, value] = fields[..] else {
            return Err(at(line, "expected `observation action value`"));
        };
        let key = key
            .split(',')
            .map(|k| k.parse::<i32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| at(line, "bad observation"))?;
        let obs = Observation::from_merged(key).ok_or_else(|| at(line, "bad observation"))?;
        let action = action.parse().map_err(|_| at(line, "bad action"))?;
        let value: f64 = value.parse().map_err(|_| at(line, "bad value"))?;
        if !value.is_finite() {
            return Err(at(line, "value must be finite"));
        }
        entries.push((obs, action, value));
    }
    Ok(QTable::from_entries(entries))
}
