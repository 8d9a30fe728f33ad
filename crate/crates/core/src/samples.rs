//! Bundled instances and the random tiny-instance generator.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::instance::{Instance, JobSpec, OperationSpec, Time};

fn jssp(name: &str, machine_count: usize, rows: &[&[(usize, Time)]]) -> Instance {
    let jobs = rows
        .iter()
        .map(|row| {
            JobSpec::new(
                row.iter()
                    .map(|&alt| OperationSpec::new([alt].into()))
                    .collect(),
            )
        })
        .collect();
    Instance::new(name, machine_count, jobs).expect("bundled instance is valid")
}

/// Two jobs on three machines. Job 0 is the one described in prose for the
/// two-job example instance (10/15 then 12/18); job 1 is reconstructed to
/// match the stated per-operation means 22.5, 21.5 and 20. Optimum 53.
pub fn toy() -> Instance {
    let jobs = [
        [[(0, 10), (1, 15)].as_slice(), &[(1, 12), (2, 18)]].to_vec(),
        [
            [(0, 20), (1, 25)].as_slice(),
            &[(0, 18), (2, 25)],
            &[(1, 15), (2, 25)],
        ]
        .to_vec(),
    ];
    let jobs = jobs
        .iter()
        .map(|ops| {
            JobSpec::new(
                ops.iter()
                    .map(|alts| OperationSpec::new(alts.to_vec()))
                    .collect(),
            )
        })
        .collect();
    Instance::new("toy", 3, jobs).expect("toy instance is valid")
}

/// Fisher & Thompson 6x6 (ft06), optimum 55.
pub fn ft06() -> Instance {
    jssp(
        "ft06",
        6,
        &[
            &[(2, 1), (0, 3), (1, 6), (3, 7), (5, 3), (4, 6)],
            &[(1, 8), (2, 5), (4, 10), (5, 10), (0, 10), (3, 4)],
            &[(2, 5), (3, 4), (5, 8), (0, 9), (1, 1), (4, 7)],
            &[(1, 5), (0, 5), (2, 5), (3, 3), (4, 8), (5, 9)],
            &[(2, 9), (1, 3), (4, 5), (5, 4), (0, 3), (3, 1)],
            &[(1, 3), (3, 3), (5, 9), (0, 10), (4, 4), (2, 1)],
        ],
    )
}

/// Lawrence la05 (10 jobs, 5 machines), optimum 593.
pub fn la05() -> Instance {
    jssp(
        "la05",
        5,
        &[
            &[(1, 72), (0, 87), (4, 95), (2, 66), (3, 60)],
            &[(4, 5), (3, 35), (0, 48), (2, 39), (1, 54)],
            &[(1, 46), (3, 20), (2, 21), (0, 97), (4, 55)],
            &[(0, 59), (3, 19), (4, 46), (1, 34), (2, 37)],
            &[(4, 23), (2, 73), (3, 25), (1, 24), (0, 28)],
            &[(3, 28), (0, 45), (4, 5), (1, 78), (2, 83)],
            &[(0, 53), (3, 71), (1, 37), (4, 29), (2, 12)],
            &[(4, 12), (2, 87), (3, 33), (1, 55), (0, 38)],
            &[(2, 49), (3, 83), (1, 40), (0, 48), (4, 7)],
            &[(2, 65), (3, 17), (0, 90), (4, 27), (1, 23)],
        ],
    )
}

/// Shape limits for [`random_tiny`].
#[derive(Debug, Clone, Copy)]
pub struct TinyShape {
    pub jobs: (usize, usize),
    pub machines: (usize, usize),
    pub max_ops: usize,
    pub durations: (Time, Time),
}

impl Default for TinyShape {
    fn default() -> Self {
        Self {
            jobs: (2, 3),
            machines: (2, 3),
            max_ops: 3,
            durations: (1, 10),
        }
    }
}

/// Random flexible instance within `shape` (all ranges inclusive). Every
/// operation gets a random non-empty subset of machines.
pub fn random_tiny<R: Rng + ?Sized>(rng: &mut R, shape: TinyShape) -> Instance {
    let n = rng.gen_range(shape.jobs.0..=shape.jobs.1);
    let m = rng.gen_range(shape.machines.0..=shape.machines.1);
    let jobs = (0..n)
        .map(|_| {
            let ops = rng.gen_range(1..=shape.max_ops);
            JobSpec::new(
                (0..ops)
                    .map(|_| {
                        let mut alts: Vec<(usize, Time)> = Vec::new();
                        for k in 0..m {
                            if rng.gen_bool(0.5) {
                                alts.push((
                                    k,
                                    rng.gen_range(shape.durations.0..=shape.durations.1),
                                ));
                            }
                        }
                        if alts.is_empty() {
                            let k = rng.gen_range(0..m);
                            alts.push((k, rng.gen_range(shape.durations.0..=shape.durations.1)));
                        }
                        OperationSpec::new(alts)
                    })
                    .collect(),
            )
        })
        .collect();
    Instance::new(format!("tiny-{n}x{m}"), m, jobs).expect("generated instance is valid")
}
