//! SVG Gantt charts: one lane per machine, one labelled block per
//! operation, colored by job.

use std::fmt::Write as _;

use fjsched_core::{Instance, Schedule};

const LANE: u32 = 28;
const LEFT: u32 = 48;
const TOP: u32 = 24;
const WIDTH: u32 = 960;

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

/// Renders `sched` for `inst`. Output depends only on the inputs.
pub fn render_svg(inst: &Instance, sched: &Schedule) -> String {
    let makespan = sched.makespan().unwrap_or(0).max(1);
    let scale = (WIDTH - LEFT - 16) as f64 / makespan as f64;
    let machines = inst.machine_count() as u32;
    let height = TOP + machines * LANE + 24;
    let x = |t: u32| LEFT as f64 + t as f64 * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="monospace" font-size="11">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="16">{} makespan {}</text>"#,
        escape(inst.name()),
        sched.makespan().unwrap_or(0)
    );
    for m in 0..machines {
        let y = TOP + m * LANE;
        let _ = writeln!(
            out,
            r##"<g class="lane"><text x="4" y="{}">M{m}</text><line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="#ccc"/>"##,
            y + 18,
            y + LANE,
            WIDTH - 16,
            y + LANE
        );
        for e in sched.machine_sequence(m as usize) {
            let (x0, x1) = (x(e.start), x(e.end));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{}" width="{:.2}" height="{}" fill="{}" stroke="black"><title>J{} O{} [{}, {})</title></rect><text x="{:.2}" y="{}">{}.{}</text>"#,
                y + 3,
                x1 - x0,
                LANE - 6,
                PALETTE[e.job % PALETTE.len()],
                e.job,
                e.op,
                e.start,
                e.end,
                x0 + 2.0,
                y + 18,
                e.job,
                e.op
            );
        }
        out.push_str("</g>\n");
    }
    let axis = TOP + machines * LANE + 16;
    let _ = writeln!(out, r#"<text x="{LEFT}" y="{axis}">0</text>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{axis}" text-anchor="end">{}</text>"#,
        x(makespan),
        sched.makespan().unwrap_or(0)
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use fjsched_core::{baselines, samples};

    #[test]
    fn one_block_per_operation() {
        let inst = samples::toy();
        let sched = baselines::fifo(&inst).unwrap();
        let svg = render_svg(&inst, &sched);
        assert_eq!(svg.matches("<rect").count(), inst.total_operations());
        assert_eq!(svg.matches(r#"class="lane""#).count(), 3);
        assert_eq!(svg, render_svg(&inst, &sched));
    }
}
