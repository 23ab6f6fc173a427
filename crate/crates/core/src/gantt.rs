//! Static SVG Gantt charts: one row per machine, one rectangle per
//! placement, colored by job.
//!
//! Horizontal pixel position is affine in time, `x(t) = MARGIN_LEFT +
//! t * scale` with `scale = plot width / makespan`. Labels read
//! `J{job}.{op} p={time}` plus ` t={tool}` for tool-constrained tasks; a label
//! that would not fit inside its rectangle is shortened to `J{job}.{op}` or
//! left out (the rectangle's tooltip always carries the full text), so labels
//! never overlap.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::schedule::Schedule;

pub const MARGIN_LEFT: f64 = 48.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 12.0;
const AXIS_HEIGHT: f64 = 28.0;
/// Average glyph advance as a fraction of the font size, for monospace text.
const GLYPH_WIDTH: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GanttOptions {
    pub width_px: u32,
    pub row_height_px: u32,
    pub show_labels: bool,
}

impl Default for GanttOptions {
    fn default() -> Self {
        GanttOptions {
            width_px: 1200,
            row_height_px: 28,
            show_labels: true,
        }
    }
}

/// Fill color of `job` among `jobs`: evenly spaced hues.
pub fn job_color(job: usize, jobs: usize) -> String {
    let hue = job as f64 * 360.0 / jobs.max(1) as f64;
    format!("hsl({hue:.1},65%,60%)")
}

/// Tick spacing from the 1-2-5 series giving at most 20 intervals.
fn tick_step(horizon: u32) -> u32 {
    let mut base = 1u32;
    loop {
        for m in [1, 2, 5] {
            let step = base * m;
            if horizon.div_ceil(step) <= 20 {
                return step;
            }
        }
        base *= 10;
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(schedule: &Schedule, options: &GanttOptions) -> Result<String> {
    let violations = schedule.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidSchedule(violations));
    }
    if options.width_px as f64 <= MARGIN_LEFT + MARGIN_RIGHT || options.row_height_px == 0 {
        return Err(Error::config("width_px", "leaves no room for the plot"));
    }
    let inst = schedule.instance();
    let makespan = schedule.makespan();
    let horizon = makespan.max(1);
    let plot_width = options.width_px as f64 - MARGIN_LEFT - MARGIN_RIGHT;
    let scale = plot_width / horizon as f64;
    let row_h = options.row_height_px as f64;
    let rows_bottom = MARGIN_TOP + row_h * inst.num_machines as f64;
    let height = rows_bottom + AXIS_HEIGHT;
    let font = (row_h * 0.45).clamp(8.0, 14.0);
    let x = |t: u32| MARGIN_LEFT + t as f64 * scale;

    let mut svg = String::new();
    let w = options.width_px;
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{height}" viewBox="0 0 {w} {height}" font-family="monospace" data-makespan="{makespan}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{w}" height="{height}" fill="white"/>"#).unwrap();

    for m in 0..inst.num_machines {
        let y = MARGIN_TOP + row_h * m as f64;
        let fill = if m % 2 == 0 { "#f4f4f4" } else { "#ffffff" };
        writeln!(
            svg,
            r#"<rect class="row" x="{MARGIN_LEFT}" y="{y}" width="{plot_width}" height="{row_h}" fill="{fill}"/>"#
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text class="machine" x="{}" y="{}" font-size="{font}" text-anchor="end" dominant-baseline="middle">M{m}</text>"#,
            MARGIN_LEFT - 6.0,
            y + row_h / 2.0
        )
        .unwrap();
    }

    let mut placements: Vec<_> = schedule.placements().collect();
    placements.sort_by_key(|p| (p.machine, p.start, p.job));
    for p in placements {
        let task = inst.task(p.job, p.op);
        let mut label = format!("J{}.{} p={}", p.job, p.op, task.processing_time);
        if let Some(tool) = task.tool {
            write!(label, " t={tool}").unwrap();
        }
        let (x0, width) = (x(p.start), (p.end - p.start) as f64 * scale);
        let y = MARGIN_TOP + row_h * p.machine as f64 + 2.0;
        writeln!(
            svg,
            r##"<rect class="task" x="{x0}" y="{y}" width="{width}" height="{}" fill="{}" stroke="#333" stroke-width="0.5" data-job="{}" data-op="{}"><title>{}</title></rect>"##,
            row_h - 4.0,
            job_color(p.job, inst.num_jobs),
            p.job,
            p.op,
            escape(&label)
        )
        .unwrap();
        if options.show_labels {
            let fits = |s: &str| s.chars().count() as f64 * font * GLYPH_WIDTH + 4.0 <= width;
            let short = format!("J{}.{}", p.job, p.op);
            let shown = [label.as_str(), short.as_str()].into_iter().find(|s| fits(s));
            if let Some(text) = shown {
                writeln!(
                    svg,
                    r#"<text class="label" x="{}" y="{}" font-size="{font}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                    x0 + width / 2.0,
                    y + (row_h - 4.0) / 2.0,
                    escape(text)
                )
                .unwrap();
            }
        }
    }

    writeln!(
        svg,
        r##"<line class="axis" x1="{MARGIN_LEFT}" y1="{rows_bottom}" x2="{}" y2="{rows_bottom}" stroke="#000"/>"##,
        x(horizon)
    )
    .unwrap();
    let step = tick_step(horizon);
    let mut ticks: Vec<u32> = (0..=horizon).step_by(step as usize).collect();
    if ticks.last() != Some(&horizon) {
        ticks.push(horizon);
    }
    for t in ticks {
        writeln!(
            svg,
            r##"<line class="tick" x1="{0}" y1="{rows_bottom}" x2="{0}" y2="{1}" stroke="#000"/><text class="tick-label" x="{0}" y="{2}" font-size="{font}" text-anchor="middle">{t}</text>"##,
            x(t),
            rows_bottom + 4.0,
            rows_bottom + 6.0 + font
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
