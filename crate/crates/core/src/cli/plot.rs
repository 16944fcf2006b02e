//! SVG rendering of CSV output.
//!
//! Three kinds: `series` draws observables against time, `simplex` draws the
//! trajectory of every 3-action agent in barycentric coordinates and `cube`
//! draws a 3-agent, 2-action trajectory inside the unit cube.

use std::fmt::Write as _;
use std::io::BufReader;
use std::path::Path;

use super::{CliError, CliResult};
use crate::integrate::{read_trajectory_csv, Trajectory};
use crate::observe::{read_observables_csv, ObservableSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Series,
    Simplex,
    Cube,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Six significant digits.
fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<rect width="100%" height="100%" fill="white"/>"#
    )
    .unwrap();
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, extra: &str) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" {extra}points="{}"/>"#,
        coords.join(" ")
    )
    .unwrap();
}

fn text(out: &mut String, x: f64, y: f64, anchor: &str, s: &str) {
    let s = s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{s}</text>"#
    )
    .unwrap();
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart of `(label, series)` pairs against time.
pub fn render_series(curves: &[(String, ObservableSeries)]) -> CliResult<String> {
    if curves.is_empty() || curves.iter().all(|(_, s)| s.times.is_empty()) {
        return Err(CliError::config("nothing to plot"));
    }
    let (t0, t1) = bounds(curves.iter().flat_map(|(_, s)| s.times.iter().copied()));
    let (v0, v1) = bounds(curves.iter().flat_map(|(_, s)| s.values.iter().copied()));
    let px = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - (v - v0) / (v1 - v0) * (H - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, W, H);
    writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
    text(&mut out, MARGIN, H - MARGIN + 16.0, "middle", &label(t0));
    text(&mut out, W - MARGIN, H - MARGIN + 16.0, "middle", &label(t1));
    text(&mut out, W / 2.0, H - 15.0, "middle", "t");
    text(&mut out, MARGIN - 4.0, H - MARGIN, "end", &label(v0));
    text(&mut out, MARGIN - 4.0, MARGIN + 4.0, "end", &label(v1));
    for (k, (name, s)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64)> = s
            .times
            .iter()
            .zip(&s.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&t, &v)| (px(t), py(v)))
            .collect();
        polyline(&mut out, &pts, color, "");
        let ly = MARGIN + 14.0 * k as f64 + 12.0;
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            W - MARGIN - 150.0,
            ly - 4.0,
            W - MARGIN - 130.0,
            ly - 4.0
        )
        .unwrap();
        text(&mut out, W - MARGIN - 125.0, ly, "start", name);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One barycentric triangle per 3-action agent.
pub fn render_simplex(traj: &Trajectory) -> CliResult<String> {
    let first = traj.x_states.first().ok_or_else(|| CliError::config("empty trajectory"))?;
    let agents: Vec<usize> = first.dims().iter().enumerate().filter(|(_, d)| **d == 3).map(|(i, _)| i).collect();
    if agents.is_empty() {
        return Err(CliError::config("simplex plots need at least one agent with 3 actions"));
    }
    let side = 300.0;
    let cell = side + 2.0 * 40.0;
    let height = side * 3f64.sqrt() / 2.0;
    let width = cell * agents.len() as f64;
    let total_h = height + 100.0;
    let mut out = String::new();
    header(&mut out, width, total_h);
    for (k, &agent) in agents.iter().enumerate() {
        let ox = cell * k as f64 + 40.0;
        let oy = 40.0 + height;
        // vertices for actions 0, 1, 2
        let v = [(ox, oy), (ox + side, oy), (ox + side / 2.0, oy - height)];
        let map = |p: &[f64]| {
            (
                p[0] * v[0].0 + p[1] * v[1].0 + p[2] * v[2].0,
                p[0] * v[0].1 + p[1] * v[1].1 + p[2] * v[2].1,
            )
        };
        polyline(&mut out, &[v[0], v[1], v[2], v[0]], "black", "");
        text(&mut out, v[0].0 - 4.0, v[0].1 + 16.0, "middle", "0");
        text(&mut out, v[1].0 + 4.0, v[1].1 + 16.0, "middle", "1");
        text(&mut out, v[2].0, v[2].1 - 6.0, "middle", "2");
        text(&mut out, ox + side / 2.0, oy + 40.0, "middle", &format!("agent {agent}"));
        let pts: Vec<(f64, f64)> = traj.x_states.iter().map(|x| map(x.agent(agent))).collect();
        polyline(&mut out, &pts, COLORS[k % COLORS.len()], "");
        let start = pts[0];
        writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#, start.0, start.1).unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Trajectory of `(x^0_0, x^1_0, x^2_0)` in the unit cube, oblique view.
pub fn render_cube(traj: &Trajectory) -> CliResult<String> {
    let first = traj.x_states.first().ok_or_else(|| CliError::config("empty trajectory"))?;
    if first.dims() != [2, 2, 2] {
        return Err(CliError::config(format!(
            "cube plots need 3 agents with 2 actions each, got {:?}",
            first.dims()
        )));
    }
    // fixed orthographic projection, x2 vertical
    let (scale, cx, cy) = (260.0, W / 2.0 - 40.0, H / 2.0 + 150.0);
    let proj = |p: [f64; 3]| {
        let u = p[0] * 0.866 - p[1] * 0.866;
        let v = p[2] * 1.0 + (p[0] + p[1]) * 0.35;
        (cx + scale * u * 0.8, cy - scale * v * 0.8)
    };
    let mut out = String::new();
    header(&mut out, W, H);
    let corners: Vec<[f64; 3]> = (0..8).map(|b| [(b & 1) as f64, ((b >> 1) & 1) as f64, ((b >> 2) & 1) as f64]).collect();
    for a in 0..8 {
        for bit in [1, 2, 4] {
            if a & bit == 0 {
                polyline(&mut out, &[proj(corners[a]), proj(corners[a | bit])], "#888888", "");
            }
        }
    }
    polyline(&mut out, &[proj([0.0, 0.0, 0.0]), proj([1.0, 1.0, 1.0])], "#444444", r#"stroke-dasharray="5,4" "#);
    let pts: Vec<(f64, f64)> = traj
        .x_states
        .iter()
        .map(|x| proj([x.agent(0)[0], x.agent(1)[0], x.agent(2)[0]]))
        .collect();
    polyline(&mut out, &pts, COLORS[0], "");
    writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#, pts[0].0, pts[0].1).unwrap();
    for (axis, p) in [("x0", [1.1, 0.0, 0.0]), ("x1", [0.0, 1.1, 0.0]), ("x2", [0.0, 0.0, 1.1])] {
        let (x, y) = proj(p);
        text(&mut out, x, y, "middle", axis);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn open(path: &Path) -> CliResult<BufReader<std::fs::File>> {
    std::fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::config(format!("reading {}: {e}", path.display())))
}

/// `polygame plot`: reads the inputs, renders and writes `out`.
pub fn plot_command(inputs: &[impl AsRef<Path>], kind: PlotKind, out: &Path, names: &[String]) -> CliResult<()> {
    if inputs.is_empty() {
        return Err(CliError::config("no input files"));
    }
    let svg = match kind {
        PlotKind::Series => {
            let mut curves = Vec::new();
            for p in inputs {
                let p = p.as_ref();
                let all = read_observables_csv(open(p)?)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                let stem = p.parent().and_then(|d| d.file_name()).map(|s| s.to_string_lossy().into_owned());
                for s in all {
                    if names.is_empty() || names.contains(&s.name) {
                        let label = match (&stem, inputs.len()) {
                            (Some(d), n) if n > 1 => format!("{d}/{}", s.name),
                            _ => s.name.clone(),
                        };
                        curves.push((label, s));
                    }
                }
            }
            if curves.is_empty() && !names.is_empty() {
                return Err(CliError::config(format!("no observable named {}", names.join(", "))));
            }
            render_series(&curves)?
        }
        PlotKind::Simplex | PlotKind::Cube => {
            if inputs.len() != 1 {
                return Err(CliError::config("trajectory plots take exactly one CSV"));
            }
            let p = inputs[0].as_ref();
            let traj = read_trajectory_csv(open(p)?).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            if kind == PlotKind::Simplex {
                render_simplex(&traj)?
            } else {
                render_cube(&traj)?
            }
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("creating {}: {e}", dir.display())))?;
    }
    std::fs::write(out, svg).map_err(|e| CliError::runtime(format!("writing {}: {e}", out.display())))
}
