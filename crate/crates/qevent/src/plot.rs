//! Self-contained SVG views of closed-loop runs.
//!
//! No plotting dependency: the figures are simple enough that emitting the
//! few SVG primitives by hand is less code than binding a library, and the
//! output stays byte-stable across runs, which the command line relies on
//! when it promises reproducible files. Coordinates are rounded to two
//! decimals purely to keep the files small.

use std::fmt::Write as _;

use crate::dynamics::ControlGrid;
use crate::partition::{AxisBox, Grid};
use crate::simulate::Trajectory;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 52.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Data-to-viewport mapping with the y axis pointing up.
struct Axes {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open_svg(out: &mut String) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    );
}

fn frame(out: &mut String, ax: &Axes, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
         stroke=\"#444444\"/>",
        MARGIN,
        MARGIN,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (v, x, y, anchor) in [
        (ax.x_lo, ax.px(ax.x_lo), HEIGHT - MARGIN + 16.0, "middle"),
        (ax.x_hi, ax.px(ax.x_hi), HEIGHT - MARGIN + 16.0, "middle"),
        (ax.y_lo, MARGIN - 6.0, ax.py(ax.y_lo) + 4.0, "end"),
        (ax.y_hi, MARGIN - 6.0, ax.py(ax.y_hi) + 4.0, "end"),
    ] {
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" fill=\"#444444\">{v}</text>"
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#222222\">{x_label}</text>",
        WIDTH / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#222222\" \
         transform=\"rotate(-90 14 {:.2})\">{y_label}</text>",
        14.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"14\" height=\"4\" fill=\"{}\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" fill=\"#222222\">{label}</text>\n",
            MARGIN + 8.0,
            y - 4.0,
            color(i),
            MARGIN + 26.0,
            y
        );
    }
}

/// Phase portrait of the first two state axes: the domain as the frame, the
/// target box shaded, one polyline per run with dots at event instants and
/// a ring at the start.
#[must_use]
pub fn phase_portrait_svg(
    grid: &Grid,
    target: Option<&AxisBox>,
    trajectories: &[(&str, &Trajectory)],
) -> String {
    assert!(grid.dim() >= 2, "a phase portrait needs at least two state axes");
    let dom = grid.domain();
    let ax = Axes {
        x_lo: dom.lower()[0],
        x_hi: dom.upper()[0],
        y_lo: dom.lower()[1],
        y_hi: dom.upper()[1],
    };
    let mut out = String::new();
    open_svg(&mut out);
    if let Some(t) = target {
        let x = ax.px(t.lower()[0]);
        let y = ax.py(t.upper()[1]);
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#bdeabd\" stroke=\"#3a8f3a\"/>",
            ax.px(t.upper()[0]) - x,
            ax.py(t.lower()[1]) - y
        );
    }
    frame(&mut out, &ax, "x1", "x2");
    for (i, (_, traj)) in trajectories.iter().enumerate() {
        let c = color(i);
        let mut points = String::new();
        for s in &traj.samples {
            let _ = write!(points, "{:.2},{:.2} ", ax.px(s.state[0]), ax.py(s.state[1]));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        for s in traj.samples.iter().filter(|s| s.event) {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{c}\"/>",
                ax.px(s.state[0]),
                ax.py(s.state[1])
            );
        }
        if let Some(s) = traj.samples.first() {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"none\" stroke=\"{c}\" \
                 stroke-width=\"1.5\"/>",
                ax.px(s.state[0]),
                ax.py(s.state[1])
            );
        }
    }
    legend(&mut out, &trajectories.iter().map(|(l, _)| *l).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Control component `control_axis` over time as a staircase, one per run,
/// with ticks on the time axis at event instants.
#[must_use]
pub fn control_staircase_svg(
    trajectories: &[(&str, &Trajectory)],
    controls: &ControlGrid,
    control_axis: usize,
) -> String {
    assert!(control_axis < controls.dim(), "control axis out of range");
    let t_hi = trajectories
        .iter()
        .flat_map(|(_, t)| t.samples.last())
        .map(|s| s.time)
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let mut u_lo = f64::INFINITY;
    let mut u_hi = f64::NEG_INFINITY;
    for u in controls.iter() {
        u_lo = u_lo.min(u[control_axis]);
        u_hi = u_hi.max(u[control_axis]);
    }
    let pad = 0.05 * (u_hi - u_lo).max(1e-9);
    let ax = Axes { x_lo: 0.0, x_hi: t_hi, y_lo: u_lo - pad, y_hi: u_hi + pad };

    let mut out = String::new();
    open_svg(&mut out);
    frame(&mut out, &ax, "t", &format!("u{}", control_axis + 1));
    for (i, (_, traj)) in trajectories.iter().enumerate() {
        let c = color(i);
        let mut path = String::new();
        let mut held: Option<f64> = None;
        for s in &traj.samples {
            let value = s
                .control
                .map(|idx| controls.value(idx as usize)[control_axis])
                .or(held);
            let Some(v) = value else { continue };
            match held {
                None => {
                    let _ = write!(path, "M {:.2} {:.2}", ax.px(s.time), ax.py(v));
                }
                Some(h) => {
                    let _ = write!(path, " H {:.2}", ax.px(s.time));
                    if v != h {
                        let _ = write!(path, " V {:.2}", ax.py(v));
                    }
                }
            }
            held = Some(v);
        }
        if !path.is_empty() {
            let _ = writeln!(
                out,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\"/>"
            );
        }
        for s in traj.samples.iter().filter(|s| s.event) {
            let x = ax.px(s.time);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"{c}\"/>",
                HEIGHT - MARGIN,
                HEIGHT - MARGIN - 7.0
            );
        }
    }
    legend(&mut out, &trajectories.iter().map(|(l, _)| *l).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::AxisBox;
    use crate::simulate::{Termination, TrajectorySample};

    fn sample(step: usize, state: Vec<f64>, control: Option<u32>, event: bool) -> TrajectorySample {
        TrajectorySample {
            step,
            time: step as f64 * 0.5,
            state,
            control,
            event,
            switched: false,
        }
    }

    fn toy_trajectory() -> Trajectory {
        Trajectory {
            samples: vec![
                sample(0, vec![0.8, 0.6], Some(0), true),
                sample(1, vec![0.6, 0.5], Some(0), false),
                sample(2, vec![0.4, 0.4], Some(1), true),
                sample(3, vec![0.2, 0.2], None, true),
            ],
            events: 2,
            switches: 1,
            cost: 1.0,
            termination: Termination::ReachedTarget,
        }
    }

    fn square_grid() -> Grid {
        Grid::new(AxisBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), vec![8, 8]).unwrap()
    }

    #[test]
    fn phase_portrait_is_deterministic_and_complete() {
        let grid = square_grid();
        let target = AxisBox::new(vec![0.0, 0.0], vec![0.25, 0.25]).unwrap();
        let traj = toy_trajectory();
        let views = [("one", &traj), ("two", &traj)];
        let a = phase_portrait_svg(&grid, Some(&target), &views);
        let b = phase_portrait_svg(&grid, Some(&target), &views);
        assert_eq!(a, b, "identical input must render identically");
        assert!(a.starts_with("<svg "));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 2);
        // 3 event dots and 1 start ring per run.
        assert_eq!(a.matches("<circle").count(), 8);
        assert!(a.contains("#bdeabd"), "target box missing");
        assert!(a.contains(">one<") && a.contains(">two<"));
    }

    #[test]
    fn phase_portrait_without_target_has_no_shading() {
        let grid = square_grid();
        let traj = toy_trajectory();
        let svg = phase_portrait_svg(&grid, None, &[("run", &traj)]);
        assert!(!svg.contains("#bdeabd"));
    }

    #[test]
    #[should_panic(expected = "two state axes")]
    fn phase_portrait_rejects_scalar_states() {
        let grid = Grid::new(AxisBox::new(vec![0.0], vec![1.0]).unwrap(), vec![4]).unwrap();
        let traj = toy_trajectory();
        let _ = phase_portrait_svg(&grid, None, &[("run", &traj)]);
    }

    #[test]
    fn staircase_steps_at_control_changes_only() {
        let controls = ControlGrid::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let traj = toy_trajectory();
        let svg = control_staircase_svg(&[("run", &traj)], &controls, 0);
        let svg2 = control_staircase_svg(&[("run", &traj)], &controls, 0);
        assert_eq!(svg, svg2);
        let path = svg
            .lines()
            .find(|l| l.starts_with("<path"))
            .expect("staircase path missing");
        assert_eq!(path.matches(" V ").count(), 1, "one control change, one riser");
        assert_eq!(path.matches(" H ").count(), 3, "one tread per later sample");
        // One tick per event instant.
        assert_eq!(svg.matches("<line x1").count(), 3);
    }

    #[test]
    #[should_panic(expected = "control axis")]
    fn staircase_rejects_missing_control_axis() {
        let controls = ControlGrid::new(vec![vec![-1.0], vec![1.0]]).unwrap();
        let traj = toy_trajectory();
        let _ = control_staircase_svg(&[("run", &traj)], &controls, 1);
    }
}
