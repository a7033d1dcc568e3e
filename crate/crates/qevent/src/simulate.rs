//! Closed-loop simulation of a feedback over the event-driven plant.
//!
//! The loop mirrors the networked setup the synthesis assumes: the
//! controller hears from the quantizer only at events, picks a control
//! index from the cell id (and, for switch-aware feedbacks, the control
//! currently applied), and the plant then runs silently until the state
//! leaves the event box. The recorded trajectory keeps every plant step so
//! transmission instants can be told apart from the silent motion between
//! them.

use std::fmt;
use std::io::{self, Write};

use crate::dynamics::{event_step_traced, ControlGrid, DynamicsError, Plant};
use crate::lazy::LazyFeedback;
use crate::partition::Grid;
use crate::solver::Solution;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// The feedback has no control for a pair the loop reached.
    #[error("no control for cell {cell} with applied control {prev:?}")]
    StabilizationGap { cell: u32, prev: Option<u32> },
    /// The initial state lies outside the partitioned domain.
    #[error("initial state outside the domain")]
    OutsideDomain,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Event-driven control law: cell id in, control index out.
pub trait Feedback {
    /// Control for the observed cell, given the control currently applied
    /// (`None` before the first transmission). `None` means the feedback
    /// cannot stabilize from here.
    fn select(&self, cell: u32, prev: Option<u32>) -> Option<u32>;
}

/// Memoryless table straight out of the base solver.
#[derive(Debug, Clone)]
pub struct BaseFeedback(pub Vec<Option<u32>>);

impl Feedback for BaseFeedback {
    fn select(&self, cell: u32, _prev: Option<u32>) -> Option<u32> {
        self.0[cell as usize]
    }
}

impl From<&Solution> for BaseFeedback {
    fn from(sol: &Solution) -> Self {
        BaseFeedback(sol.u.clone())
    }
}

impl Feedback for LazyFeedback {
    fn select(&self, cell: u32, prev: Option<u32>) -> Option<u32> {
        match prev {
            Some(w) => self.lookup(cell, w),
            None => self.best_initial(cell),
        }
    }
}

/// Why a closed-loop run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The state entered a target cell.
    ReachedTarget,
    /// An event carried the state out of the domain.
    LeftDomain,
    /// No event occurred within the plant's step horizon.
    EventStall,
    /// The event budget ran out first.
    MaxEvents,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::ReachedTarget => "reached target",
            Termination::LeftDomain => "left domain",
            Termination::EventStall => "event stall",
            Termination::MaxEvents => "event budget exhausted",
        })
    }
}

/// One plant step of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    /// Plant step index since the start.
    pub step: usize,
    /// `step` times the sample period.
    pub time: f64,
    pub state: Vec<f64>,
    /// Control index active from this instant on; `None` past the end.
    pub control: Option<u32>,
    /// Whether an event fired at this instant (the initial transmission
    /// counts as one).
    pub event: bool,
    /// Whether the transmission at this instant changed the control.
    pub switched: bool,
}

/// Recorded closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Number of controller consultations (transmissions).
    pub events: usize,
    /// Number of transmissions that changed the control.
    pub switches: usize,
    /// Accumulated running cost over completed events.
    pub cost: f64,
    pub termination: Termination,
}

impl Trajectory {
    #[must_use]
    pub fn reached_target(&self) -> bool {
        self.termination == Termination::ReachedTarget
    }

    /// Plant steps taken in total.
    #[must_use]
    pub fn plant_steps(&self) -> usize {
        self.samples.last().map_or(0, |s| s.step)
    }

    /// Write the run as CSV: `# meta` comment lines, a header, then one row
    /// per plant step with state and control values spelled out.
    pub fn write_csv(
        &self,
        out: &mut dyn Write,
        controls: &ControlGrid,
        meta: &[String],
    ) -> io::Result<()> {
        for line in meta {
            writeln!(out, "# {line}")?;
        }
        let state_dim = self.samples.first().map_or(0, |s| s.state.len());
        write!(out, "k,t")?;
        for i in 1..=state_dim {
            write!(out, ",x{i}")?;
        }
        write!(out, ",u_index")?;
        for i in 1..=controls.dim() {
            write!(out, ",u{i}")?;
        }
        writeln!(out, ",event,switch")?;
        for s in &self.samples {
            write!(out, "{},{}", s.step, s.time)?;
            for v in &s.state {
                write!(out, ",{v}")?;
            }
            match s.control {
                Some(c) => {
                    write!(out, ",{c}")?;
                    for v in controls.value(c as usize) {
                        write!(out, ",{v}")?;
                    }
                }
                None => {
                    for _ in 0..=controls.dim() {
                        write!(out, ",")?;
                    }
                }
            }
            writeln!(out, ",{},{}", u8::from(s.event), u8::from(s.switched))?;
        }
        Ok(())
    }
}

/// Run the event-driven loop from `x0` until the target set is reached,
/// the state escapes, the plant goes silent, or `max_events` transmissions
/// have happened. `w0` is the control applied before the first event, if
/// any; a change away from it counts as a switch.
pub fn run_closed_loop(
    plant: &Plant,
    grid: &Grid,
    targets: &[u32],
    feedback: &dyn Feedback,
    x0: &[f64],
    w0: Option<u32>,
    max_events: usize,
) -> Result<Trajectory, SimError> {
    let mut is_target = vec![false; grid.cell_count()];
    for &t in targets {
        is_target[t as usize] = true;
    }
    let period = plant.sample_period;
    let mut x = x0.to_vec();
    let mut cell = grid.locate(&x).ok_or(SimError::OutsideDomain)?;
    let mut prev = w0;
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut events = 0usize;
    let mut switches = 0usize;
    let mut cost = 0.0;
    // State and step index of the instant whose sample is not final yet:
    // its control and event flag depend on what happens next.
    let mut pending: (usize, Vec<f64>) = (0, x.clone());

    let termination = loop {
        if is_target[cell.0] {
            samples.push(TrajectorySample {
                step: pending.0,
                time: pending.0 as f64 * period,
                state: pending.1,
                control: None,
                event: true,
                switched: false,
            });
            break Termination::ReachedTarget;
        }
        if events == max_events {
            samples.push(TrajectorySample {
                step: pending.0,
                time: pending.0 as f64 * period,
                state: pending.1,
                control: None,
                event: true,
                switched: false,
            });
            break Termination::MaxEvents;
        }
        let Some(ctrl) = feedback.select(cell.0 as u32, prev) else {
            return Err(SimError::StabilizationGap { cell: cell.0 as u32, prev });
        };
        let switched = prev.is_some_and(|w| w != ctrl);
        if switched {
            switches += 1;
        }
        events += 1;
        let event_start = pending.0;
        samples.push(TrajectorySample {
            step: event_start,
            time: event_start as f64 * period,
            state: pending.1,
            control: Some(ctrl),
            event: true,
            switched,
        });

        let u = plant.control_grid.value(ctrl as usize).to_vec();
        let mut traced: Vec<(usize, Vec<f64>)> = Vec::new();
        let step = event_step_traced(plant, grid, cell, &x, &u, &mut |k, xk| {
            traced.push((event_start + k, xk.to_vec()));
        })?;

        if step.steps == 0 {
            // Silent within the horizon: keep the motion for the record,
            // but no event ever fires on it.
            for (k, xk) in traced {
                samples.push(TrajectorySample {
                    step: k,
                    time: k as f64 * period,
                    state: xk,
                    control: Some(ctrl),
                    event: false,
                    switched: false,
                });
            }
            break Termination::EventStall;
        }

        cost += step.cost;
        let (exit, silent) = traced.split_last().expect("an event takes at least one step");
        for (k, xk) in silent {
            samples.push(TrajectorySample {
                step: *k,
                time: *k as f64 * period,
                state: xk.clone(),
                control: Some(ctrl),
                event: false,
                switched: false,
            });
        }
        pending = exit.clone();
        x = step.x_next;
        if step.left_domain {
            samples.push(TrajectorySample {
                step: pending.0,
                time: pending.0 as f64 * period,
                state: pending.1,
                control: None,
                event: true,
                switched: false,
            });
            break Termination::LeftDomain;
        }
        cell = grid.locate(&x).expect("event inside the domain");
        prev = Some(ctrl);
    };

    Ok(Trajectory { samples, events, switches, cost, termination })
}

/// One line of a feedback comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub events: usize,
    pub switches: usize,
    pub cost: f64,
    pub plant_steps: usize,
    pub reached: bool,
}

impl ComparisonRow {
    #[must_use]
    pub fn from_trajectory(label: &str, t: &Trajectory) -> Self {
        ComparisonRow {
            label: label.to_string(),
            events: t.events,
            switches: t.switches,
            cost: t.cost,
            plant_steps: t.plant_steps(),
            reached: t.reached_target(),
        }
    }
}

/// Aligned text table over comparison rows.
#[must_use]
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut width = "feedback".len();
    for r in rows {
        width = width.max(r.label.len());
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<width$}  {:>7}  {:>8}  {:>12}  {:>11}  outcome\n",
        "feedback", "events", "switches", "cost", "plant steps"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>7}  {:>8}  {:>12.4}  {:>11}  {}\n",
            r.label,
            r.events,
            r.switches,
            r.cost,
            r.plant_steps,
            if r.reached { "reached target" } else { "did not reach" }
        ));
    }
    out
}

/// The same comparison as machine-readable CSV.
#[must_use]
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("feedback,events,switches,cost,plant_steps,reached\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.label, r.events, r.switches, r.cost, r.plant_steps, r.reached
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::TransitionHypergraph;
    use crate::lazy::{solve_lazy, ExtendedHypergraph};
    use crate::partition::SamplingScheme;
    use crate::plants::scalar_integrator;
    use crate::solver::minmax_dijkstra;
    use approx::assert_relative_eq;

    /// dx/dt = u on [0, 1], four cells, controls {-1, +1}, T = 0.1.
    fn drift() -> (Plant, Grid) {
        scalar_integrator(0.0, 1.0, &[-1.0, 1.0], 0.1, 1.0)
            .map(|plant| {
                let grid = Grid::new(plant.domain.clone(), vec![4]).unwrap();
                (plant, grid)
            })
            .unwrap()
    }

    fn audit_flags(t: &Trajectory) {
        let flagged = t.samples.iter().filter(|s| s.event).count();
        let expected = match t.termination {
            Termination::EventStall => t.events,
            _ => t.events + 1,
        };
        assert_eq!(flagged, expected, "event flags out of step with the count");
        let switched = t.samples.iter().filter(|s| s.switched).count();
        assert_eq!(switched, t.switches);
        for pair in t.samples.windows(2) {
            assert_eq!(pair[1].step, pair[0].step + 1, "plant steps must be contiguous");
        }
    }

    #[test]
    fn start_on_target_means_no_events() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![None; 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.1], None, 50).unwrap();
        assert_eq!(t.termination, Termination::ReachedTarget);
        assert_eq!(t.events, 0);
        assert_eq!(t.switches, 0);
        assert_eq!(t.cost, 0.0);
        assert_eq!(t.samples.len(), 1);
        assert!(t.samples[0].event);
        assert_eq!(t.samples[0].control, None);
        audit_flags(&t);
    }

    #[test]
    fn drift_run_is_reproduced_step_by_step() {
        let (plant, grid) = drift();
        // Always steer down (control index 0 is u = -1).
        let fb = BaseFeedback(vec![Some(0); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.875], None, 50).unwrap();
        assert_eq!(t.termination, Termination::ReachedTarget);
        assert_eq!(t.events, 3, "cells 3, 2, 1 each trigger one transmission");
        assert_eq!(t.switches, 0);
        assert_eq!(t.samples.len(), 8, "7 plant steps plus the start");
        assert_relative_eq!(t.cost, 0.7, epsilon = 1e-12);
        assert_eq!(t.plant_steps(), 7);
        let event_steps: Vec<usize> =
            t.samples.iter().filter(|s| s.event).map(|s| s.step).collect();
        assert_eq!(event_steps, vec![0, 2, 4, 7]);
        assert_relative_eq!(t.samples[7].state[0], 0.175, epsilon = 1e-12);
        assert_relative_eq!(t.samples[7].time, 0.7, epsilon = 1e-12);
        audit_flags(&t);
    }

    #[test]
    fn changing_away_from_the_applied_control_counts_once() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![Some(0); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.875], Some(1), 50).unwrap();
        assert_eq!(t.events, 3);
        assert_eq!(t.switches, 1, "only the first transmission changes the control");
        assert!(t.samples[0].switched);
        audit_flags(&t);
    }

    #[test]
    fn steering_up_leaves_the_domain() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![Some(1); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.875], None, 50).unwrap();
        assert_eq!(t.termination, Termination::LeftDomain);
        assert_eq!(t.events, 1);
        assert_eq!(t.samples.len(), 3);
        assert!(t.samples[2].state[0] > 1.0);
        assert_eq!(t.samples[2].control, None);
        assert!(!t.reached_target());
        audit_flags(&t);
    }

    #[test]
    fn missing_table_entry_is_a_stabilization_gap() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![Some(0), Some(0), None, Some(0)]);
        let err = run_closed_loop(&plant, &grid, &[0], &fb, &[0.625], None, 50).unwrap_err();
        match err {
            SimError::StabilizationGap { cell: 2, prev: None } => {}
            other => panic!("expected a gap at cell 2, got {other:?}"),
        }
    }

    #[test]
    fn event_budget_cuts_the_run_short() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![Some(0); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.875], None, 2).unwrap();
        assert_eq!(t.termination, Termination::MaxEvents);
        assert_eq!(t.events, 2);
        assert_eq!(t.samples.len(), 5, "two events of two steps each, plus the cut");
        audit_flags(&t);
    }

    #[test]
    fn stall_is_reported_when_no_event_fires() {
        // Event box wider than the domain and a short horizon: the plant
        // never leaves the box, so the loop goes silent.
        let (mut plant, grid) = drift();
        plant.event_radius = 50.0;
        plant.max_event_steps = 4;
        let fb = BaseFeedback(vec![Some(0); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.6], None, 10).unwrap();
        assert_eq!(t.termination, Termination::EventStall);
        assert_eq!(t.events, 1);
        assert_eq!(t.cost, 0.0, "a silent run accrues no event cost");
        assert_eq!(t.samples.len(), 5, "start plus the four silent steps");
        audit_flags(&t);
    }

    #[test]
    fn lazy_feedback_drives_the_loop_through_its_product_table() {
        let (plant, grid) = drift();
        let graph = TransitionHypergraph::build(
            &plant,
            &grid,
            SamplingScheme::default(),
            &[crate::partition::CellId(0)],
        )
        .unwrap()
        .0;
        let ext = ExtendedHypergraph::extend(&graph, 0.5).unwrap();
        let lazy = solve_lazy(&ext, &[0]);
        let t = run_closed_loop(&plant, &grid, &[0], &lazy, &[0.875], None, 50).unwrap();
        assert!(t.reached_target());
        assert_eq!(t.switches, 0, "steering down never changes the control");
        assert_eq!(t.events, 3);
        audit_flags(&t);

        let base = minmax_dijkstra(&graph, &[0]);
        let bt = run_closed_loop(
            &plant,
            &grid,
            &[0],
            &BaseFeedback::from(&base),
            &[0.875],
            None,
            50,
        )
        .unwrap();
        assert!(bt.reached_target());
        assert_relative_eq!(bt.cost, t.cost, epsilon = 1e-12);
    }

    #[test]
    fn csv_dump_round_trips_the_counts() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![Some(0); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.875], None, 50).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &plant.control_grid, &["drift check".to_string()])
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# drift check\nk,t,x1,u_index,u1,event,switch\n"));
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows.len(), 8);
        assert!(rows[0].starts_with("0,0,0.875,0,-1,1,0"));
        let trailer = rows.last().unwrap();
        assert!(trailer.ends_with(",,1,0"), "final row has no control: {trailer}");
        let events: usize = rows
            .iter()
            .filter(|r| r.split(',').nth(5).unwrap() == "1")
            .count();
        assert_eq!(events, t.events + 1);
    }

    #[test]
    fn comparison_outputs_cover_all_rows() {
        let (plant, grid) = drift();
        let fb = BaseFeedback(vec![Some(0); 4]);
        let t = run_closed_loop(&plant, &grid, &[0], &fb, &[0.875], None, 50).unwrap();
        let rows = vec![
            ComparisonRow::from_trajectory("base", &t),
            ComparisonRow {
                label: "idle".to_string(),
                events: 0,
                switches: 0,
                cost: 0.0,
                plant_steps: 0,
                reached: false,
            },
        ];
        let table = comparison_table(&rows);
        assert!(table.contains("base"));
        assert!(table.contains("reached target"));
        assert!(table.contains("did not reach"));
        let csv = comparison_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("base,3,0,"));
    }
}
