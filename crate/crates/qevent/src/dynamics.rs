//! Sampled plant dynamics and the event map.
//!
//! A [`Plant`] couples an autonomous vector field `dx/dt = f(x, u)` with a
//! running cost `q(x, u, t)` and a sampling period `T`. One *plant step*
//! advances the state by `T` using a fixed number of classical RK4 substeps
//! and integrates the running cost with the composite trapezoid rule over
//! the substep nodes; the `t` passed to the cost is the time elapsed since
//! the start of that plant step, so step costs do not depend on absolute
//! time.
//!
//! The *event map* iterates plant steps while the trajectory stays inside
//! the event box of the cell where the last event occurred:
//!
//! ```text
//! beta(P) = { y in domain : |y_i - center_i(P)| <= event_radius * radius_i(P) }
//! ```
//!
//! The event fires at the first sampling instant where the state has left
//! `beta(P)` (leaving the plant domain also counts, since the box is
//! intersected with it). [`EventStep::steps`] is the number `r >= 1` of
//! plant steps taken, [`EventStep::cost`] the summed step costs of those
//! steps. If the trajectory never leaves within `max_event_steps`, the map
//! reports `r = 0` with zero cost and the state unchanged: no event would
//! ever be transmitted.

use crate::partition::{AxisBox, CellId, Grid};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state or cost became non-finite during integration (plant step {step})")]
    NumericalFailure { step: usize },
    #[error("point lies outside the plant domain")]
    OutsideDomain,
    #[error("control grid must be non-empty, finite, dimensionally consistent, and duplicate-free")]
    MalformedControlGrid,
    #[error("plant needs T > 0, >= 1 RK4 substeps, event radius >= 1, and a positive event horizon")]
    MalformedPlant,
}

// ── Control grid ────────────────────────────────────────────────────────────

/// Finite set of admissible control values; the index <-> value mapping is a
/// bijection, and feedback tables store indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    values: Vec<Vec<f64>>,
    dim: usize,
}

impl ControlGrid {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, DynamicsError> {
        let dim = match values.first() {
            Some(v) if !v.is_empty() => v.len(),
            _ => return Err(DynamicsError::MalformedControlGrid),
        };
        for v in &values {
            if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                return Err(DynamicsError::MalformedControlGrid);
            }
        }
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                if values[i] == values[j] {
                    return Err(DynamicsError::MalformedControlGrid);
                }
            }
        }
        Ok(Self { values, dim })
    }

    /// `n` equidistant scalar values spanning `[lo, hi]`, endpoints included.
    pub fn equidistant(lo: f64, hi: f64, n: usize) -> Result<Self, DynamicsError> {
        if n == 0 || !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(DynamicsError::MalformedControlGrid);
        }
        let values = if n == 1 {
            vec![vec![0.5 * (lo + hi)]]
        } else {
            (0..n)
                .map(|i| {
                    let v = if i == n - 1 {
                        hi
                    } else {
                        lo + i as f64 * (hi - lo) / (n - 1) as f64
                    };
                    vec![v]
                })
                .collect()
        };
        Self::new(values)
    }

    /// Cartesian product; index of `(a_i, b_j)` is `i * b.len() + j`.
    pub fn product(a: &ControlGrid, b: &ControlGrid) -> Result<Self, DynamicsError> {
        let mut values = Vec::with_capacity(a.len() * b.len());
        for va in &a.values {
            for vb in &b.values {
                let mut v = va.clone();
                v.extend_from_slice(vb);
                values.push(v);
            }
        }
        Self::new(values)
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn value(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.iter().map(Vec::as_slice)
    }
}

// ── Plant ───────────────────────────────────────────────────────────────────

type FieldFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type CostFn = dyn Fn(&[f64], &[f64], f64) -> f64 + Send + Sync;

/// A sampled plant: vector field, running cost, domain, control grid, and
/// the event parameters.
pub struct Plant {
    vector_field: Box<FieldFn>,
    inst_cost: Box<CostFn>,
    pub domain: AxisBox,
    pub control_grid: ControlGrid,
    /// Sampling period `T` of one plant step.
    pub sample_period: f64,
    /// RK4 substeps per plant step.
    pub rk4_substeps: usize,
    /// Event box half-width in units of the cell half-width; `>= 1` so the
    /// box always contains the cell where the event occurred.
    pub event_radius: f64,
    /// Plant steps after which a silent trajectory is declared event-free.
    pub max_event_steps: usize,
}

impl std::fmt::Debug for Plant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plant")
            .field("domain", &self.domain)
            .field("controls", &self.control_grid.len())
            .field("sample_period", &self.sample_period)
            .field("rk4_substeps", &self.rk4_substeps)
            .field("event_radius", &self.event_radius)
            .field("max_event_steps", &self.max_event_steps)
            .finish()
    }
}

impl Plant {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: AxisBox,
        control_grid: ControlGrid,
        sample_period: f64,
        rk4_substeps: usize,
        event_radius: f64,
        max_event_steps: usize,
        vector_field: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        inst_cost: impl Fn(&[f64], &[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, DynamicsError> {
        if !(sample_period.is_finite() && sample_period > 0.0)
            || rk4_substeps == 0
            || !(event_radius.is_finite() && event_radius >= 1.0)
            || max_event_steps == 0
        {
            return Err(DynamicsError::MalformedPlant);
        }
        Ok(Self {
            vector_field: Box::new(vector_field),
            inst_cost: Box::new(inst_cost),
            domain,
            control_grid,
            sample_period,
            rk4_substeps,
            event_radius,
            max_event_steps,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Evaluate the vector field into `out`.
    pub fn eval_field(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        (self.vector_field)(x, u, out);
    }

    /// Evaluate the running cost; `t` is elapsed time within the plant step.
    #[must_use]
    pub fn eval_cost(&self, x: &[f64], u: &[f64], t: f64) -> f64 {
        (self.inst_cost)(x, u, t)
    }
}

// ── Integration ─────────────────────────────────────────────────────────────

/// Reusable RK4 buffers; one per worker, sized to the plant dimension.
pub(crate) struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }
}

/// Advance `x` in place by one plant step of `T`; returns the step cost.
/// `step_index` only labels the error on numerical failure.
pub(crate) fn plant_step(
    plant: &Plant,
    x: &mut [f64],
    u: &[f64],
    ws: &mut Workspace,
    step_index: usize,
) -> Result<f64, DynamicsError> {
    let m = plant.rk4_substeps;
    let h = plant.sample_period / m as f64;
    let dim = x.len();
    let mut cost = 0.0;
    for j in 0..m {
        let t = j as f64 * h;
        let weight = if j == 0 { 0.5 * h } else { h };
        cost += weight * plant.eval_cost(x, u, t);

        plant.eval_field(x, u, &mut ws.k1);
        for i in 0..dim {
            ws.stage[i] = x[i] + 0.5 * h * ws.k1[i];
        }
        plant.eval_field(&ws.stage, u, &mut ws.k2);
        for i in 0..dim {
            ws.stage[i] = x[i] + 0.5 * h * ws.k2[i];
        }
        plant.eval_field(&ws.stage, u, &mut ws.k3);
        for i in 0..dim {
            ws.stage[i] = x[i] + h * ws.k3[i];
        }
        plant.eval_field(&ws.stage, u, &mut ws.k4);
        for i in 0..dim {
            x[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
        }
    }
    cost += 0.5 * h * plant.eval_cost(x, u, plant.sample_period);
    if !cost.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NumericalFailure { step: step_index });
    }
    Ok(cost)
}

/// State after one plant step of `T` from `x` under control value `u`.
pub fn rk4_flow(plant: &Plant, x: &[f64], u: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let mut y = x.to_vec();
    plant_step(plant, &mut y, u, &mut Workspace::new(x.len()), 0)?;
    Ok(y)
}

/// Running cost accumulated over one plant step from `x` under `u`.
pub fn step_cost(plant: &Plant, x: &[f64], u: &[f64]) -> Result<f64, DynamicsError> {
    let mut y = x.to_vec();
    plant_step(plant, &mut y, u, &mut Workspace::new(x.len()), 0)
}

// ── Event map ───────────────────────────────────────────────────────────────

/// Result of advancing the plant until the next event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStep {
    /// Number of plant steps until the event, or 0 when no event occurs
    /// within the horizon (the state then stays at the start).
    pub steps: usize,
    /// State at the event instant.
    pub x_next: Vec<f64>,
    /// Summed step costs of the `steps` plant steps taken.
    pub cost: f64,
    /// Whether the event instant lies outside the plant domain.
    pub left_domain: bool,
}

#[inline]
fn inside_event_box(x: &[f64], center: &[f64], half: &[f64], domain: &AxisBox) -> bool {
    for i in 0..x.len() {
        if (x[i] - center[i]).abs() > half[i]
            || x[i] < domain.lower()[i]
            || x[i] > domain.upper()[i]
        {
            return false;
        }
    }
    true
}

/// Event map from `x`, using the event box of the cell `x` lies in.
pub fn event_step(
    plant: &Plant,
    grid: &Grid,
    x: &[f64],
    u: &[f64],
) -> Result<EventStep, DynamicsError> {
    let cell = grid.locate(x).ok_or(DynamicsError::OutsideDomain)?;
    event_step_in(plant, grid, cell, x, u)
}

/// Event map with the event box taken from an explicit cell. The graph
/// builder needs this: cell samples include upper corners, which locate
/// into the neighboring cell, yet the event box must be the one of the
/// cell being expanded.
pub fn event_step_in(
    plant: &Plant,
    grid: &Grid,
    cell: CellId,
    x: &[f64],
    u: &[f64],
) -> Result<EventStep, DynamicsError> {
    event_step_traced(plant, grid, cell, x, u, &mut |_, _| {})
}

/// Same as [`event_step_in`], invoking `on_step(k, state)` after each plant
/// step `k = 1..=r` so callers can record the intermediate trajectory.
pub(crate) fn event_step_traced(
    plant: &Plant,
    grid: &Grid,
    cell: CellId,
    x: &[f64],
    u: &[f64],
    on_step: &mut dyn FnMut(usize, &[f64]),
) -> Result<EventStep, DynamicsError> {
    let (center, radius) = grid.cell_center_radius(cell);
    let half: Vec<f64> = radius.iter().map(|r| r * plant.event_radius).collect();
    let mut ws = Workspace::new(x.len());
    let mut y = x.to_vec();
    let mut cost = 0.0;
    for k in 1..=plant.max_event_steps {
        cost += plant_step(plant, &mut y, u, &mut ws, k)?;
        on_step(k, &y);
        if !inside_event_box(&y, &center, &half, &plant.domain) {
            let left_domain = !plant.domain.contains(&y);
            return Ok(EventStep { steps: k, x_next: y, cost, left_domain });
        }
    }
    Ok(EventStep { steps: 0, x_next: x.to_vec(), cost: 0.0, left_domain: false })
}
