//! Benchmark plants and ready-made synthesis setups.
//!
//! Two nonlinear benchmarks are built in:
//!
//! * **Inverted pendulum on a cart** (`pendulum`): swing-up of a pendulum
//!   by accelerating the cart, state `(phi, dphi/dt)`, 17 admissible
//!   accelerations in `[-64, 64]`, and a generous event box
//!   (`event_radius = 9`) so events are rare.
//! * **Heated batch reactor** (`batch`): fluid level and temperature of a
//!   stirred tank, controlled by an inflow valve and a discrete heater
//!   level, driven to an operating point at `(0.349 m, 310.56 K)`.
//!
//! [`make_benchmark`] assembles plant, grid, target region, initial state,
//! and the switch-penalty weight `lambda` used by the lazy synthesis;
//! [`make_benchmark_with`] lets callers override individual knobs.

use crate::dynamics::{ControlGrid, DynamicsError, Plant};
use crate::partition::{AxisBox, Grid, PartitionError, SamplingScheme};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("fluid level {0} m is at or below the 0.26 m model floor")]
    DomainViolation(f64),
    #[error("unknown benchmark '{0}' (available: pendulum, batch)")]
    UnknownBenchmark(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

// ── Inverted pendulum on a cart ─────────────────────────────────────────────

/// Pendulum-on-cart constants; `Default` is the benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    /// Pendulum mass `m` in kg.
    pub pendulum_mass: f64,
    /// Cart mass `M` in kg.
    pub cart_mass: f64,
    /// Pendulum length `l` in m.
    pub length: f64,
    /// Gravity in m/s^2.
    pub gravity: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self { pendulum_mass: 2.0, cart_mass: 8.0, length: 0.5, gravity: 9.8 }
    }
}

impl PendulumParams {
    /// Mass ratio `m / (m + M)`.
    #[must_use]
    pub fn mass_ratio(&self) -> f64 {
        self.pendulum_mass / (self.pendulum_mass + self.cart_mass)
    }
}

/// Pendulum dynamics; `x = (phi, dphi/dt)`, `u` the cart acceleration:
///
/// ```text
/// (4/3 - mr cos^2 phi) phi'' =
///     (g/l) sin phi - (mr/2) phi'^2 sin(2 phi) - u (mr/(m l)) cos phi
/// ```
#[must_use]
pub fn pendulum_field(x: &[f64], u: f64, p: &PendulumParams) -> [f64; 2] {
    let (phi, dphi) = (x[0], x[1]);
    let mr = p.mass_ratio();
    let (sin, cos) = phi.sin_cos();
    let numerator = p.gravity / p.length * sin
        - 0.5 * mr * dphi * dphi * (2.0 * sin * cos)
        - u * mr / (p.pendulum_mass * p.length) * cos;
    [dphi, numerator / (4.0 / 3.0 - mr * cos * cos)]
}

// ── Heated batch reactor ────────────────────────────────────────────────────

/// Batch reactor constants; `Default` is the benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchParams {
    /// Heater power `P_el` in W.
    pub electrical_power: f64,
    /// Fraction of heater power reaching the fluid.
    pub heater_gain: f64,
    /// Specific heat capacity of the fluid in J/(kg K).
    pub heat_capacity: f64,
    /// Gravity in m/s^2.
    pub gravity: f64,
    /// Fluid density in kg/m^3.
    pub density: f64,
    /// Inflow temperature in K.
    pub inflow_temperature: f64,
    /// Outflow coefficient `K_A` in m^2.
    pub outflow_coefficient: f64,
    /// Tank cross-section `A_h` in m^2.
    pub tank_area: f64,
}

impl Default for BatchParams {
    fn default() -> Self {
        Self {
            electrical_power: 3000.0,
            heater_gain: 0.84,
            heat_capacity: 4180.0,
            gravity: 9.81,
            density: 998.0,
            inflow_temperature: 293.15,
            outflow_coefficient: 1.59e-5,
            tank_area: 0.07,
        }
    }
}

/// Valve characteristic: inflow in m^3/s for valve command `u in [0, 1]`.
/// The valve is shut below the 0.2 dead zone.
#[must_use]
pub fn valve_flow(u: f64) -> f64 {
    if u > 0.2 {
        7e-6 * (11.1 * u * u + 13.1 * u + 0.2)
    } else {
        0.0
    }
}

/// Fluid volume in m^3 as a function of the level in m; the affine model is
/// calibrated for levels above 0.26 m.
#[must_use]
pub fn fluid_volume(level: f64) -> f64 {
    0.07 * level - 1.9e-3
}

/// Raw reactor right-hand side without the level-floor check. Yields NaN
/// (and thus a numerical failure upstream) only at the genuine
/// singularities: negative level under the square root or non-positive
/// volume. RK4 stages may transiently probe slightly below 0.26 m at the
/// domain's left edge, where the model is still a smooth continuation.
fn batch_rhs(x: &[f64], u1: f64, u2: f64, p: &BatchParams) -> [f64; 2] {
    let (level, temp) = (x[0], x[1]);
    let inflow = valve_flow(u1);
    let volume = fluid_volume(level);
    let d_level = (inflow - p.outflow_coefficient * (2.0 * p.gravity * level).sqrt()) / p.tank_area;
    let d_temp = if volume > 0.0 {
        (inflow * (p.inflow_temperature - temp)
            + p.electrical_power * p.heater_gain * u2 / (p.density * p.heat_capacity))
            / volume
    } else {
        f64::NAN
    };
    [d_level, d_temp]
}

/// Batch reactor dynamics; `x = (level, temperature)`, `u = (valve, heater)`.
pub fn batch_field(x: &[f64], u: &[f64], p: &BatchParams) -> Result<[f64; 2], PlantError> {
    if x[0] <= 0.26 {
        return Err(PlantError::DomainViolation(x[0]));
    }
    Ok(batch_rhs(x, u[0], u[1], p))
}

// ── Benchmark assembly ──────────────────────────────────────────────────────

/// Everything a synthesis run needs for one named benchmark.
#[derive(Debug)]
pub struct Benchmark {
    pub name: String,
    pub plant: Plant,
    pub grid: Grid,
    /// Target region; its cells are the absorbing nodes of the hypergraph.
    pub target: AxisBox,
    /// Switch-penalty weight for the lazy synthesis.
    pub lambda: f64,
    pub initial_states: Vec<Vec<f64>>,
    /// How cells are sampled when the hypergraph is built. Both benchmarks
    /// default to quadrant midpoints ([`SamplingScheme::centers`] with two
    /// points per axis): corner samples hand the adversary the full cell
    /// diameter, which starves the pendulum swing-up of usable edges, while
    /// a single center point lets plans lean on states the closed loop never
    /// exactly occupies. Midpoints keep both plants honest in both
    /// directions; callers can substitute any other scheme.
    pub sampling: SamplingScheme,
}

/// Optional deviations from a benchmark's published defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkOverrides {
    pub grid_resolution: Option<Vec<usize>>,
    /// Control counts per control axis: `[n]` for the pendulum,
    /// `[n_valve, n_heater]` for the reactor.
    pub control_counts: Option<Vec<usize>>,
    pub sample_period: Option<f64>,
    pub rk4_substeps: Option<usize>,
    pub event_radius: Option<f64>,
    pub max_event_steps: Option<usize>,
    pub lambda: Option<f64>,
    /// Edge length, in cells, of the reactor's target block.
    pub target_block: Option<usize>,
    /// Weight of the quadratic deviation term in the reactor cost.
    pub cost_gain: Option<f64>,
}

/// Build a benchmark with its published defaults.
pub fn make_benchmark(name: &str) -> Result<Benchmark, PlantError> {
    make_benchmark_with(name, &BenchmarkOverrides::default())
}

/// Build a benchmark, then apply `overrides` on top of the defaults.
pub fn make_benchmark_with(name: &str, ov: &BenchmarkOverrides) -> Result<Benchmark, PlantError> {
    match name {
        "pendulum" => pendulum_benchmark(ov),
        "batch" => batch_benchmark(ov),
        other => Err(PlantError::UnknownBenchmark(other.to_string())),
    }
}

fn pendulum_benchmark(ov: &BenchmarkOverrides) -> Result<Benchmark, PlantError> {
    let domain = AxisBox::new(vec![-10.0, -8.0], vec![10.0, 8.0])?;
    let resolution = ov.grid_resolution.clone().unwrap_or_else(|| vec![128, 128]);
    let grid = Grid::new(domain.clone(), resolution)?;
    let n_controls = ov.control_counts.as_ref().map_or(17, |c| c[0]);
    let controls = ControlGrid::equidistant(-64.0, 64.0, n_controls)?;
    let params = PendulumParams::default();
    let plant = Plant::new(
        domain,
        controls,
        ov.sample_period.unwrap_or(0.01),
        ov.rk4_substeps.unwrap_or(5),
        ov.event_radius.unwrap_or(9.0),
        ov.max_event_steps.unwrap_or(1000),
        move |x, u, dx| {
            let d = pendulum_field(x, u[0], &params);
            dx.copy_from_slice(&d);
        },
        |_x, u, t| 0.005 * u[0] * u[0] + t,
    )?;
    Ok(Benchmark {
        name: "pendulum".into(),
        plant,
        grid,
        target: AxisBox::new(vec![-0.625, -0.5], vec![0.625, 0.5])?,
        lambda: ov.lambda.unwrap_or(0.99),
        initial_states: vec![vec![std::f64::consts::PI + 0.5, 0.0]],
        sampling: SamplingScheme::centers(2)?,
    })
}

/// Reactor operating point the cost is centered on.
pub const BATCH_OPERATING_POINT: [f64; 2] = [0.349, 310.56];

fn batch_benchmark(ov: &BenchmarkOverrides) -> Result<Benchmark, PlantError> {
    let domain = AxisBox::new(vec![0.26, 293.15], vec![0.45, 323.15])?;
    let resolution = ov.grid_resolution.clone().unwrap_or_else(|| vec![64, 64]);
    let grid = Grid::new(domain.clone(), resolution)?;
    let counts = ov.control_counts.clone().unwrap_or_else(|| vec![12, 7]);
    let valve = ControlGrid::equidistant(0.0, 1.0, counts[0])?;
    let heater = ControlGrid::equidistant(0.0, 6.0, *counts.get(1).unwrap_or(&7))?;
    let controls = ControlGrid::product(&valve, &heater)?;

    let target = nearest_cell_block(&grid, &BATCH_OPERATING_POINT, ov.target_block.unwrap_or(2));
    let params = BatchParams::default();
    let gain = ov.cost_gain.unwrap_or(0.01);
    // Domain half-widths normalize the deviation so both axes count alike.
    let (r1, r2) = (0.095, 15.0);
    let cost_target = target.clone();
    let plant = Plant::new(
        domain,
        controls,
        ov.sample_period.unwrap_or(1.0),
        ov.rk4_substeps.unwrap_or(5),
        ov.event_radius.unwrap_or(1.0),
        ov.max_event_steps.unwrap_or(1000),
        move |x, u, dx| {
            let d = batch_rhs(x, u[0], u[1], &params);
            dx.copy_from_slice(&d);
        },
        move |x, u, _t| {
            // Zero exactly on the target cells, >= 1 elsewhere: time-to-target
            // dominates, the quadratic term steers toward the operating point.
            if cost_target.contains(x) {
                return 0.0;
            }
            let d1 = (x[0] - BATCH_OPERATING_POINT[0]) / r1;
            let d2 = (x[1] - BATCH_OPERATING_POINT[1]) / r2;
            let h = u[1] / 6.0;
            1.0 + gain * (d1 * d1 + d2 * d2 + u[0] * u[0] + h * h)
        },
    )?;
    Ok(Benchmark {
        name: "batch".into(),
        plant,
        grid,
        target,
        lambda: ov.lambda.unwrap_or(0.9),
        initial_states: vec![vec![0.275, 295.0]],
        sampling: SamplingScheme::centers(2)?,
    })
}

/// The `block`^d cell block whose union is centered nearest to `point`
/// (ties fall to the lower block).
fn nearest_cell_block(grid: &Grid, point: &[f64], block: usize) -> AxisBox {
    let block = block.max(1);
    let mut lower = Vec::with_capacity(grid.dim());
    let mut upper = Vec::with_capacity(grid.dim());
    for axis in 0..grid.dim() {
        let res = grid.resolution()[axis];
        let b = block.min(res);
        let lo = grid.domain().lower()[axis];
        let w = (grid.domain().upper()[axis] - lo) / res as f64;
        let mut best_k = 0usize;
        let mut best_d = f64::INFINITY;
        for k in 0..=res - b {
            let center = lo + (k as f64 + b as f64 / 2.0) * w;
            let d = (center - point[axis]).abs();
            if d < best_d {
                best_d = d;
                best_k = k;
            }
        }
        lower.push(lo + best_k as f64 * w);
        upper.push(lo + (best_k + b) as f64 * w);
    }
    AxisBox::new(lower, upper).expect("block bounds are ordered")
}

// ── Tiny analytic plant for tests and walkthroughs ──────────────────────────

/// 1-D single integrator `dx/dt = u` with unit running cost; exact under
/// RK4, so expected transitions can be worked out by hand.
pub fn scalar_integrator(
    lo: f64,
    hi: f64,
    control_values: &[f64],
    sample_period: f64,
    event_radius: f64,
) -> Result<Plant, PlantError> {
    let controls = ControlGrid::new(control_values.iter().map(|&v| vec![v]).collect())?;
    Ok(Plant::new(
        AxisBox::new(vec![lo], vec![hi])?,
        controls,
        sample_period,
        1,
        event_radius,
        1000,
        |_x, u, dx| dx[0] = u[0],
        |_x, _u, _t| 1.0,
    )?)
}
