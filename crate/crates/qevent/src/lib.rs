//! Synthesis of stabilizing feedback laws for sampled nonlinear plants whose
//! controller communicates over a quantized, event-driven channel.
//!
//! The plant state is measured through a uniform grid partition: the
//! controller only learns which cell the state is in, and only at *event*
//! instants, when the trajectory leaves a box around the cell where the last
//! event occurred. Between events the control value is held. This turns the
//! closed loop into a finite dynamic game on a directed hypergraph whose
//! nodes are grid cells: applying a control from a cell can land in any of
//! several successor cells (the set depends on where inside the cell the
//! real state was), and the synthesis treats that choice adversarially.
//!
//! The pipeline is:
//!
//! 1. [`partition`]: grid geometry, cell indexing, target-set resolution.
//! 2. [`dynamics`]: fixed-step RK4 flow, running-cost quadrature, and the
//!    event map that advances the plant until it leaves the event box.
//! 3. [`hypergraph`]: sampling-based construction of the transition
//!    hypergraph with per-edge worst-case costs.
//! 4. [`solver`]: min-max Dijkstra over hyperedges, a value-iteration
//!    oracle for cross-checking, and a switch-count oracle.
//! 5. [`lazy`]: the product construction that adds the previously applied
//!    control to the node state, so the solver can trade running cost
//!    against the number of control *changes*; feedbacks synthesized there
//!    switch rarely.
//! 6. [`simulate`]: closed-loop simulation of the true continuous state
//!    under a synthesized feedback, with event/switch/cost accounting.
//! 7. [`plants`]: the two benchmark plants (inverted pendulum on a cart,
//!    heated batch reactor) plus tiny analytic systems used by tests.
//!
//! Most capabilities have a runnable demo under `examples/`; the `qevent`
//! binary exposes the same pipeline as subcommands (`synthesize`,
//! `simulate`, `compare`, `verify`, `dump-graph`).

pub mod checks;
pub mod cli;
pub mod dynamics;
pub mod fixtures;
pub mod hypergraph;
pub mod lazy;
pub mod partition;
pub mod plants;
pub mod plot;
pub mod simulate;
pub mod solver;

pub use dynamics::{ControlGrid, EventStep, Plant};
pub use hypergraph::{BuildReport, Hyperedge, TransitionHypergraph};
pub use lazy::{ExtendedHypergraph, LazyFeedback};
pub use partition::{AxisBox, CellId, Grid, SamplePlacement, SamplingScheme};
pub use simulate::{Feedback, Trajectory};
pub use solver::Solution;
