//! End-to-end synthesis on a toy plant small enough to read in full.
//!
//! The plant is a scalar integrator `dx/dt = u` on `[-1, 1]` with controls
//! `{-1, -1/2, 1/2, 1}`, quantized into 16 cells. The controller only ever
//! learns which cell the state is in, and only when the state leaves the
//! event box around the current cell. The example builds the transition
//! hypergraph, solves the worst-case game, prints the value function next
//! to the chosen control per cell, and closes the loop from `x = 0.9`.
//!
//! Run with `cargo run --example tiny_grid`.

use qevent::dynamics::{ControlGrid, Plant};
use qevent::partition::{AxisBox, Grid, SamplingScheme};
use qevent::simulate::{run_closed_loop, BaseFeedback};
use qevent::solver::minmax_dijkstra;
use qevent::TransitionHypergraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = AxisBox::new(vec![-1.0], vec![1.0])?;
    let plant = Plant::new(
        domain.clone(),
        ControlGrid::new(vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]])?,
        0.02, // sample period T
        2,    // integrator substeps per period
        1.0,  // event box = the cell itself
        500,  // plant steps allowed per event
        |x, u, dx| {
            let _ = x;
            dx[0] = u[0];
        },
        // Running cost: one per unit time plus a mild effort term, so the
        // half-speed controls are worth considering.
        |_x, u, t| t * (1.0 + 0.5 * u[0] * u[0]),
    )?;
    let grid = Grid::new(domain, vec![16])?;

    // Two middle cells as the target: [-0.125, 0.125].
    let target = AxisBox::new(vec![-0.125], vec![0.125])?;
    let target_cells = grid.target_cells(&target);
    let targets: Vec<u32> = target_cells.iter().map(|c| c.0 as u32).collect();
    println!("target cells: {targets:?}");

    let (graph, report) = TransitionHypergraph::build(
        &plant,
        &grid,
        SamplingScheme::new(2)?,
        &target_cells,
    )?;
    println!(
        "{} cells, {} controls, {} hyperedges kept, {} discarded\n",
        graph.n_nodes(),
        graph.n_controls(),
        graph.n_edges(),
        report.discarded_total()
    );

    let solution = minmax_dijkstra(&graph, &targets);
    println!("cell   center      V(cell)   control");
    for cell in 0..graph.n_nodes() {
        let center = grid.cell_center_radius(qevent::CellId(cell)).0[0];
        let v = solution.v[cell];
        let u = match solution.u[cell] {
            Some(u) => format!("u[{u}] = {:+.1}", plant.control_grid.value(u as usize)[0]),
            None => "target".to_string(),
        };
        println!("{cell:>4}   {center:+.4}   {v:>8.4}   {u}");
    }

    // Close the loop. Transmissions happen only at events; between them the
    // plant runs open loop on the last control it was sent.
    let feedback = BaseFeedback::from(&solution);
    let run = run_closed_loop(&plant, &grid, &targets, &feedback, &[0.9], None, 50)?;
    println!(
        "\nfrom x = 0.9: {} ({} events, {} switches, cost {:.4}, {:.2} s simulated)",
        run.termination,
        run.events,
        run.switches,
        run.cost,
        run.plant_steps() as f64 * plant.sample_period,
    );
    for s in run.samples.iter().filter(|s| s.event) {
        println!(
            "  t = {:>5.2}  x = {:+.4}  -> control {}",
            s.time,
            s.state[0],
            s.control.map_or("-".to_string(), |u| u.to_string()),
        );
    }
    Ok(())
}
