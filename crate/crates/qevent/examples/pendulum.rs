//! Pendulum swing-up with rare transmissions.
//!
//! A pendulum on a cart starts hanging down (`phi = pi + 0.5`) and must be
//! driven to the upright region by choosing among 17 cart accelerations.
//! The controller hears from the plant only when the state leaves a box
//! nine cells wide around the last reported cell, so every transmission is
//! precious and every control change doubly so.
//!
//! The example synthesizes the ordinary worst-case feedback and the lazy
//! one (switch penalty `lambda = 0.99`), runs both in closed loop, and
//! writes phase portraits and control staircases next to each other into
//! `target/examples/pendulum/`. The lazy loop reaches the target with a
//! handful of control changes where the ordinary one re-decides at almost
//! every event.
//!
//! Takes roughly half a minute: the transition hypergraph covers 16384
//! cells times 17 controls, each probed by integrating the plant.

use std::fs;

use qevent::lazy::{solve_lazy, ExtendedHypergraph};
use qevent::plants::make_benchmark;
use qevent::plot::{control_staircase_svg, phase_portrait_svg};
use qevent::simulate::{run_closed_loop, BaseFeedback, ComparisonRow, comparison_table};
use qevent::solver::minmax_dijkstra;
use qevent::TransitionHypergraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bench = make_benchmark("pendulum")?;
    let target_cells = bench.grid.target_cells(&bench.target);
    let targets: Vec<u32> = target_cells.iter().map(|c| c.0 as u32).collect();

    println!("building the transition hypergraph…");
    let (graph, report) = TransitionHypergraph::build(
        &bench.plant,
        &bench.grid,
        bench.sampling,
        &target_cells,
    )?;
    println!(
        "  {} edges kept, {} discarded (stalled: {}, escaped: {}, self-loop: {})",
        graph.n_edges(),
        report.discarded_total(),
        report.discarded_stalled,
        report.discarded_left_domain,
        report.discarded_self_loop,
    );

    let base = minmax_dijkstra(&graph, &targets);
    println!(
        "  base game: {} of {} cells stabilizable",
        base.stabilizable_count(),
        graph.n_nodes()
    );
    let ext = ExtendedHypergraph::extend(&graph, bench.lambda)?;
    let lazy = solve_lazy(&ext, &targets);

    let x0 = &bench.initial_states[0];
    let ordinary = run_closed_loop(
        &bench.plant,
        &bench.grid,
        &targets,
        &BaseFeedback::from(&base),
        x0,
        None,
        200,
    )?;
    let lazy_run = run_closed_loop(&bench.plant, &bench.grid, &targets, &lazy, x0, None, 200)?;

    let rows = vec![
        ComparisonRow::from_trajectory("ordinary", &ordinary),
        ComparisonRow::from_trajectory("lazy", &lazy_run),
    ];
    println!("\n{}", comparison_table(&rows));

    let out = std::path::Path::new("target/examples/pendulum");
    fs::create_dir_all(out)?;
    let both = [("ordinary", &ordinary), ("lazy", &lazy_run)];
    fs::write(
        out.join("phase.svg"),
        phase_portrait_svg(&bench.grid, Some(&bench.target), &both),
    )?;
    fs::write(
        out.join("controls.svg"),
        control_staircase_svg(&both, &bench.plant.control_grid, 0),
    )?;
    println!("plots in {}", out.display());
    Ok(())
}
