//! Driving a heated batch reactor to its operating point.
//!
//! State is fluid level and temperature; the inputs are a continuous inflow
//! valve (sampled at 12 positions) and a heater with 7 discrete levels. The
//! tank starts nearly empty and cold and must settle at (0.349 m, 310.56 K).
//! Events fire whenever the state leaves the current cell, so transmissions
//! are frequent and the switch count is what separates the feedbacks.
//!
//! Besides the ordinary and lazy feedbacks this one also runs the one-pass
//! heuristic, which penalizes control mismatch during a single Dijkstra
//! sweep instead of solving the extended game. On this plant the heuristic
//! actually switches more than the ordinary feedback; the extended solve is
//! what buys the big reduction. Plots land in
//! `target/examples/batch_reactor/`.

use std::fs;

use qevent::lazy::{solve_lazy, ExtendedHypergraph};
use qevent::plants::make_benchmark;
use qevent::plot::{control_staircase_svg, phase_portrait_svg};
use qevent::simulate::{
    comparison_table, run_closed_loop, BaseFeedback, ComparisonRow, Feedback,
};
use qevent::solver::{heuristic_dijkstra, minmax_dijkstra, SwitchPenalty};
use qevent::TransitionHypergraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bench = make_benchmark("batch")?;
    let target_cells = bench.grid.target_cells(&bench.target);
    let targets: Vec<u32> = target_cells.iter().map(|c| c.0 as u32).collect();
    println!(
        "target: {:?} x {:?}, {} cells",
        bench.target.lower(),
        bench.target.upper(),
        targets.len()
    );

    let (graph, _) = TransitionHypergraph::build(
        &bench.plant,
        &bench.grid,
        bench.sampling,
        &target_cells,
    )?;

    let base = minmax_dijkstra(&graph, &targets);
    let lazy = solve_lazy(&ExtendedHypergraph::extend(&graph, bench.lambda)?, &targets);
    let heuristic = heuristic_dijkstra(
        &graph,
        &targets,
        bench.lambda,
        SwitchPenalty::WorstSuccessor,
        None,
    );

    let x0 = &bench.initial_states[0];
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let feedbacks: [(&str, &dyn Feedback); 3] = [
        ("ordinary", &BaseFeedback::from(&base)),
        ("lazy", &lazy),
        ("heuristic", &BaseFeedback::from(&heuristic)),
    ];
    for (label, feedback) in feedbacks {
        let run = run_closed_loop(&bench.plant, &bench.grid, &targets, feedback, x0, None, 200)?;
        rows.push(ComparisonRow::from_trajectory(label, &run));
        runs.push((label, run));
    }
    println!("\n{}", comparison_table(&rows));

    let out = std::path::Path::new("target/examples/batch_reactor");
    fs::create_dir_all(out)?;
    let named: Vec<(&str, &qevent::Trajectory)> =
        runs.iter().map(|(l, r)| (*l, r)).collect();
    fs::write(
        out.join("phase.svg"),
        phase_portrait_svg(&bench.grid, Some(&bench.target), &named),
    )?;
    // Valve position (control axis 0) and heater level (axis 1) staircases.
    fs::write(
        out.join("valve.svg"),
        control_staircase_svg(&named, &bench.plant.control_grid, 0),
    )?;
    fs::write(
        out.join("heater.svg"),
        control_staircase_svg(&named, &bench.plant.control_grid, 1),
    )?;
    println!("plots in {}", out.display());
    Ok(())
}
