//! What the one-pass heuristic buys, and what it gives up.
//!
//! The extended game behind the lazy feedback multiplies the node count by
//! the number of controls: the pendulum's 16384 cells become 278528 pairs.
//! The heuristic stays on the base graph and only biases each relaxation
//! against controls that disagree with the successor already finalized, in
//! one of two flavors: mismatch with the control of the worst successor, or
//! the mean mismatch over all of them.
//!
//! That single pass cuts switches well below the ordinary feedback here,
//! with the solve touching an order of magnitude fewer nodes than the
//! extended game. The lazy feedback still wins on switches; see the
//! `counterexample` example for why no single-pass scheme can close that
//! gap in general.

use qevent::lazy::{solve_lazy, ExtendedHypergraph};
use qevent::plants::make_benchmark;
use qevent::simulate::{run_closed_loop, BaseFeedback, Feedback};
use qevent::solver::{heuristic_dijkstra, minmax_dijkstra, SwitchPenalty};
use qevent::TransitionHypergraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bench = make_benchmark("pendulum")?;
    let target_cells = bench.grid.target_cells(&bench.target);
    let targets: Vec<u32> = target_cells.iter().map(|c| c.0 as u32).collect();
    let (graph, _) = TransitionHypergraph::build(
        &bench.plant,
        &bench.grid,
        bench.sampling,
        &target_cells,
    )?;
    let x0 = &bench.initial_states[0];

    let base = minmax_dijkstra(&graph, &targets);
    let lazy = solve_lazy(&ExtendedHypergraph::extend(&graph, bench.lambda)?, &targets);

    println!("feedback          pops   switches  events   outcome");
    let report = |label: &str, pops: usize, fb: &dyn Feedback| {
        let run = run_closed_loop(&bench.plant, &bench.grid, &targets, fb, x0, None, 200)
            .expect("closed loop runs");
        println!(
            "{label:<16} {pops:>7}   {:>8}  {:>6}   {}",
            run.switches, run.events, run.termination
        );
    };
    report("ordinary", base.stats.pops, &BaseFeedback::from(&base));
    for (label, penalty) in [
        ("heuristic/worst", SwitchPenalty::WorstSuccessor),
        ("heuristic/mean", SwitchPenalty::MeanMismatch),
    ] {
        let h = heuristic_dijkstra(&graph, &targets, bench.lambda, penalty, None);
        report(label, h.stats.pops, &BaseFeedback::from(&h));
    }
    report("lazy", lazy.stats.pops, &lazy);
    Ok(())
}
