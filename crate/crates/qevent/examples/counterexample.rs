//! A five-node chain where greedy switch avoidance pays triple.
//!
//! Minimizing control changes is a property of the whole remaining play,
//! not of any single step. This chain makes that concrete. Play starts at
//! node 0 with control 1 already applied and must reach node 4:
//!
//! ```text
//!   0 --u1--> 1 --u0 (0.98)--> 2 --u1 (1.00)--> 3 --u0--> 4
//!               \-u1 (1.00)-/    \-u2 (0.98)-/
//! ```
//!
//! Keeping control 1 through nodes 1 and 2 costs one switch, at the very
//! end. But at each middle node the control that *forces* a change rides
//! the slightly cheaper edge, and any one-pass scheme that scores nodes
//! against already-finalized successors sees only a tie in the penalty
//! term (both options mismatch the successor's control), so the 0.02
//! weight advantage wins and it changes control at every hop: three
//! switches. The extended game sees the whole play and pays one.

use qevent::fixtures::counterexample;
use qevent::lazy::{min_switch_counts, solve_lazy, worst_case_switches, ExtendedHypergraph};
use qevent::solver::{heuristic_dijkstra, SwitchPenalty};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = counterexample();
    println!("edges (source, control, weight, targets):");
    for e in fx.graph.iter_edges() {
        println!(
            "  ({}, u{}, {:.2}, {:?})",
            e.source, e.control, e.weight, e.targets
        );
    }

    let switches_under = |table: &dyn Fn(u32, u32) -> Option<u32>| {
        worst_case_switches(&fx.graph, &fx.targets, table, fx.start, fx.initial_control)
    };

    let lazy = solve_lazy(&ExtendedHypergraph::extend(&fx.graph, 0.99)?, &fx.targets);
    println!(
        "\nextended game feedback: {:?} switches",
        switches_under(&|c, p| lazy.lookup(c, p))
    );

    for (name, penalty) in [
        ("worst-successor", SwitchPenalty::WorstSuccessor),
        ("mean-mismatch", SwitchPenalty::MeanMismatch),
    ] {
        let h = heuristic_dijkstra(
            &fx.graph,
            &fx.targets,
            0.99,
            penalty,
            Some(fx.initial_control),
        );
        println!(
            "heuristic ({name}): {:?} switches",
            switches_under(&|c, _| h.u[c as usize])
        );
    }

    let bound = min_switch_counts(&fx.graph, &fx.targets)?;
    println!(
        "true minimum from (node 0, control 1): {:?}",
        bound.count(fx.start, fx.initial_control)
    );
    Ok(())
}
