//! Dynamic-game solvers on transition hypergraphs.
//!
//! The value of a node is its worst-case cost-to-target,
//!
//! ```text
//! V(P) = min over edges (P, u) of [ w(P, u) + max over successors Q of V(Q) ]
//! ```
//!
//! with `V = 0` on the target set: the controller picks the edge, the
//! quantization adversary picks the successor. All weights are positive, so
//! the equation is solved by a Dijkstra variant ([`minmax_dijkstra`]) that
//! relaxes a hyperedge only once *every* node of its target set is final;
//! the inner max is then simply the value of the member finalized last.
//!
//! Determinism: heap ties pop the smaller node id first, edges relax in
//! ascending edge id order (that is, source then control index), and a
//! relaxation only replaces the stored control on a strict improvement.
//! Rebuilding and re-solving a graph therefore reproduces values and
//! feedback tables bit for bit.
//!
//! [`value_iteration_oracle`] solves the same fixed-point equation by
//! Gauss-Seidel sweeps and is used to cross-check the solver, and
//! [`zero_one_bfs_switches`] brute-forces minimal switch counts on
//! deterministic graphs to cross-check the switch oracle built on top of
//! the extended graphs.

use crate::hypergraph::TransitionHypergraph;
use std::collections::{BinaryHeap, VecDeque};

/// Counters from one solver run.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    /// Nodes finalized.
    pub pops: usize,
    /// Hyperedges whose relaxation was evaluated.
    pub relaxations: usize,
    pub wall_seconds: f64,
    /// Whether finalized values came off the heap in nondecreasing order;
    /// anything else indicates a broken invariant.
    pub pop_monotone: bool,
}

/// Values and feedback table from one solver run.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Worst-case cost-to-target per node; infinite when no feedback can
    /// force the target.
    pub v: Vec<f64>,
    /// Control index chosen at each node; `None` on targets and on nodes
    /// that cannot be stabilized.
    pub u: Vec<Option<u32>>,
    pub stats: SolveStats,
}

impl Solution {
    #[must_use]
    pub fn is_stabilizable(&self, node: usize) -> bool {
        self.v[node].is_finite()
    }

    #[must_use]
    pub fn stabilizable_count(&self) -> usize {
        self.v.iter().filter(|v| v.is_finite()).count()
    }
}

/// How the switch-penalty heuristic scores an edge against the feedback
/// already fixed on its successors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchPenalty {
    /// Mismatch with the control of the worst (highest-value) successor,
    /// ties resolved toward the smallest node id.
    WorstSuccessor,
    /// Mean mismatch over all successors.
    MeanMismatch,
}

struct Heuristic {
    lambda: f64,
    penalty: SwitchPenalty,
    /// Control assumed on target nodes when scoring mismatches.
    initial_control: Option<u32>,
}

#[derive(Clone, Copy)]
struct HeapEntry {
    v: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.v.total_cmp(&other.v).is_eq() && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Inverted so the max-heap pops the smallest (value, node id) first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.v.total_cmp(&self.v).then_with(|| other.node.cmp(&self.node))
    }
}

/// Solve the min-max reachability game toward `targets`.
///
/// Panics if a target id is out of range.
#[must_use]
pub fn minmax_dijkstra(g: &TransitionHypergraph, targets: &[u32]) -> Solution {
    solve(g, targets, None)
}

/// One-pass heuristic that biases the relaxation toward reusing the control
/// already chosen on successors: an edge is scored
/// `(1 - lambda) * w + lambda * sigma` where `sigma` is the [`SwitchPenalty`]
/// mismatch. At `lambda = 0` this reduces to [`minmax_dijkstra`] exactly.
/// The resulting values mix cost and switch units and are not worst-case
/// guarantees; only the feedback table is meaningful. When
/// `initial_control` is declared it also becomes the table entry of every
/// target node, so a run starting inside the target set reports it.
///
/// Panics unless `0 <= lambda < 1` and all targets are in range.
#[must_use]
pub fn heuristic_dijkstra(
    g: &TransitionHypergraph,
    targets: &[u32],
    lambda: f64,
    penalty: SwitchPenalty,
    initial_control: Option<u32>,
) -> Solution {
    assert!(
        (0.0..1.0).contains(&lambda),
        "switch penalty weight lambda must lie in [0, 1), got {lambda}"
    );
    solve(g, targets, Some(Heuristic { lambda, penalty, initial_control }))
}

fn solve(g: &TransitionHypergraph, targets: &[u32], heuristic: Option<Heuristic>) -> Solution {
    let started = std::time::Instant::now();
    let n = g.n_nodes();
    let mut v = vec![f64::INFINITY; n];
    let mut u: Vec<Option<u32>> = vec![None; n];
    let mut finalized = vec![false; n];
    let mut is_target = vec![false; n];
    let mut pending: Vec<u32> =
        (0..g.n_edges()).map(|e| g.edge_targets(e).len() as u32).collect();
    let mut heap = BinaryHeap::new();
    for &t in targets {
        assert!((t as usize) < n, "target node {t} out of range");
        if !is_target[t as usize] {
            is_target[t as usize] = true;
            v[t as usize] = 0.0;
            heap.push(HeapEntry { v: 0.0, node: t });
        }
    }

    let mut stats = SolveStats { pop_monotone: true, ..SolveStats::default() };
    let mut last_popped = f64::NEG_INFINITY;
    while let Some(HeapEntry { v: val, node }) = heap.pop() {
        let node_idx = node as usize;
        if finalized[node_idx] {
            continue; // stale heap entry superseded by a later improvement
        }
        debug_assert_eq!(val, v[node_idx]);
        finalized[node_idx] = true;
        stats.pops += 1;
        if val < last_popped {
            stats.pop_monotone = false;
        }
        last_popped = val;

        for &e in g.in_edges(node_idx) {
            let e = e as usize;
            pending[e] -= 1;
            if pending[e] != 0 {
                continue;
            }
            // Every successor is final; this node, finalized last, carries
            // the max value among them.
            let src = g.edge_source(e) as usize;
            if finalized[src] {
                continue;
            }
            stats.relaxations += 1;
            let cand = match &heuristic {
                None => g.edge_weight(e) + val,
                Some(h) => {
                    let sigma = switch_penalty(g, e, h, &u, &is_target, &v);
                    (1.0 - h.lambda) * g.edge_weight(e) + h.lambda * sigma + val
                }
            };
            if cand < v[src] {
                v[src] = cand;
                u[src] = Some(g.edge_control(e));
                heap.push(HeapEntry { v: cand, node: src as u32 });
            }
        }
    }
    if let Some(Heuristic { initial_control: Some(u0), .. }) = heuristic {
        // The declared target control is part of the heuristic's answer:
        // a first transmission from inside the target set reuses it.
        for &t in targets {
            u[t as usize] = Some(u0);
        }
    }
    stats.wall_seconds = started.elapsed().as_secs_f64();
    Solution { v, u, stats }
}

fn switch_penalty(
    g: &TransitionHypergraph,
    e: usize,
    h: &Heuristic,
    u: &[Option<u32>],
    is_target: &[bool],
    v: &[f64],
) -> f64 {
    let ctrl = g.edge_control(e);
    // Finalized non-targets always carry a control; targets fall back to
    // the declared initial control, a bare start (None) never mismatches.
    let mismatch = |node: u32| -> f64 {
        let effective =
            if is_target[node as usize] { h.initial_control } else { u[node as usize] };
        match effective {
            Some(w) if w != ctrl => 1.0,
            _ => 0.0,
        }
    };
    let targets = g.edge_targets(e);
    match h.penalty {
        SwitchPenalty::WorstSuccessor => {
            let mut worst = targets[0];
            for &t in &targets[1..] {
                if v[t as usize] > v[worst as usize] {
                    worst = t;
                }
            }
            mismatch(worst)
        }
        SwitchPenalty::MeanMismatch => {
            targets.iter().map(|&t| mismatch(t)).sum::<f64>() / targets.len() as f64
        }
    }
}

/// Gauss-Seidel solution of the same fixed-point equation, by repeated
/// sweeps until nothing changes. Independent of the heap machinery, so it
/// cross-checks [`minmax_dijkstra`]; with positive weights both compute the
/// unique fixed point and in fact agree bitwise, since every finite value
/// is the same chain of f64 additions.
#[must_use]
pub fn value_iteration_oracle(g: &TransitionHypergraph, targets: &[u32]) -> Vec<f64> {
    let n = g.n_nodes();
    let mut v = vec![f64::INFINITY; n];
    let mut is_target = vec![false; n];
    for &t in targets {
        assert!((t as usize) < n, "target node {t} out of range");
        is_target[t as usize] = true;
        v[t as usize] = 0.0;
    }
    // Values decrease monotonically and settle in at most n sweeps; one
    // extra sweep detects the fixed point.
    for _ in 0..n + 2 {
        let mut changed = false;
        for node in 0..n {
            if is_target[node] {
                continue;
            }
            let mut best = f64::INFINITY;
            for e in g.out_edges(node) {
                let mut sup = f64::NEG_INFINITY;
                for &t in g.edge_targets(e) {
                    sup = sup.max(v[t as usize]);
                }
                let cand = g.edge_weight(e) + sup;
                if cand < best {
                    best = cand;
                }
            }
            if best != v[node] {
                v[node] = best;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
    unreachable!("value iteration exceeded its sweep bound; weights must be positive")
}

/// Minimum number of control changes needed to drive a *deterministic*
/// graph (every target set a singleton) from `start` into the target set,
/// given that `w0` is already applied. `None` when no control sequence
/// reaches a target. Brute-force 0-1 BFS over (node, previous control)
/// states, sharing nothing with the game solvers.
///
/// Panics if any edge has more than one successor.
#[must_use]
pub fn zero_one_bfs_switches(
    g: &TransitionHypergraph,
    targets: &[u32],
    start: u32,
    w0: u32,
) -> Option<usize> {
    let n = g.n_nodes();
    let m = g.n_controls();
    assert!((start as usize) < n, "start node out of range");
    assert!((w0 as usize) < m, "initial control out of range");
    let mut is_target = vec![false; n];
    for &t in targets {
        is_target[t as usize] = true;
    }
    if is_target[start as usize] {
        return Some(0);
    }
    let idx = |node: u32, prev: u32| node as usize * m + prev as usize;
    let mut dist = vec![usize::MAX; n * m];
    let mut deque: VecDeque<(usize, u32, u32)> = VecDeque::new();
    dist[idx(start, w0)] = 0;
    deque.push_back((0, start, w0));
    let mut best: Option<usize> = None;
    while let Some((d, node, prev)) = deque.pop_front() {
        if d > dist[idx(node, prev)] {
            continue;
        }
        if best.is_some_and(|b| d >= b) {
            continue;
        }
        for e in g.out_edges(node as usize) {
            let successors = g.edge_targets(e);
            assert_eq!(successors.len(), 1, "switch BFS needs a deterministic graph");
            let next = successors[0];
            let ctrl = g.edge_control(e);
            let nd = d + usize::from(ctrl != prev);
            if is_target[next as usize] {
                if best.is_none_or(|b| nd < b) {
                    best = Some(nd);
                }
                continue;
            }
            if nd < dist[idx(next, ctrl)] {
                dist[idx(next, ctrl)] = nd;
                if nd == d {
                    deque.push_front((nd, next, ctrl));
                } else {
                    deque.push_back((nd, next, ctrl));
                }
            }
        }
    }
    best
}
