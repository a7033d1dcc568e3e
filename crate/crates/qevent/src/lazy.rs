//! Switch-aware synthesis on the extended hypergraph.
//!
//! A feedback over cells alone cannot reason about control *changes*: at an
//! event it sees the cell but not what it chose last time. The product
//! construction fixes that. Extended nodes are pairs (cell, applied
//! control); applying control `c` from (P, w) leads into (Q, c) for every
//! successor Q the base graph allows, and the edge weight blends the two
//! objectives:
//!
//! ```text
//! w_ext = (1 - lambda) * w_base + lambda * [c != w]
//! ```
//!
//! Solving the same min-max game on this graph yields a feedback that
//! consults the applied control and switches only when staying put would
//! endanger stabilization (or, for small `lambda`, cost too much). At
//! `lambda = 0` the construction is the base problem replicated per applied
//! control, and the solver's deterministic tie-breaking makes the result
//! bitwise identical to the base solution.
//!
//! The same product answers the question "how few switches suffice at all":
//! [`min_switch_counts`] charges 1 per switch (plus a vanishing epsilon to
//! keep weights positive) and reads the exact minimum worst-case switch
//! count out of the integer part of the value. [`worst_case_switches`]
//! plays the adversary against an arbitrary feedback table to measure what
//! it actually achieves.

use crate::hypergraph::{GraphError, TransitionHypergraph};
use crate::solver::{minmax_dijkstra, Solution, SolveStats};

/// Product of a base hypergraph with its own control set.
#[derive(Debug, Clone)]
pub struct ExtendedHypergraph {
    graph: TransitionHypergraph,
    base_nodes: usize,
    n_controls: usize,
    lambda: f64,
}

impl ExtendedHypergraph {
    /// Build the product graph with blended weights.
    ///
    /// Panics unless `0 <= lambda < 1`; errors if the product overflows
    /// 32-bit indexing.
    pub fn extend(base: &TransitionHypergraph, lambda: f64) -> Result<Self, GraphError> {
        assert!(
            (0.0..1.0).contains(&lambda),
            "switch penalty weight lambda must lie in [0, 1), got {lambda}"
        );
        let graph = extended_graph(base, |w, switch| {
            (1.0 - lambda) * w + if switch { lambda } else { 0.0 }
        })?;
        Ok(Self {
            graph,
            base_nodes: base.n_nodes(),
            n_controls: base.n_controls(),
            lambda,
        })
    }

    #[must_use]
    pub fn graph(&self) -> &TransitionHypergraph {
        &self.graph
    }

    #[must_use]
    pub fn base_nodes(&self) -> usize {
        self.base_nodes
    }

    #[must_use]
    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    #[must_use]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Extended node id of (cell, applied control).
    #[must_use]
    pub fn node(&self, cell: u32, prev: u32) -> u32 {
        debug_assert!((cell as usize) < self.base_nodes && (prev as usize) < self.n_controls);
        cell * self.n_controls as u32 + prev
    }

    /// Inverse of [`node`](Self::node).
    #[must_use]
    pub fn decode(&self, node: u32) -> (u32, u32) {
        let m = self.n_controls as u32;
        (node / m, node % m)
    }

    /// Extended target set: a target cell absorbs whatever control arrives.
    #[must_use]
    pub fn extend_targets(&self, base_targets: &[u32]) -> Vec<u32> {
        let mut out = Vec::with_capacity(base_targets.len() * self.n_controls);
        for &t in base_targets {
            for w in 0..self.n_controls as u32 {
                out.push(self.node(t, w));
            }
        }
        out
    }
}

/// Product skeleton shared by the blended and the switch-counting weights:
/// nodes (cell, applied control), one edge copy per applied control.
fn extended_graph(
    base: &TransitionHypergraph,
    weight_of: impl Fn(f64, bool) -> f64,
) -> Result<TransitionHypergraph, GraphError> {
    let n = base.n_nodes();
    let m = base.n_controls();
    let n_ext = n.checked_mul(m).ok_or(GraphError::TooLarge)?;
    let e_ext = base.n_edges().checked_mul(m).ok_or(GraphError::TooLarge)?;
    if n_ext > u32::MAX as usize || e_ext > u32::MAX as usize {
        return Err(GraphError::TooLarge);
    }
    let total_targets: usize = (0..base.n_edges()).map(|e| base.edge_targets(e).len()).sum();
    let ext_targets = total_targets.checked_mul(m).ok_or(GraphError::TooLarge)?;
    if ext_targets > u32::MAX as usize {
        return Err(GraphError::TooLarge);
    }

    let mut edge_src = Vec::with_capacity(e_ext);
    let mut edge_ctrl = Vec::with_capacity(e_ext);
    let mut edge_w = Vec::with_capacity(e_ext);
    let mut tgt_off = Vec::with_capacity(e_ext + 1);
    let mut tgt_flat = Vec::with_capacity(ext_targets);
    tgt_off.push(0u32);
    // Ascending (source cell, applied control, base control) keeps the
    // canonical edge order without any sorting pass.
    for p in 0..n {
        for w in 0..m as u32 {
            let src = (p * m) as u32 + w;
            for e in base.out_edges(p) {
                let ctrl = base.edge_control(e);
                edge_src.push(src);
                edge_ctrl.push(ctrl);
                edge_w.push(weight_of(base.edge_weight(e), ctrl != w));
                for &q in base.edge_targets(e) {
                    tgt_flat.push(q * m as u32 + ctrl);
                }
                tgt_off.push(tgt_flat.len() as u32);
            }
        }
    }
    TransitionHypergraph::assemble(n_ext, m, edge_src, edge_ctrl, edge_w, tgt_off, tgt_flat)
}

/// Feedback synthesized on an extended graph: consult with the applied
/// control, switch only when worthwhile.
#[derive(Debug, Clone)]
pub struct LazyFeedback {
    lambda: f64,
    base_nodes: usize,
    n_controls: usize,
    /// Blended worst-case value per extended node.
    pub v: Vec<f64>,
    /// Control per extended node; `None` on targets and unstabilizable
    /// pairs.
    pub table: Vec<Option<u32>>,
    pub stats: SolveStats,
}

/// Solve the min-max game on the extended graph toward the extension of
/// `base_targets`.
#[must_use]
pub fn solve_lazy(ext: &ExtendedHypergraph, base_targets: &[u32]) -> LazyFeedback {
    let targets = ext.extend_targets(base_targets);
    let Solution { v, u, stats } = minmax_dijkstra(ext.graph(), &targets);
    LazyFeedback {
        lambda: ext.lambda(),
        base_nodes: ext.base_nodes(),
        n_controls: ext.n_controls(),
        v,
        table: u,
        stats,
    }
}

impl LazyFeedback {
    /// Reassemble a feedback from stored arrays, as when loading a table
    /// file. Panics when the array lengths disagree with the shape.
    #[must_use]
    pub fn from_parts(
        lambda: f64,
        base_nodes: usize,
        n_controls: usize,
        v: Vec<f64>,
        table: Vec<Option<u32>>,
    ) -> Self {
        assert!(
            (0.0..1.0).contains(&lambda),
            "switch penalty weight lambda must lie in [0, 1), got {lambda}"
        );
        assert_eq!(v.len(), base_nodes * n_controls, "value array has the wrong length");
        assert_eq!(table.len(), v.len(), "control table has the wrong length");
        LazyFeedback { lambda, base_nodes, n_controls, v, table, stats: SolveStats::default() }
    }

    #[must_use]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[must_use]
    pub fn base_nodes(&self) -> usize {
        self.base_nodes
    }

    #[must_use]
    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    fn index(&self, cell: u32, prev: u32) -> usize {
        assert!((cell as usize) < self.base_nodes, "cell {cell} out of range");
        assert!((prev as usize) < self.n_controls, "control {prev} out of range");
        cell as usize * self.n_controls + prev as usize
    }

    /// Control for `cell` given that `prev` is applied.
    #[must_use]
    pub fn lookup(&self, cell: u32, prev: u32) -> Option<u32> {
        self.table[self.index(cell, prev)]
    }

    /// Blended worst-case value of (cell, prev).
    #[must_use]
    pub fn value(&self, cell: u32, prev: u32) -> f64 {
        self.v[self.index(cell, prev)]
    }

    /// Hypothetical applied control minimizing the value at `cell`, with
    /// that value; ties toward the smaller index. A run with no prior
    /// control bootstraps into the product space through this pair.
    #[must_use]
    pub fn initial_pair(&self, cell: u32) -> Option<(u32, f64)> {
        let mut best: Option<(f64, u32)> = None;
        for w in 0..self.n_controls as u32 {
            let val = self.value(cell, w);
            if val.is_finite() && best.is_none_or(|(b, _)| val < b) {
                best = Some((val, w));
            }
        }
        best.map(|(val, w)| (w, val))
    }

    /// Control for the very first transmission, when nothing is applied
    /// yet: the table entry at the [`initial_pair`](Self::initial_pair)
    /// choice, so the free initial pick is never charged as a switch. At
    /// that minimum the table control and the hypothetical applied control
    /// coincide whenever the pair is stabilizable.
    #[must_use]
    pub fn best_initial(&self, cell: u32) -> Option<u32> {
        let (w, _) = self.initial_pair(cell)?;
        self.lookup(cell, w)
    }
}

/// Worst-case number of control changes a feedback can be forced into on
/// plays from `start` with `w0` applied, before reaching the target set.
/// The adversary picks successors; `None` when it can keep some play from
/// ever reaching a target (loops, or the feedback steering into a missing
/// edge or returning no control).
#[must_use]
pub fn worst_case_switches(
    base: &TransitionHypergraph,
    base_targets: &[u32],
    select: &dyn Fn(u32, u32) -> Option<u32>,
    start: u32,
    w0: u32,
) -> Option<usize> {
    let n = base.n_nodes();
    let m = base.n_controls();
    assert!((start as usize) < n && (w0 as usize) < m, "start state out of range");
    let mut is_target = vec![false; n];
    for &t in base_targets {
        is_target[t as usize] = true;
    }
    let mut memo: Vec<Option<Option<usize>>> = vec![None; n * m];
    let mut open = vec![false; n * m];
    descend(base, &is_target, select, &mut memo, &mut open, start, w0)
}

fn descend(
    base: &TransitionHypergraph,
    is_target: &[bool],
    select: &dyn Fn(u32, u32) -> Option<u32>,
    memo: &mut [Option<Option<usize>>],
    open: &mut [bool],
    cell: u32,
    prev: u32,
) -> Option<usize> {
    if is_target[cell as usize] {
        return Some(0);
    }
    let m = base.n_controls();
    let idx = cell as usize * m + prev as usize;
    if let Some(done) = memo[idx] {
        return done;
    }
    if open[idx] {
        // The play returned to a state already on the stack: the adversary
        // can cycle forever and the target is never reached.
        memo[idx] = Some(None);
        return None;
    }
    open[idx] = true;
    let result = (|| {
        let ctrl = select(cell, prev)?;
        let e = base.find_edge(cell, ctrl)?;
        let pay = usize::from(ctrl != prev);
        let mut worst = 0usize;
        for &q in base.edge_targets(e) {
            worst = worst.max(descend(base, is_target, select, memo, open, q, ctrl)?);
        }
        Some(pay + worst)
    })();
    open[idx] = false;
    memo[idx] = Some(result);
    result
}

/// Exact minimum worst-case switch counts, per (cell, applied control).
#[derive(Debug, Clone)]
pub struct SwitchBound {
    n_controls: usize,
    counts: Vec<Option<usize>>,
}

impl SwitchBound {
    /// Fewest switches any feedback can guarantee from (cell, prev), or
    /// `None` when the pair is not stabilizable at all.
    #[must_use]
    pub fn count(&self, cell: u32, prev: u32) -> Option<usize> {
        self.counts[cell as usize * self.n_controls + prev as usize]
    }

    /// Fewest switches when the first transmitted control is free.
    #[must_use]
    pub fn minimum_over_initial(&self, cell: u32) -> Option<usize> {
        (0..self.n_controls as u32).filter_map(|w| self.count(cell, w)).min()
    }
}

/// Keeps every extended-graph weight positive without disturbing the
/// integer switch counts; sound while `n_ext * SWITCH_EPS < 1/2`.
const SWITCH_EPS: f64 = 1e-9;

/// Solve for the minimum worst-case switch counts on the product graph:
/// each edge costs 1 if it changes the control and 0 otherwise, plus a
/// vanishing epsilon. Any play visits each extended node at most once
/// before its value is realized, so the epsilon noise stays below one half
/// and the integer part of the value is the exact count.
pub fn min_switch_counts(
    base: &TransitionHypergraph,
    base_targets: &[u32],
) -> Result<SwitchBound, GraphError> {
    let m = base.n_controls();
    let graph = extended_graph(base, |_w, switch| {
        if switch {
            1.0 + SWITCH_EPS
        } else {
            SWITCH_EPS
        }
    })?;
    assert!(
        graph.n_nodes() as f64 * SWITCH_EPS < 0.5,
        "product graph too large for the epsilon offset"
    );
    let mut targets = Vec::with_capacity(base_targets.len() * m);
    for &t in base_targets {
        for w in 0..m as u32 {
            targets.push(t * m as u32 + w);
        }
    }
    let sol = minmax_dijkstra(&graph, &targets);
    let counts = sol
        .v
        .iter()
        .map(|&v| v.is_finite().then(|| v.floor() as usize))
        .collect();
    Ok(SwitchBound { n_controls: m, counts })
}
