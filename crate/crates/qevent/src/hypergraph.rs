//! Transition hypergraphs over grid cells.
//!
//! One hyperedge per (cell, control index) pair: its target set collects
//! every cell the event map can land in when the trajectory starts anywhere
//! in the source cell, and its weight is the worst (largest) event cost seen
//! over the start samples. Nondeterminism from quantization thus lives in
//! the target sets; the solver treats it adversarially.
//!
//! Storage is flat CSR with 32-bit indices: edges sorted by (source,
//! control), target sets sorted ascending, plus an incidence index mapping
//! each node to the edges whose target sets contain it. Construction is
//! deterministic: building the same plant and grid twice yields identical
//! bytes.

use crate::dynamics::{event_step_in, Plant};
use crate::partition::{CellId, Grid, SamplingScheme};
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("hypergraph needs at least one node and one control")]
    Empty,
    #[error("edge {index}: {reason}")]
    MalformedEdge { index: usize, reason: &'static str },
    #[error("edges with source {cell} and control {control} disagree on their targets")]
    DuplicateControl { cell: u32, control: u32 },
    #[error("graph exceeds 32-bit indexing")]
    TooLarge,
    #[error("plant and grid must share the same domain box")]
    DomainMismatch,
    #[error("inconsistent hypergraph: {0}")]
    Corrupt(String),
    #[error("dump line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Edge list accepted by [`TransitionHypergraph::from_edges`]:
/// `(source, control, weight, targets)`.
pub type EdgeList = Vec<(u32, u32, f64, Vec<u32>)>;

/// Borrowed view of one hyperedge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperedge<'a> {
    pub source: u32,
    pub control: u32,
    pub weight: f64,
    /// Successor cells, ascending.
    pub targets: &'a [u32],
}

/// Transition hypergraph in flat CSR form.
///
/// Invariants (checked by [`validate`](Self::validate)): edges strictly
/// sorted by (source, control); weights finite and positive; target sets
/// non-empty, strictly ascending, in range; the out-edge and incidence
/// indices consistent with the edge arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionHypergraph {
    n_nodes: usize,
    n_controls: usize,
    edge_src: Vec<u32>,
    edge_ctrl: Vec<u32>,
    edge_w: Vec<f64>,
    /// Offsets into `tgt_flat`, one slot per edge plus the terminator.
    tgt_off: Vec<u32>,
    tgt_flat: Vec<u32>,
    /// Offsets into edge ids: edges of node `n` are `src_off[n]..src_off[n+1]`.
    src_off: Vec<u32>,
    /// Offsets into `inc_flat`, one slot per node plus the terminator.
    inc_off: Vec<u32>,
    /// Edge ids whose target sets contain the node, ascending.
    inc_flat: Vec<u32>,
}

/// What the graph builder kept and what it threw away.
#[derive(Debug, Clone)]
pub struct BuildReport {
    pub n_cells: usize,
    pub n_target_cells: usize,
    pub n_controls: usize,
    pub samples_per_cell: usize,
    pub edges_kept: usize,
    /// No event within the horizon for some start sample.
    pub discarded_stalled: usize,
    /// Some start sample drove the trajectory out of the domain.
    pub discarded_left_domain: usize,
    /// Integration blew up for some start sample.
    pub discarded_numerical: usize,
    /// The source cell reappeared among the successors.
    pub discarded_self_loop: usize,
    /// Worst-case event cost was not positive.
    pub discarded_zero_weight: usize,
    pub build_seconds: f64,
}

impl BuildReport {
    #[must_use]
    pub fn discarded_total(&self) -> usize {
        self.discarded_stalled
            + self.discarded_left_domain
            + self.discarded_numerical
            + self.discarded_self_loop
            + self.discarded_zero_weight
    }
}

impl std::fmt::Display for BuildReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "cells {} ({} absorbing targets), {} controls, {} samples per cell",
            self.n_cells, self.n_target_cells, self.n_controls, self.samples_per_cell
        )?;
        writeln!(
            f,
            "edges kept {}, discarded {} (stalled {}, left domain {}, numerical {}, self loop {}, zero weight {})",
            self.edges_kept,
            self.discarded_total(),
            self.discarded_stalled,
            self.discarded_left_domain,
            self.discarded_numerical,
            self.discarded_self_loop,
            self.discarded_zero_weight
        )?;
        write!(f, "built in {:.2} s", self.build_seconds)
    }
}

#[derive(Default)]
struct Tally {
    stalled: usize,
    left_domain: usize,
    numerical: usize,
    self_loop: usize,
    zero_weight: usize,
}

impl Tally {
    fn absorb(&mut self, o: &Tally) {
        self.stalled += o.stalled;
        self.left_domain += o.left_domain;
        self.numerical += o.numerical;
        self.self_loop += o.self_loop;
        self.zero_weight += o.zero_weight;
    }
}

impl TransitionHypergraph {
    /// Construct from an explicit edge list. Target sets are sorted and
    /// deduplicated, edges reordered into canonical (source, control) order.
    /// Rejects out-of-range ids, non-positive or non-finite weights, empty
    /// target sets, and duplicate (source, control) pairs.
    pub fn from_edges(
        n_nodes: usize,
        n_controls: usize,
        mut edges: EdgeList,
    ) -> Result<Self, GraphError> {
        if n_nodes == 0 || n_controls == 0 {
            return Err(GraphError::Empty);
        }
        if n_nodes > u32::MAX as usize || edges.len() > u32::MAX as usize {
            return Err(GraphError::TooLarge);
        }
        for (index, (src, ctrl, w, targets)) in edges.iter_mut().enumerate() {
            let fail = |reason| Err(GraphError::MalformedEdge { index, reason });
            if (*src as usize) >= n_nodes {
                return fail("source out of range");
            }
            if (*ctrl as usize) >= n_controls {
                return fail("control out of range");
            }
            if !(w.is_finite() && *w > 0.0) {
                return fail("weight must be finite and positive");
            }
            targets.sort_unstable();
            targets.dedup();
            if targets.is_empty() {
                return fail("empty target set");
            }
            if (*targets.last().unwrap() as usize) >= n_nodes {
                return fail("target out of range");
            }
        }
        edges.sort_by_key(|e| (e.0, e.1));
        // Exact repeats of a (source, control) pair collapse to their
        // cheapest weight (the inf over realizations); a repeat with a
        // different image set is contradictory input.
        let mut merged: EdgeList = Vec::with_capacity(edges.len());
        for e in edges {
            match merged.last_mut() {
                Some(prev) if (prev.0, prev.1) == (e.0, e.1) => {
                    if prev.3 != e.3 {
                        return Err(GraphError::DuplicateControl { cell: e.0, control: e.1 });
                    }
                    prev.2 = prev.2.min(e.2);
                }
                _ => merged.push(e),
            }
        }
        Self::from_canonical_edges(n_nodes, n_controls, merged)
    }

    /// Flatten an already canonical edge list (sorted by (source, control),
    /// targets sorted and deduplicated) into CSR arrays.
    fn from_canonical_edges(
        n_nodes: usize,
        n_controls: usize,
        edges: EdgeList,
    ) -> Result<Self, GraphError> {
        let n_edges = edges.len();
        let total_targets: usize = edges.iter().map(|e| e.3.len()).sum();
        if total_targets > u32::MAX as usize {
            return Err(GraphError::TooLarge);
        }
        let mut edge_src = Vec::with_capacity(n_edges);
        let mut edge_ctrl = Vec::with_capacity(n_edges);
        let mut edge_w = Vec::with_capacity(n_edges);
        let mut tgt_off = Vec::with_capacity(n_edges + 1);
        let mut tgt_flat = Vec::with_capacity(total_targets);
        tgt_off.push(0u32);
        for (src, ctrl, w, targets) in edges {
            edge_src.push(src);
            edge_ctrl.push(ctrl);
            edge_w.push(w);
            tgt_flat.extend_from_slice(&targets);
            tgt_off.push(tgt_flat.len() as u32);
        }
        Self::assemble(n_nodes, n_controls, edge_src, edge_ctrl, edge_w, tgt_off, tgt_flat)
    }

    /// Build the derived indices from edge arrays and validate everything.
    /// Callers guarantee canonical edge order; `validate` re-checks it.
    pub(crate) fn assemble(
        n_nodes: usize,
        n_controls: usize,
        edge_src: Vec<u32>,
        edge_ctrl: Vec<u32>,
        edge_w: Vec<f64>,
        tgt_off: Vec<u32>,
        tgt_flat: Vec<u32>,
    ) -> Result<Self, GraphError> {
        if n_nodes == 0 || n_controls == 0 {
            return Err(GraphError::Empty);
        }
        if n_nodes > u32::MAX as usize
            || edge_src.len() > u32::MAX as usize
            || tgt_flat.len() > u32::MAX as usize
        {
            return Err(GraphError::TooLarge);
        }
        let n_edges = edge_src.len();
        if edge_ctrl.len() != n_edges
            || edge_w.len() != n_edges
            || tgt_off.len() != n_edges + 1
            || tgt_off.first() != Some(&0)
            || tgt_off.last().copied() != Some(tgt_flat.len() as u32)
        {
            return Err(GraphError::Corrupt("edge array lengths disagree".into()));
        }

        // Out-edge index: edges are sorted by source, so counting suffices.
        let mut src_off = vec![0u32; n_nodes + 1];
        for &s in &edge_src {
            if (s as usize) >= n_nodes {
                return Err(GraphError::Corrupt(format!("edge source {s} out of range")));
            }
            src_off[s as usize + 1] += 1;
        }
        for n in 0..n_nodes {
            src_off[n + 1] += src_off[n];
        }

        // Incidence index: counting pass, prefix sums, then a fill pass that
        // visits edges in id order so each node's list ends up ascending.
        let mut inc_off = vec![0u32; n_nodes + 1];
        for &t in &tgt_flat {
            if (t as usize) >= n_nodes {
                return Err(GraphError::Corrupt(format!("edge target {t} out of range")));
            }
            inc_off[t as usize + 1] += 1;
        }
        for n in 0..n_nodes {
            inc_off[n + 1] += inc_off[n];
        }
        let mut cursor: Vec<u32> = inc_off[..n_nodes].to_vec();
        let mut inc_flat = vec![0u32; tgt_flat.len()];
        for e in 0..n_edges {
            for i in tgt_off[e] as usize..tgt_off[e + 1] as usize {
                let t = tgt_flat[i] as usize;
                inc_flat[cursor[t] as usize] = e as u32;
                cursor[t] += 1;
            }
        }

        let g = Self {
            n_nodes,
            n_controls,
            edge_src,
            edge_ctrl,
            edge_w,
            tgt_off,
            tgt_flat,
            src_off,
            inc_off,
            inc_flat,
        };
        g.validate()?;
        Ok(g)
    }

    /// Expand every non-target cell of the grid through the event map and
    /// collect the surviving hyperedges. Cells in `targets` are absorbing
    /// and get no outgoing edges. A (cell, control) pair is dropped entirely
    /// when any start sample stalls, leaves the domain, or fails
    /// numerically, and when the successor set degenerates; the report
    /// counts each reason.
    pub fn build(
        plant: &Plant,
        grid: &Grid,
        scheme: SamplingScheme,
        targets: &[CellId],
    ) -> Result<(Self, BuildReport), GraphError> {
        if plant.domain.lower() != grid.domain().lower()
            || plant.domain.upper() != grid.domain().upper()
        {
            return Err(GraphError::DomainMismatch);
        }
        let n = grid.cell_count();
        let n_controls = plant.control_grid.len();
        if n_controls == 0 {
            return Err(GraphError::Empty);
        }
        if n > u32::MAX as usize {
            return Err(GraphError::TooLarge);
        }
        let mut is_target = vec![false; n];
        for &CellId(c) in targets {
            if c >= n {
                return Err(GraphError::Corrupt(format!("target cell {c} out of range")));
            }
            is_target[c] = true;
        }
        let n_target_cells = is_target.iter().filter(|&&t| t).count();

        let started = std::time::Instant::now();
        let work: Vec<u32> = (0..n as u32).filter(|&c| !is_target[c as usize]).collect();
        let per_cell: Vec<(EdgeList, Tally)> = work
            .par_iter()
            .map(|&cell| expand_cell(plant, grid, scheme, cell))
            .collect();

        let mut edges = Vec::new();
        let mut tally = Tally::default();
        for (cell_edges, cell_tally) in &per_cell {
            edges.extend_from_slice(cell_edges);
            tally.absorb(cell_tally);
        }
        let report = BuildReport {
            n_cells: n,
            n_target_cells,
            n_controls,
            samples_per_cell: scheme.per_axis.pow(grid.dim() as u32),
            edges_kept: edges.len(),
            discarded_stalled: tally.stalled,
            discarded_left_domain: tally.left_domain,
            discarded_numerical: tally.numerical,
            discarded_self_loop: tally.self_loop,
            discarded_zero_weight: tally.zero_weight,
            build_seconds: started.elapsed().as_secs_f64(),
        };
        // Cells were expanded in ascending order and controls in index
        // order, so the list is already canonical.
        let g = Self::from_canonical_edges(n, n_controls, edges)?;
        Ok((g, report))
    }

    #[must_use]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[must_use]
    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    #[must_use]
    pub fn n_edges(&self) -> usize {
        self.edge_src.len()
    }

    #[must_use]
    pub fn edge(&self, e: usize) -> Hyperedge<'_> {
        Hyperedge {
            source: self.edge_src[e],
            control: self.edge_ctrl[e],
            weight: self.edge_w[e],
            targets: self.edge_targets(e),
        }
    }

    #[must_use]
    pub fn edge_source(&self, e: usize) -> u32 {
        self.edge_src[e]
    }

    #[must_use]
    pub fn edge_control(&self, e: usize) -> u32 {
        self.edge_ctrl[e]
    }

    #[must_use]
    pub fn edge_weight(&self, e: usize) -> f64 {
        self.edge_w[e]
    }

    #[must_use]
    pub fn edge_targets(&self, e: usize) -> &[u32] {
        &self.tgt_flat[self.tgt_off[e] as usize..self.tgt_off[e + 1] as usize]
    }

    /// Ids of the edges leaving `node`, in control order.
    #[must_use]
    pub fn out_edges(&self, node: usize) -> std::ops::Range<usize> {
        self.src_off[node] as usize..self.src_off[node + 1] as usize
    }

    /// Ids of the edges whose target sets contain `node`, ascending.
    #[must_use]
    pub fn in_edges(&self, node: usize) -> &[u32] {
        &self.inc_flat[self.inc_off[node] as usize..self.inc_off[node + 1] as usize]
    }

    pub fn iter_edges(&self) -> impl Iterator<Item = Hyperedge<'_>> {
        (0..self.n_edges()).map(|e| self.edge(e))
    }

    /// Edge id for a (source, control) pair, if present. Binary search over
    /// the canonical order.
    #[must_use]
    pub fn find_edge(&self, source: u32, control: u32) -> Option<usize> {
        let range = self.out_edges(source as usize);
        let ids = &self.edge_ctrl[range.clone()];
        ids.binary_search(&control).ok().map(|i| range.start + i)
    }

    /// Re-check every structural invariant; cheap relative to a build.
    pub fn validate(&self) -> Result<(), GraphError> {
        let fail = |msg: String| Err(GraphError::Corrupt(msg));
        let n_edges = self.n_edges();
        if self.n_nodes == 0 || self.n_controls == 0 {
            return fail("empty node or control set".into());
        }
        for e in 0..n_edges {
            let (src, ctrl, w) = (self.edge_src[e], self.edge_ctrl[e], self.edge_w[e]);
            if (src as usize) >= self.n_nodes {
                return fail(format!("edge {e}: source {src} out of range"));
            }
            if (ctrl as usize) >= self.n_controls {
                return fail(format!("edge {e}: control {ctrl} out of range"));
            }
            if !(w.is_finite() && w > 0.0) {
                return fail(format!("edge {e}: weight {w} not positive and finite"));
            }
            let targets = self.edge_targets(e);
            if targets.is_empty() {
                return fail(format!("edge {e}: empty target set"));
            }
            if (*targets.last().unwrap() as usize) >= self.n_nodes {
                return fail(format!("edge {e}: target out of range"));
            }
            if targets.windows(2).any(|p| p[0] >= p[1]) {
                return fail(format!("edge {e}: targets not strictly ascending"));
            }
            if e + 1 < n_edges
                && (self.edge_src[e], self.edge_ctrl[e])
                    >= (self.edge_src[e + 1], self.edge_ctrl[e + 1])
            {
                return fail(format!("edge {e}: canonical (source, control) order violated"));
            }
        }
        if self.src_off.len() != self.n_nodes + 1
            || self.src_off[0] != 0
            || self.src_off[self.n_nodes] as usize != n_edges
        {
            return fail("out-edge offsets malformed".into());
        }
        for node in 0..self.n_nodes {
            if self.src_off[node] > self.src_off[node + 1] {
                return fail("out-edge offsets not monotone".into());
            }
            for e in self.out_edges(node) {
                if self.edge_src[e] as usize != node {
                    return fail(format!("out-edge index of node {node} lists edge {e}"));
                }
            }
        }
        if self.inc_off.len() != self.n_nodes + 1
            || self.inc_off[0] != 0
            || self.inc_off[self.n_nodes] as usize != self.inc_flat.len()
            || self.inc_flat.len() != self.tgt_flat.len()
        {
            return fail("incidence offsets malformed".into());
        }
        // Counts per node must match the target arrays exactly; together
        // with membership and strict ascent below this pins the incidence
        // lists to the true edge sets.
        let mut counts = vec![0u32; self.n_nodes];
        for &t in &self.tgt_flat {
            counts[t as usize] += 1;
        }
        for node in 0..self.n_nodes {
            if self.inc_off[node] > self.inc_off[node + 1] {
                return fail("incidence offsets not monotone".into());
            }
            let inc = self.in_edges(node);
            if inc.len() != counts[node] as usize {
                return fail(format!("incidence count of node {node} disagrees"));
            }
            if inc.windows(2).any(|p| p[0] >= p[1]) {
                return fail(format!("incidence of node {node} not strictly ascending"));
            }
            for &e in inc {
                if e as usize >= n_edges
                    || self.edge_targets(e as usize).binary_search(&(node as u32)).is_err()
                {
                    return fail(format!("incidence of node {node} lists edge {e} wrongly"));
                }
            }
        }
        Ok(())
    }

    /// Write the text dump: `#`-prefixed header lines, then one line per
    /// edge, `source control weight target_count targets...`. Weights print
    /// in shortest round-trip form, so dumps are byte-stable.
    pub fn write_dump(&self, mut out: impl Write, meta: &str) -> std::io::Result<()> {
        writeln!(out, "# event transition hypergraph v1")?;
        writeln!(
            out,
            "# nodes {} controls {} edges {}",
            self.n_nodes,
            self.n_controls,
            self.n_edges()
        )?;
        for line in meta.lines() {
            writeln!(out, "# {line}")?;
        }
        let mut buf = String::new();
        for edge in self.iter_edges() {
            use std::fmt::Write as _;
            buf.clear();
            write!(buf, "{} {} {} {}", edge.source, edge.control, edge.weight, edge.targets.len())
                .expect("formatting into a String");
            for t in edge.targets {
                write!(buf, " {t}").expect("formatting into a String");
            }
            writeln!(out, "{buf}")?;
        }
        Ok(())
    }

    /// Parse a dump produced by [`write_dump`](Self::write_dump).
    pub fn read_dump(input: impl BufRead) -> Result<Self, GraphError> {
        let mut sizes: Option<(usize, usize, usize)> = None;
        let mut edges: EdgeList = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            let parse_fail = |reason: &str| GraphError::Parse {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            if text.is_empty() {
                continue;
            }
            if let Some(rest) = text.strip_prefix('#') {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                if tokens.first() == Some(&"nodes") {
                    if tokens.len() != 6 || tokens[2] != "controls" || tokens[4] != "edges" {
                        return Err(parse_fail("malformed size header"));
                    }
                    let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_fail("bad count"));
                    sizes = Some((parse(tokens[1])?, parse(tokens[3])?, parse(tokens[5])?));
                }
                continue;
            }
            let mut tokens = text.split_whitespace();
            let mut next = || tokens.next().ok_or_else(|| parse_fail("truncated edge line"));
            let source = next()?.parse::<u32>().map_err(|_| parse_fail("bad source"))?;
            let control = next()?.parse::<u32>().map_err(|_| parse_fail("bad control"))?;
            let weight = next()?.parse::<f64>().map_err(|_| parse_fail("bad weight"))?;
            let count = next()?.parse::<usize>().map_err(|_| parse_fail("bad target count"))?;
            let mut targets = Vec::with_capacity(count);
            for _ in 0..count {
                targets.push(next()?.parse::<u32>().map_err(|_| parse_fail("bad target"))?);
            }
            if tokens.next().is_some() {
                return Err(parse_fail("trailing tokens after targets"));
            }
            edges.push((source, control, weight, targets));
        }
        let (n_nodes, n_controls, n_edges) =
            sizes.ok_or(GraphError::Parse { line: 0, reason: "missing size header".into() })?;
        if edges.len() != n_edges {
            return Err(GraphError::Parse {
                line: 0,
                reason: format!("header promises {n_edges} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n_nodes, n_controls, edges)
    }
}

/// Expand one cell: worst-case event cost and successor union per control.
fn expand_cell(plant: &Plant, grid: &Grid, scheme: SamplingScheme, cell: u32) -> (EdgeList, Tally) {
    let id = CellId(cell as usize);
    let samples = grid.sample_cell(id, scheme);
    let mut edges = EdgeList::new();
    let mut tally = Tally::default();
    'controls: for (ui, u) in plant.control_grid.iter().enumerate() {
        let mut successors: BTreeSet<u32> = BTreeSet::new();
        let mut weight = 0.0f64;
        for x in &samples {
            match event_step_in(plant, grid, id, x, u) {
                Err(_) => {
                    tally.numerical += 1;
                    continue 'controls;
                }
                Ok(ev) if ev.steps == 0 => {
                    tally.stalled += 1;
                    continue 'controls;
                }
                Ok(ev) if ev.left_domain => {
                    tally.left_domain += 1;
                    continue 'controls;
                }
                Ok(ev) => match grid.locate(&ev.x_next) {
                    None => {
                        tally.left_domain += 1;
                        continue 'controls;
                    }
                    Some(c) => {
                        successors.insert(c.0 as u32);
                        weight = weight.max(ev.cost);
                    }
                },
            }
        }
        // A source among its own successors can never settle: the play may
        // stay put forever, so the edge is useless to the controller.
        if successors.contains(&cell) {
            tally.self_loop += 1;
            continue;
        }
        if weight <= 0.0 {
            tally.zero_weight += 1;
            continue;
        }
        edges.push((cell, ui as u32, weight, successors.into_iter().collect()));
    }
    (edges, tally)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::AxisBox;
    use crate::plants::{make_benchmark_with, scalar_integrator, BenchmarkOverrides};
    use approx::assert_relative_eq;

    /// Four cells on [0,1], drift +-1, T = 0.1, unit cost: every kept edge
    /// moves one cell over in three steps from the worst sample, cost 0.3.
    fn drift_setup() -> (crate::dynamics::Plant, Grid) {
        let plant = scalar_integrator(0.0, 1.0, &[-1.0, 1.0], 0.1, 1.0).unwrap();
        let grid =
            Grid::new(AxisBox::new(vec![0.0], vec![1.0]).unwrap(), vec![4]).unwrap();
        (plant, grid)
    }

    fn drift_graph() -> (TransitionHypergraph, BuildReport) {
        let (plant, grid) = drift_setup();
        TransitionHypergraph::build(&plant, &grid, SamplingScheme::default(), &[CellId(0)])
            .unwrap()
    }

    #[test]
    fn build_matches_the_hand_walked_drift_graph() {
        let (g, report) = drift_graph();
        assert_eq!(g.n_nodes(), 4);
        assert_eq!(g.n_controls(), 2);
        assert_eq!(g.n_edges(), 5);
        let expected: [(u32, u32, &[u32]); 5] = [
            (1, 0, &[0]),
            (1, 1, &[2]),
            (2, 0, &[1]),
            (2, 1, &[3]),
            (3, 0, &[2]),
        ];
        for (e, (src, ctrl, targets)) in expected.into_iter().enumerate() {
            let edge = g.edge(e);
            assert_eq!((edge.source, edge.control), (src, ctrl));
            assert_eq!(edge.targets, targets);
            assert_relative_eq!(edge.weight, 0.3, epsilon = 1e-12);
        }
        // Cell 0 is absorbing, and +1 from cell 3 exits the domain.
        assert_eq!(report.edges_kept, 5);
        assert_eq!(report.discarded_left_domain, 1);
        assert_eq!(report.discarded_total(), 1);
        assert_eq!(report.n_target_cells, 1);
    }

    #[test]
    fn out_edge_and_incidence_indices_agree_with_the_edges() {
        let (g, _) = drift_graph();
        assert_eq!(g.out_edges(0), 0..0);
        assert_eq!(g.out_edges(1), 0..2);
        assert_eq!(g.out_edges(2), 2..4);
        assert_eq!(g.out_edges(3), 4..5);
        assert_eq!(g.in_edges(0), &[0]);
        assert_eq!(g.in_edges(1), &[2]);
        assert_eq!(g.in_edges(2), &[1, 4]);
        assert_eq!(g.in_edges(3), &[3]);
        assert_eq!(g.find_edge(2, 1), Some(3));
        assert_eq!(g.find_edge(0, 0), None);
        assert_eq!(g.find_edge(3, 1), None);
    }

    #[test]
    fn building_twice_gives_identical_graphs() {
        let (a, _) = drift_graph();
        let (b, _) = drift_graph();
        assert_eq!(a, b);
    }

    #[test]
    fn from_edges_canonicalizes_order_and_targets() {
        let edges = vec![
            (2u32, 1u32, 0.5, vec![3u32, 1, 3]),
            (0, 1, 1.0, vec![1]),
            (0, 0, 2.0, vec![2, 1]),
        ];
        let g = TransitionHypergraph::from_edges(4, 2, edges).unwrap();
        assert_eq!(g.n_edges(), 3);
        let first = g.edge(0);
        assert_eq!((first.source, first.control), (0, 0));
        assert_eq!(first.targets, &[1, 2]);
        let last = g.edge(2);
        assert_eq!((last.source, last.control), (2, 1));
        assert_eq!(last.targets, &[1, 3]);
        g.validate().unwrap();
    }

    #[test]
    fn from_edges_rejects_malformed_input() {
        let ok = |edges| TransitionHypergraph::from_edges(4, 2, edges);
        assert!(matches!(ok(vec![(0, 0, 1.0, vec![])]), Err(GraphError::MalformedEdge { .. })));
        assert!(matches!(ok(vec![(0, 0, 0.0, vec![1])]), Err(GraphError::MalformedEdge { .. })));
        assert!(matches!(
            ok(vec![(0, 0, f64::NAN, vec![1])]),
            Err(GraphError::MalformedEdge { .. })
        ));
        assert!(matches!(ok(vec![(4, 0, 1.0, vec![1])]), Err(GraphError::MalformedEdge { .. })));
        assert!(matches!(ok(vec![(0, 2, 1.0, vec![1])]), Err(GraphError::MalformedEdge { .. })));
        assert!(matches!(ok(vec![(0, 0, 1.0, vec![4])]), Err(GraphError::MalformedEdge { .. })));
        assert!(matches!(
            ok(vec![(0, 0, 1.0, vec![1]), (0, 0, 2.0, vec![2])]),
            Err(GraphError::DuplicateControl { cell: 0, control: 0 })
        ));
        // An exact repeat is not an error: it merges to the cheaper weight.
        let merged = ok(vec![(0, 0, 2.0, vec![2, 1]), (0, 0, 1.5, vec![1, 2])]).unwrap();
        assert_eq!(merged.n_edges(), 1);
        assert_eq!(merged.edge_weight(0), 1.5);
        assert!(matches!(
            TransitionHypergraph::from_edges(0, 2, vec![]),
            Err(GraphError::Empty)
        ));
        assert!(matches!(
            TransitionHypergraph::from_edges(4, 0, vec![]),
            Err(GraphError::Empty)
        ));
    }

    #[test]
    fn validate_catches_corruption() {
        let (g, _) = drift_graph();
        let mut bad = g.clone();
        bad.edge_w[0] = -1.0;
        assert!(matches!(bad.validate(), Err(GraphError::Corrupt(_))));
        let mut bad = g.clone();
        bad.tgt_flat[0] = 99;
        assert!(matches!(bad.validate(), Err(GraphError::Corrupt(_))));
        let mut bad = g;
        bad.inc_flat.swap(0, 1);
        assert!(matches!(bad.validate(), Err(GraphError::Corrupt(_))));
    }

    #[test]
    fn dump_round_trips_and_is_byte_stable() {
        let (g, _) = drift_graph();
        let mut first = Vec::new();
        g.write_dump(&mut first, "config deadbeef01234567\ntargets 1").unwrap();
        let mut second = Vec::new();
        g.write_dump(&mut second, "config deadbeef01234567\ntargets 1").unwrap();
        assert_eq!(first, second);
        let parsed = TransitionHypergraph::read_dump(&first[..]).unwrap();
        assert_eq!(parsed, g);
    }

    #[test]
    fn dump_reader_rejects_garbage() {
        let missing_header = b"0 0 1.0 1 1\n";
        assert!(matches!(
            TransitionHypergraph::read_dump(&missing_header[..]),
            Err(GraphError::Parse { .. })
        ));
        let truncated = b"# nodes 2 controls 1 edges 1\n0 0 1.0 2 1\n";
        assert!(matches!(
            TransitionHypergraph::read_dump(&truncated[..]),
            Err(GraphError::Parse { .. })
        ));
        let wrong_count = b"# nodes 2 controls 1 edges 2\n0 0 1.0 1 1\n";
        assert!(matches!(
            TransitionHypergraph::read_dump(&wrong_count[..]),
            Err(GraphError::Parse { .. })
        ));
    }

    #[test]
    fn build_rejects_mismatched_domains() {
        let (plant, _) = drift_setup();
        let other =
            Grid::new(AxisBox::new(vec![0.0], vec![2.0]).unwrap(), vec![4]).unwrap();
        assert!(matches!(
            TransitionHypergraph::build(&plant, &other, SamplingScheme::default(), &[]),
            Err(GraphError::DomainMismatch)
        ));
    }

    #[test]
    fn denser_sampling_only_grows_successor_sets() {
        // Nested sample grids (2 vs 4 points per axis share the corners, 4
        // adds interior points): every successor seen by the coarse build
        // must be seen by the dense one, and the worst cost cannot shrink.
        let ov = BenchmarkOverrides {
            grid_resolution: Some(vec![8, 8]),
            control_counts: Some(vec![3]),
            event_radius: Some(1.0),
            max_event_steps: Some(200),
            ..Default::default()
        };
        let b = make_benchmark_with("pendulum", &ov).unwrap();
        let build = |per_axis| {
            TransitionHypergraph::build(
                &b.plant,
                &b.grid,
                SamplingScheme::new(per_axis).unwrap(),
                &[],
            )
            .unwrap()
            .0
        };
        let coarse = build(2);
        let dense = build(4);
        let mut compared = 0;
        for e in 0..coarse.n_edges() {
            let edge = coarse.edge(e);
            let Some(d) = dense.find_edge(edge.source, edge.control) else {
                continue;
            };
            let dense_edge = dense.edge(d);
            assert!(
                edge.targets.iter().all(|t| dense_edge.targets.contains(t)),
                "dense successors lost {:?} -> {:?}",
                edge.targets,
                dense_edge.targets
            );
            assert!(edge.weight <= dense_edge.weight);
            compared += 1;
        }
        assert!(compared > 20, "only {compared} edges survived both builds");
    }
}
