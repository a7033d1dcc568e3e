//! Command-line front end: configuration, pipeline orchestration, file
//! output.
//!
//! Every data file (CSV, SVG, graph dump) embeds the hash of the effective
//! configuration and is byte-identical across reruns with the same
//! configuration; wall-clock numbers appear only in `report.txt` and
//! `summary.txt`. Exit codes: 0 success, 1 usage or configuration error,
//! 2 runtime failure, 3 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks;
use crate::hypergraph::{BuildReport, TransitionHypergraph};
use crate::lazy::{solve_lazy, ExtendedHypergraph, LazyFeedback};
use crate::partition::{SamplePlacement, SamplingScheme};
use crate::plants::{make_benchmark_with, Benchmark, BenchmarkOverrides};
use crate::plot::{control_staircase_svg, phase_portrait_svg};
use crate::simulate::{
    comparison_csv, comparison_table, run_closed_loop, BaseFeedback, ComparisonRow, Feedback,
    SimError, Trajectory,
};
use crate::solver::{heuristic_dijkstra, minmax_dijkstra, Solution, SwitchPenalty};

/// One run's parameters. Unset optionals fall back to the benchmark's
/// published values; the documented defaults reproduce the pendulum setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Plant family: "pendulum" or "batch".
    pub benchmark: String,
    /// Feedback to synthesize and simulate: "ordinary", "lazy", or
    /// "heuristic".
    pub mode: String,
    /// Switch penalty weight in [0, 1); unset means the benchmark default
    /// (0.99 pendulum, 0.9 batch).
    pub lambda: Option<f64>,
    /// Heuristic mismatch penalty: "worst" (control of the worst-value
    /// successor) or "mean" (mean mismatch over successors).
    pub sigma: String,
    /// Cells per state axis; unset means the benchmark default.
    pub grid_resolution: Option<Vec<usize>>,
    /// Control values per input axis; unset means the benchmark default.
    pub control_counts: Option<Vec<usize>>,
    /// Plant sampling period T in seconds.
    pub sample_period: Option<f64>,
    /// Event box half-width as a multiple of the cell half-width.
    pub event_radius: Option<f64>,
    /// Plant steps allowed per event before the system counts as silent.
    pub max_event_steps: Option<usize>,
    /// Reactor only: edge length of the target block in cells.
    pub target_block: Option<usize>,
    /// Reactor only: weight of the quadratic terms in the running cost.
    pub cost_gain: Option<f64>,
    /// Start samples per cell axis when building the transition graph;
    /// unset means the benchmark's documented scheme (two per axis at
    /// quadrant midpoints).
    pub samples_per_axis: Option<usize>,
    /// Where the samples sit within a cell: "corners" (endpoints included)
    /// or "centers" (subinterval midpoints). Unset keeps the benchmark's
    /// placement.
    pub sample_placement: Option<String>,
    /// Closed-loop start state; unset means the benchmark's published one.
    pub initial_state: Option<Vec<f64>>,
    /// Control applied before the first event. Unset means the first
    /// transmission picks freely and is not counted as a switch; it also
    /// seeds the heuristic's target control (then control 0).
    pub initial_control: Option<u32>,
    /// Transmission budget for closed-loop runs.
    pub max_events: usize,
    /// Directory the commands write their files into.
    pub output_dir: String,
    /// Base seed for the verification battery's random fixtures.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            benchmark: "pendulum".to_string(),
            mode: "lazy".to_string(),
            lambda: None,
            sigma: "worst".to_string(),
            grid_resolution: None,
            control_counts: None,
            sample_period: None,
            event_radius: None,
            max_event_steps: None,
            target_block: None,
            cost_gain: None,
            samples_per_axis: None,
            sample_placement: None,
            initial_state: None,
            initial_control: None,
            max_events: 200,
            output_dir: "qevent-out".to_string(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    #[must_use]
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes to TOML");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in &digest[..8] {
            use std::fmt::Write as _;
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    fn validate(&self) -> Result<(), CliError> {
        if !matches!(self.mode.as_str(), "ordinary" | "lazy" | "heuristic") {
            return Err(CliError::Usage(format!(
                "mode must be \"ordinary\", \"lazy\", or \"heuristic\", got \"{}\"",
                self.mode
            )));
        }
        if !matches!(self.sigma.as_str(), "worst" | "mean") {
            return Err(CliError::Usage(format!(
                "sigma must be \"worst\" or \"mean\", got \"{}\"",
                self.sigma
            )));
        }
        if let Some(l) = self.lambda {
            if !(0.0..1.0).contains(&l) {
                return Err(CliError::Usage(format!(
                    "the switch penalty weight must satisfy 0 <= lambda < 1, got {l}"
                )));
            }
        }
        if self.samples_per_axis == Some(0) {
            return Err(CliError::Usage("samples_per_axis must be at least 1".to_string()));
        }
        if let Some(p) = &self.sample_placement {
            if !matches!(p.as_str(), "corners" | "centers") {
                return Err(CliError::Usage(format!(
                    "sample_placement must be \"corners\" or \"centers\", got \"{p}\""
                )));
            }
        }
        Ok(())
    }

    fn overrides(&self) -> BenchmarkOverrides {
        BenchmarkOverrides {
            grid_resolution: self.grid_resolution.clone(),
            control_counts: self.control_counts.clone(),
            sample_period: self.sample_period,
            event_radius: self.event_radius,
            max_event_steps: self.max_event_steps,
            lambda: self.lambda,
            target_block: self.target_block,
            cost_gain: self.cost_gain,
            ..BenchmarkOverrides::default()
        }
    }

    fn sigma_kind(&self) -> SwitchPenalty {
        match self.sigma.as_str() {
            "mean" => SwitchPenalty::MeanMismatch,
            _ => SwitchPenalty::WorstSuccessor,
        }
    }

    fn heuristic_u0(&self) -> u32 {
        self.initial_control.unwrap_or(0)
    }
}

#[derive(Parser)]
#[command(
    name = "qevent",
    version,
    about = "Synthesis of event-driven feedback laws over quantized state spaces",
    disable_help_subcommand = true
)]
struct Cli {
    /// TOML run configuration; command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the effective configuration (annotated TOML) and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Benchmark plant: "pendulum" or "batch".
    #[arg(long, global = true)]
    benchmark: Option<String>,
    /// Switch penalty weight in [0, 1).
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Feedback kind: "ordinary", "lazy", or "heuristic".
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Heuristic mismatch penalty: "worst" or "mean".
    #[arg(long, global = true)]
    sigma: Option<String>,
    /// Base seed for the verification fixtures.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Args)]
struct StartArgs {
    /// Initial state as comma-separated values, e.g. "3.64,0".
    #[arg(long, value_name = "X0")]
    x0: Option<String>,
    /// Control index applied before the first event.
    #[arg(long, value_name = "INDEX")]
    w0: Option<u32>,
    /// Transmission budget for the run.
    #[arg(long, value_name = "N")]
    max_events: Option<usize>,
}

#[derive(clap::Args)]
struct SimArgs {
    /// Feedback table written by `synthesize`; defaults to the mode's
    /// standard file in the output directory.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    #[command(flatten)]
    start: StartArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Build the transition hypergraph and solve for feedback tables.
    Synthesize,
    /// Run the closed loop from an initial state using a synthesized table.
    Simulate(SimArgs),
    /// Synthesize ordinary, lazy, and heuristic feedbacks and race them
    /// from one start.
    Compare(StartArgs),
    /// Run the verification battery against the built-in oracles.
    Verify,
    /// Build the transition hypergraph and write its textual dump.
    DumpGraph,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
    Verification(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m.clone(),
            CliError::Verification(n) => format!("verification failed: {n} check(s) did not pass"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::OutsideDomain => {
            CliError::Usage("initial state outside the plant domain".to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

/// Entry point behind the binary; returns the process exit code.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and are not failures.
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(u8::from(usage));
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli)?;
    cfg.validate()?;
    if cli.print_config {
        print!("{}", annotated_config(&cfg)?);
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage(
            "no command given; see --help for synthesize, simulate, compare, verify, dump-graph"
                .to_string(),
        ));
    };
    match command {
        Command::Verify => cmd_verify(&cfg),
        Command::Synthesize => cmd_synthesize(&Context::new(cfg)?),
        Command::Simulate(args) => cmd_simulate(&Context::new(cfg)?, &args),
        Command::Compare(start) => cmd_compare(&Context::new(cfg)?, &start),
        Command::DumpGraph => cmd_dump_graph(&Context::new(cfg)?),
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(b) = &cli.benchmark {
        cfg.benchmark = b.clone();
    }
    if let Some(l) = cli.lambda {
        cfg.lambda = Some(l);
    }
    if let Some(m) = &cli.mode {
        cfg.mode = m.clone();
    }
    if let Some(s) = &cli.sigma {
        cfg.sigma = s.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.display().to_string();
    }
    Ok(cfg)
}

/// Everything the pipeline commands share: the validated configuration,
/// its hash, and the instantiated benchmark.
struct Context {
    cfg: RunConfig,
    hash: String,
    bench: Benchmark,
    out_dir: PathBuf,
    /// Target cell ids, ascending.
    targets: Vec<u32>,
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let hash = cfg.hash();
        let bench = make_benchmark_with(&cfg.benchmark, &cfg.overrides())
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let target_cells = bench.grid.target_cells(&bench.target);
        if target_cells.is_empty() {
            return Err(CliError::Usage("the target box covers no grid cell".to_string()));
        }
        let targets = target_cells.iter().map(|c| c.0 as u32).collect();
        let out_dir = PathBuf::from(&cfg.output_dir);
        Ok(Context { cfg, hash, bench, out_dir, targets })
    }

    fn scheme(&self) -> Result<SamplingScheme, CliError> {
        let mut scheme = self.bench.sampling;
        if let Some(s) = self.cfg.samples_per_axis {
            scheme = SamplingScheme::new(s).map_err(|e| CliError::Usage(e.to_string()))?;
            scheme.placement = self.bench.sampling.placement;
        }
        if let Some(p) = &self.cfg.sample_placement {
            scheme.placement = match p.as_str() {
                "corners" => SamplePlacement::Corners,
                "centers" => SamplePlacement::Centers,
                other => {
                    return Err(CliError::Usage(format!(
                        "sample_placement must be \"corners\" or \"centers\", got \"{other}\""
                    )))
                }
            };
        }
        Ok(scheme)
    }

    fn build(&self) -> Result<(TransitionHypergraph, BuildReport), CliError> {
        let target_cells: Vec<crate::partition::CellId> =
            self.targets.iter().map(|&t| crate::partition::CellId(t as usize)).collect();
        TransitionHypergraph::build(&self.bench.plant, &self.bench.grid, self.scheme()?, &target_cells)
            .map_err(|e| CliError::Runtime(e.to_string()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)?;
        fs::write(self.path(name), contents)?;
        Ok(())
    }

    fn write_svg(&self, name: &str, svg: &str) -> Result<(), CliError> {
        self.write(name, &format!("<!-- config {} -->\n{svg}", self.hash))
    }

    fn resolve_x0(&self, flag: &Option<String>) -> Result<Vec<f64>, CliError> {
        let x0 = match flag {
            Some(text) => parse_state(text)?,
            None => match &self.cfg.initial_state {
                Some(x) => x.clone(),
                None => self.bench.initial_states[0].clone(),
            },
        };
        if x0.len() != self.bench.grid.dim() {
            return Err(CliError::Usage(format!(
                "initial state has {} components, the plant needs {}",
                x0.len(),
                self.bench.grid.dim()
            )));
        }
        Ok(x0)
    }
}

fn parse_state(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse state component \"{part}\"")))
        })
        .collect()
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

const BASE_TABLE: &str = "value.csv";
const LAZY_TABLE: &str = "lazy_value.csv";
const HEURISTIC_TABLE: &str = "heuristic_value.csv";

fn default_table_name(mode: &str) -> &'static str {
    match mode {
        "lazy" => LAZY_TABLE,
        "heuristic" => HEURISTIC_TABLE,
        _ => BASE_TABLE,
    }
}

// ---------------------------------------------------------------- tables

fn base_table_text(ctx: &Context, kind: &str, sol: &Solution) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "# config {}", ctx.hash);
    let _ = writeln!(s, "# benchmark {}", ctx.bench.name);
    let _ = writeln!(s, "# kind {kind}");
    let _ = writeln!(
        s,
        "# nodes {} controls {}",
        ctx.bench.grid.cell_count(),
        ctx.bench.plant.control_grid.len()
    );
    s.push_str("node,v,u\n");
    for (node, (v, u)) in sol.v.iter().zip(&sol.u).enumerate() {
        match u {
            Some(c) => {
                let _ = writeln!(s, "{node},{v},{c}");
            }
            None => {
                let _ = writeln!(s, "{node},{v},");
            }
        }
    }
    s
}

fn lazy_table_text(ctx: &Context, lazy: &LazyFeedback) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "# config {}", ctx.hash);
    let _ = writeln!(s, "# benchmark {}", ctx.bench.name);
    let _ = writeln!(s, "# kind lazy");
    let _ = writeln!(s, "# lambda {}", lazy.lambda());
    let _ = writeln!(s, "# nodes {} controls {}", lazy.base_nodes(), lazy.n_controls());
    s.push_str("cell,w,u,v\n");
    for cell in 0..lazy.base_nodes() as u32 {
        for w in 0..lazy.n_controls() as u32 {
            let v = lazy.value(cell, w);
            match lazy.lookup(cell, w) {
                Some(c) => {
                    let _ = writeln!(s, "{cell},{w},{c},{v}");
                }
                None => {
                    let _ = writeln!(s, "{cell},{w},,{v}");
                }
            }
        }
    }
    s
}

struct TableHeader {
    kind: String,
    nodes: usize,
    controls: usize,
    lambda: Option<f64>,
}

fn read_table(path: &Path) -> Result<(TableHeader, Vec<String>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read table {}: {e}", path.display())))?;
    let bad = |what: &str| CliError::Usage(format!("table {}: {what}", path.display()));
    let mut kind = None;
    let mut nodes = None;
    let mut controls = None;
    let mut lambda = None;
    let mut rows = Vec::new();
    let mut saw_columns = false;
    for line in text.lines() {
        if let Some(meta) = line.strip_prefix('#') {
            let mut words = meta.split_whitespace();
            match words.next() {
                Some("kind") => kind = words.next().map(str::to_string),
                Some("lambda") => {
                    lambda = Some(
                        words
                            .next()
                            .and_then(|w| w.parse().ok())
                            .ok_or_else(|| bad("unreadable lambda"))?,
                    );
                }
                Some("nodes") => {
                    nodes = words.next().and_then(|w| w.parse().ok());
                    // "controls M" follows on the same line
                    controls = words.nth(1).and_then(|w| w.parse().ok());
                }
                _ => {}
            }
        } else if !saw_columns {
            saw_columns = true; // the column header line
        } else if !line.is_empty() {
            rows.push(line.to_string());
        }
    }
    let header = TableHeader {
        kind: kind.ok_or_else(|| bad("missing kind line"))?,
        nodes: nodes.ok_or_else(|| bad("missing size line"))?,
        controls: controls.ok_or_else(|| bad("missing size line"))?,
        lambda,
    };
    Ok((header, rows))
}

fn parse_control(field: &str, path: &Path) -> Result<Option<u32>, CliError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| CliError::Usage(format!("table {}: bad control \"{field}\"", path.display())))
}

fn load_base_feedback(path: &Path, expect_nodes: usize) -> Result<BaseFeedback, CliError> {
    let (header, rows) = read_table(path)?;
    let bad = |what: String| CliError::Usage(format!("table {}: {what}", path.display()));
    if header.kind == "lazy" {
        return Err(bad("holds a lazy table; pass --mode lazy".to_string()));
    }
    if header.nodes != expect_nodes || rows.len() != expect_nodes {
        return Err(bad(format!(
            "covers {} nodes but the configured grid has {expect_nodes}",
            header.nodes
        )));
    }
    let mut table = Vec::with_capacity(expect_nodes);
    for (i, row) in rows.iter().enumerate() {
        let mut fields = row.split(',');
        let node: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad(format!("unreadable row {i}")))?;
        if node != i {
            return Err(bad(format!("row {i} is labeled node {node}")));
        }
        let _v = fields.next().ok_or_else(|| bad(format!("row {i} too short")))?;
        table.push(parse_control(fields.next().unwrap_or(""), path)?);
    }
    Ok(BaseFeedback(table))
}

fn load_lazy_feedback(
    path: &Path,
    expect_nodes: usize,
    expect_controls: usize,
) -> Result<LazyFeedback, CliError> {
    let (header, rows) = read_table(path)?;
    let bad = |what: String| CliError::Usage(format!("table {}: {what}", path.display()));
    if header.kind != "lazy" {
        return Err(bad(format!("holds a {} table; pass --mode {}", header.kind, header.kind)));
    }
    if header.nodes != expect_nodes || header.controls != expect_controls {
        return Err(bad(format!(
            "shape {}x{} does not match the configured {expect_nodes}x{expect_controls}",
            header.nodes, header.controls
        )));
    }
    let total = expect_nodes * expect_controls;
    if rows.len() != total {
        return Err(bad(format!("has {} rows, expected {total}", rows.len())));
    }
    let lambda = header.lambda.ok_or_else(|| bad("missing lambda line".to_string()))?;
    let mut v = Vec::with_capacity(total);
    let mut table = Vec::with_capacity(total);
    for (i, row) in rows.iter().enumerate() {
        let mut fields = row.split(',');
        let cell: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad(format!("unreadable row {i}")))?;
        let w: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad(format!("unreadable row {i}")))?;
        if cell * expect_controls + w != i {
            return Err(bad(format!("row {i} is out of order")));
        }
        table.push(parse_control(fields.next().unwrap_or(""), path)?);
        let value: f64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad(format!("unreadable value in row {i}")))?;
        v.push(value);
    }
    Ok(LazyFeedback::from_parts(lambda, expect_nodes, expect_controls, v, table))
}

// -------------------------------------------------------------- commands

fn cmd_synthesize(ctx: &Context) -> Result<(), CliError> {
    use std::fmt::Write as _;
    let (graph, build) = ctx.build()?;
    let base = minmax_dijkstra(&graph, &ctx.targets);
    ctx.write(BASE_TABLE, &base_table_text(ctx, "base", &base))?;

    let mut report = String::new();
    let _ = writeln!(report, "synthesis report");
    let _ = writeln!(report, "config hash {}", ctx.hash);
    let _ = writeln!(report, "benchmark {} mode {}", ctx.bench.name, ctx.cfg.mode);
    let _ = writeln!(report, "lambda {}", ctx.bench.lambda);
    let _ = writeln!(report);
    let _ = writeln!(report, "{build}");
    let _ = writeln!(
        report,
        "base solve: {} pops, {} relaxations, {:.3} s, {} of {} cells stabilizable",
        base.stats.pops,
        base.stats.relaxations,
        base.stats.wall_seconds,
        base.stabilizable_count(),
        graph.n_nodes()
    );

    match ctx.cfg.mode.as_str() {
        "lazy" => {
            let ext = ExtendedHypergraph::extend(&graph, ctx.bench.lambda)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let lazy = solve_lazy(&ext, &ctx.targets);
            ctx.write(LAZY_TABLE, &lazy_table_text(ctx, &lazy))?;
            let pairs = lazy.v.iter().filter(|v| v.is_finite()).count();
            let _ = writeln!(
                report,
                "lazy solve: {} pops, {} relaxations, {:.3} s, {} of {} pairs stabilizable",
                lazy.stats.pops,
                lazy.stats.relaxations,
                lazy.stats.wall_seconds,
                pairs,
                lazy.v.len()
            );
        }
        "heuristic" => {
            let h = heuristic_dijkstra(
                &graph,
                &ctx.targets,
                ctx.bench.lambda,
                ctx.cfg.sigma_kind(),
                Some(ctx.cfg.heuristic_u0()),
            );
            ctx.write(HEURISTIC_TABLE, &base_table_text(ctx, "heuristic", &h))?;
            let _ = writeln!(
                report,
                "heuristic solve ({}): {} pops, {} relaxations, {:.3} s, {} of {} cells covered",
                ctx.cfg.sigma,
                h.stats.pops,
                h.stats.relaxations,
                h.stats.wall_seconds,
                h.stabilizable_count(),
                graph.n_nodes()
            );
        }
        _ => {}
    }
    ctx.write("report.txt", &report)?;
    println!(
        "synthesized {} ({}render mode {}) into {}",
        ctx.bench.name,
        if ctx.cfg.mode == "ordinary" { "" } else { "base + " },
        ctx.cfg.mode,
        ctx.out_dir.display()
    );
    Ok(())
}

fn cmd_simulate(ctx: &Context, args: &SimArgs) -> Result<(), CliError> {
    let x0 = ctx.resolve_x0(&args.start.x0)?;
    let w0 = args.start.w0.or(ctx.cfg.initial_control);
    let max_events = args.start.max_events.unwrap_or(ctx.cfg.max_events);
    let table_path = args
        .table
        .clone()
        .unwrap_or_else(|| ctx.path(default_table_name(&ctx.cfg.mode)));
    let n = ctx.bench.grid.cell_count();
    let m = ctx.bench.plant.control_grid.len();
    let feedback: Box<dyn Feedback> = match ctx.cfg.mode.as_str() {
        "lazy" => Box::new(load_lazy_feedback(&table_path, n, m)?),
        _ => Box::new(load_base_feedback(&table_path, n)?),
    };
    let traj = run_closed_loop(
        &ctx.bench.plant,
        &ctx.bench.grid,
        &ctx.targets,
        feedback.as_ref(),
        &x0,
        w0,
        max_events,
    )
    .map_err(sim_error)?;
    write_trajectory_files(ctx, &ctx.cfg.mode.clone(), &traj, &x0, w0)?;

    let mut summary = trajectory_summary(ctx, &traj, &x0, w0);
    summary.push_str(&format!("table {}\n", table_path.display()));
    ctx.write("summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn write_trajectory_files(
    ctx: &Context,
    label: &str,
    traj: &Trajectory,
    x0: &[f64],
    w0: Option<u32>,
) -> Result<(), CliError> {
    let meta = trajectory_meta(ctx, label, traj, x0, w0);
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, &ctx.bench.plant.control_grid, &meta)?;
    ctx.write("trajectory.csv", &String::from_utf8(csv).expect("CSV is UTF-8"))?;
    if ctx.bench.grid.dim() >= 2 {
        let svg = phase_portrait_svg(&ctx.bench.grid, Some(&ctx.bench.target), &[(label, traj)]);
        ctx.write_svg("trajectory.svg", &svg)?;
    }
    let stairs = control_staircase_svg(&[(label, traj)], &ctx.bench.plant.control_grid, 0);
    ctx.write_svg("staircase.svg", &stairs)?;
    Ok(())
}

fn trajectory_meta(
    ctx: &Context,
    label: &str,
    traj: &Trajectory,
    x0: &[f64],
    w0: Option<u32>,
) -> Vec<String> {
    let first = traj.samples.first().and_then(|s| s.control);
    let counted_first = traj.switches + usize::from(w0.is_none() && traj.events > 0);
    vec![
        format!("config {}", ctx.hash),
        format!("benchmark {}", ctx.bench.name),
        format!("feedback {label}"),
        format!("x0 {}", join_floats(x0)),
        match w0 {
            Some(w) => format!("w0 {w}"),
            None => "w0 free".to_string(),
        },
        match first {
            Some(c) => format!("first control {c}"),
            None => "first control none".to_string(),
        },
        format!("termination {}", traj.termination),
        format!("events {}", traj.events),
        format!("switches {}", traj.switches),
        format!("switches counting the first transmission {counted_first}"),
        format!("cost {}", traj.cost),
        format!(
            "true time {}",
            traj.plant_steps() as f64 * ctx.bench.plant.sample_period
        ),
    ]
}

fn trajectory_summary(ctx: &Context, traj: &Trajectory, x0: &[f64], w0: Option<u32>) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{} from ({}) with {}: {}\n",
        ctx.bench.name,
        join_floats(x0),
        match w0 {
            Some(w) => format!("w0 = {w}"),
            None => "a free first control".to_string(),
        },
        traj.termination
    ));
    s.push_str(&format!(
        "events {}, switches {}, cost {:.6}, plant steps {}, true time {:.4} s\n",
        traj.events,
        traj.switches,
        traj.cost,
        traj.plant_steps(),
        traj.plant_steps() as f64 * ctx.bench.plant.sample_period
    ));
    s
}

fn cmd_compare(ctx: &Context, start: &StartArgs) -> Result<(), CliError> {
    let x0 = ctx.resolve_x0(&start.x0)?;
    let w0 = start.w0.or(ctx.cfg.initial_control);
    let max_events = start.max_events.unwrap_or(ctx.cfg.max_events);
    let (graph, _) = ctx.build()?;

    let base = minmax_dijkstra(&graph, &ctx.targets);
    let ext = ExtendedHypergraph::extend(&graph, ctx.bench.lambda)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let lazy = solve_lazy(&ext, &ctx.targets);
    let heuristic = heuristic_dijkstra(
        &graph,
        &ctx.targets,
        ctx.bench.lambda,
        ctx.cfg.sigma_kind(),
        Some(ctx.cfg.heuristic_u0()),
    );

    let base_fb = BaseFeedback::from(&base);
    let heur_fb = BaseFeedback::from(&heuristic);
    let feedbacks: [(&str, &dyn Feedback); 3] =
        [("ordinary", &base_fb), ("lazy", &lazy), ("heuristic", &heur_fb)];

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut trajectories = Vec::new();
    for (label, fb) in feedbacks {
        match run_closed_loop(&ctx.bench.plant, &ctx.bench.grid, &ctx.targets, fb, &x0, w0, max_events)
        {
            Ok(traj) => {
                rows.push(ComparisonRow::from_trajectory(label, &traj));
                trajectories.push((label, traj));
            }
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }

    let mut text = format!(
        "# config {}\n# benchmark {} x0 {} w0 {} lambda {}\n{}",
        ctx.hash,
        ctx.bench.name,
        join_floats(&x0),
        match w0 {
            Some(w) => w.to_string(),
            None => "free".to_string(),
        },
        ctx.bench.lambda,
        comparison_table(&rows)
    );
    for f in &failures {
        text.push_str(&format!("failed: {f}\n"));
    }
    ctx.write("comparison.txt", &text)?;
    ctx.write(
        "comparison.csv",
        &format!("# config {}\n{}", ctx.hash, comparison_csv(&rows)),
    )?;

    let views: Vec<(&str, &Trajectory)> =
        trajectories.iter().map(|(l, t)| (*l, t)).collect();
    if ctx.bench.grid.dim() >= 2 && !views.is_empty() {
        let svg = phase_portrait_svg(&ctx.bench.grid, Some(&ctx.bench.target), &views);
        ctx.write_svg("comparison.svg", &svg)?;
    }
    if !views.is_empty() {
        let stairs = control_staircase_svg(&views, &ctx.bench.plant.control_grid, 0);
        ctx.write_svg("comparison_staircase.svg", &stairs)?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), CliError> {
    let reports = checks::run_all(cfg.seed);
    let mut failed = 0;
    for report in &reports {
        println!("{report}");
        if !report.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        Err(CliError::Verification(failed))
    } else {
        println!("all {} checks passed", reports.len());
        Ok(())
    }
}

fn cmd_dump_graph(ctx: &Context) -> Result<(), CliError> {
    let (graph, build) = ctx.build()?;
    let meta = format!("config {}\nbenchmark {}", ctx.hash, ctx.bench.name);
    let mut out = Vec::new();
    graph.write_dump(&mut out, &meta)?;
    ctx.write("graph.txt", &String::from_utf8(out).expect("dump is UTF-8"))?;
    println!("{build}");
    println!("wrote {}", ctx.path("graph.txt").display());
    Ok(())
}

fn annotated_config(cfg: &RunConfig) -> Result<String, CliError> {
    use std::fmt::Write as _;
    let bench = make_benchmark_with(&cfg.benchmark, &cfg.overrides())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut s = String::new();
    let _ = writeln!(s, "# effective configuration, hash {}", cfg.hash());
    let _ = writeln!(s, "# plant family: \"pendulum\" or \"batch\"");
    let _ = writeln!(s, "benchmark = {:?}", cfg.benchmark);
    let _ = writeln!(s, "# feedback kind: \"ordinary\", \"lazy\", or \"heuristic\"");
    let _ = writeln!(s, "mode = {:?}", cfg.mode);
    let _ = writeln!(s, "# switch penalty weight in [0, 1)");
    match cfg.lambda {
        Some(l) => {
            let _ = writeln!(s, "lambda = {l}");
        }
        None => {
            let _ = writeln!(s, "# lambda unset: benchmark default {}", bench.lambda);
        }
    }
    let _ = writeln!(s, "# heuristic mismatch penalty: \"worst\" or \"mean\"");
    let _ = writeln!(s, "sigma = {:?}", cfg.sigma);
    let _ = writeln!(s, "# cells per state axis");
    match &cfg.grid_resolution {
        Some(r) => {
            let _ = writeln!(s, "grid_resolution = {r:?}");
        }
        None => {
            let _ = writeln!(
                s,
                "# grid_resolution unset: benchmark default {:?}",
                bench.grid.resolution()
            );
        }
    }
    let _ = writeln!(s, "# control values per input axis");
    match &cfg.control_counts {
        Some(c) => {
            let _ = writeln!(s, "control_counts = {c:?}");
        }
        None => {
            let _ = writeln!(
                s,
                "# control_counts unset: benchmark default ({} control values)",
                bench.plant.control_grid.len()
            );
        }
    }
    let _ = writeln!(s, "# plant sampling period in seconds");
    match cfg.sample_period {
        Some(t) => {
            let _ = writeln!(s, "sample_period = {t}");
        }
        None => {
            let _ = writeln!(
                s,
                "# sample_period unset: benchmark default {}",
                bench.plant.sample_period
            );
        }
    }
    let _ = writeln!(s, "# event box half-width as a multiple of the cell half-width");
    match cfg.event_radius {
        Some(r) => {
            let _ = writeln!(s, "event_radius = {r}");
        }
        None => {
            let _ = writeln!(
                s,
                "# event_radius unset: benchmark default {}",
                bench.plant.event_radius
            );
        }
    }
    let _ = writeln!(s, "# plant steps per event before the system counts as silent");
    match cfg.max_event_steps {
        Some(h) => {
            let _ = writeln!(s, "max_event_steps = {h}");
        }
        None => {
            let _ = writeln!(
                s,
                "# max_event_steps unset: benchmark default {}",
                bench.plant.max_event_steps
            );
        }
    }
    let _ = writeln!(s, "# reactor target block edge length in cells");
    match cfg.target_block {
        Some(b) => {
            let _ = writeln!(s, "target_block = {b}");
        }
        None => {
            let _ = writeln!(s, "# target_block unset: benchmark default");
        }
    }
    let _ = writeln!(s, "# reactor quadratic cost weight");
    match cfg.cost_gain {
        Some(g) => {
            let _ = writeln!(s, "cost_gain = {g}");
        }
        None => {
            let _ = writeln!(s, "# cost_gain unset: benchmark default");
        }
    }
    let _ = writeln!(s, "# start samples per cell axis for the graph build");
    match cfg.samples_per_axis {
        Some(n) => {
            let _ = writeln!(s, "samples_per_axis = {n}");
        }
        None => {
            let _ = writeln!(
                s,
                "# samples_per_axis unset: benchmark default {}",
                bench.sampling.per_axis
            );
        }
    }
    let _ = writeln!(s, "# sample placement within a cell: \"corners\" or \"centers\"");
    match &cfg.sample_placement {
        Some(p) => {
            let _ = writeln!(s, "sample_placement = {p:?}");
        }
        None => {
            let _ = writeln!(
                s,
                "# sample_placement unset: benchmark default {}",
                match bench.sampling.placement {
                    SamplePlacement::Corners => "corners",
                    SamplePlacement::Centers => "centers",
                }
            );
        }
    }
    let _ = writeln!(s, "# closed-loop start state");
    match &cfg.initial_state {
        Some(x) => {
            let _ = writeln!(s, "initial_state = {x:?}");
        }
        None => {
            let _ = writeln!(
                s,
                "# initial_state unset: benchmark default {:?}",
                bench.initial_states[0]
            );
        }
    }
    let _ = writeln!(s, "# control applied before the first event; unset = free first pick");
    match cfg.initial_control {
        Some(w) => {
            let _ = writeln!(s, "initial_control = {w}");
        }
        None => {
            let _ = writeln!(s, "# initial_control unset: free first transmission");
        }
    }
    let _ = writeln!(s, "# transmission budget for closed-loop runs");
    let _ = writeln!(s, "max_events = {}", cfg.max_events);
    let _ = writeln!(s, "# directory the commands write into");
    let _ = writeln!(s, "output_dir = {:?}", cfg.output_dir);
    let _ = writeln!(s, "# base seed for the verification fixtures");
    let _ = writeln!(s, "seed = {}", cfg.seed);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolveStats;

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let cfg = RunConfig::default();
        let h = cfg.hash();
        assert_eq!(h.len(), 16);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
        assert_eq!(h, cfg.hash(), "hashing must be deterministic");
        let mut other = cfg.clone();
        other.lambda = Some(0.5);
        assert_ne!(h, other.hash());
    }

    #[test]
    fn config_round_trips_through_toml_and_rejects_junk() {
        let cfg = RunConfig { lambda: Some(0.25), ..RunConfig::default() };
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(toml::from_str::<RunConfig>("no_such_field = 3\n").is_err());
        let sparse: RunConfig = toml::from_str("benchmark = \"batch\"\n").unwrap();
        assert_eq!(sparse.benchmark, "batch");
        assert_eq!(sparse.max_events, 200, "missing fields take defaults");
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "benchmark = \"batch\"\nmode = \"ordinary\"\n").unwrap();
        let cli = Cli::try_parse_from([
            "qevent",
            "synthesize",
            "--config",
            path.to_str().unwrap(),
            "--mode",
            "lazy",
            "--lambda",
            "0.5",
        ])
        .unwrap();
        let cfg = effective_config(&cli).unwrap();
        assert_eq!(cfg.benchmark, "batch", "file value survives");
        assert_eq!(cfg.mode, "lazy", "flag wins over file");
        assert_eq!(cfg.lambda, Some(0.5));
    }

    #[test]
    fn validation_rejects_bad_lambda_and_mode() {
        let cfg = RunConfig { lambda: Some(1.0), ..RunConfig::default() };
        match cfg.validate() {
            Err(CliError::Usage(msg)) => {
                assert!(msg.contains("lambda < 1"), "message must cite the bound: {msg}");
            }
            other => panic!("expected a usage error, got {other:?}"),
        }
        let cfg = RunConfig { mode: "psychic".to_string(), ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn state_parser_handles_spaces_and_garbage() {
        assert_eq!(parse_state("3.64, 0").unwrap(), vec![3.64, 0.0]);
        assert!(parse_state("1.0,up").is_err());
    }

    fn tiny_context() -> Context {
        let cfg = RunConfig {
            benchmark: "pendulum".to_string(),
            grid_resolution: Some(vec![32, 32]),
            control_counts: Some(vec![3]),
            output_dir: "unused".to_string(),
            ..RunConfig::default()
        };
        Context::new(cfg).unwrap()
    }

    #[test]
    fn base_table_round_trips() {
        let ctx = tiny_context();
        let n = ctx.bench.grid.cell_count();
        let sol = Solution {
            v: (0..n).map(|i| if i % 3 == 0 { f64::INFINITY } else { i as f64 * 0.37 }).collect(),
            u: (0..n).map(|i| (i % 3 != 0).then_some((i % 3) as u32)).collect(),
            stats: SolveStats::default(),
        };
        let text = base_table_text(&ctx, "base", &sol);
        assert!(text.contains("inf"), "infinite values print as inf");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(BASE_TABLE);
        fs::write(&path, &text).unwrap();
        let fb = load_base_feedback(&path, n).unwrap();
        assert_eq!(fb.0, sol.u);
        assert!(matches!(
            load_base_feedback(&path, n + 1),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn lazy_table_round_trips() {
        let ctx = tiny_context();
        let n = ctx.bench.grid.cell_count();
        let m = ctx.bench.plant.control_grid.len();
        let v: Vec<f64> =
            (0..n * m).map(|i| if i % 5 == 0 { f64::INFINITY } else { 0.125 * i as f64 }).collect();
        let table: Vec<Option<u32>> =
            (0..n * m).map(|i| (i % 5 != 0).then_some((i % m) as u32)).collect();
        let lazy = LazyFeedback::from_parts(0.75, n, m, v.clone(), table.clone());
        let text = lazy_table_text(&ctx, &lazy);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(LAZY_TABLE);
        fs::write(&path, &text).unwrap();
        let back = load_lazy_feedback(&path, n, m).unwrap();
        assert_eq!(back.lambda(), 0.75);
        assert_eq!(back.v, v);
        assert_eq!(back.table, table);
        assert!(matches!(load_base_feedback(&path, n), Err(CliError::Usage(_))));
    }

    #[test]
    fn annotated_config_marks_unset_fields() {
        let text = annotated_config(&RunConfig::default()).unwrap();
        assert!(text.contains("benchmark = \"pendulum\""));
        assert!(text.contains("# lambda unset: benchmark default 0.99"));
        assert!(text.contains("# grid_resolution unset: benchmark default [128, 128]"));
        // The annotated form must parse back as valid TOML.
        let parsed: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(parsed.benchmark, "pendulum");
    }

    #[test]
    fn table_names_follow_the_mode() {
        assert_eq!(default_table_name("ordinary"), "value.csv");
        assert_eq!(default_table_name("lazy"), "lazy_value.csv");
        assert_eq!(default_table_name("heuristic"), "heuristic_value.csv");
    }

    #[test]
    fn error_kinds_map_to_the_documented_exit_codes() {
        assert_eq!(CliError::Usage(String::new()).code(), 1);
        assert_eq!(CliError::Runtime(String::new()).code(), 2);
        assert_eq!(CliError::Verification(2).code(), 3);
        assert!(CliError::Verification(2).message().contains("2 check(s)"));
    }
}
