use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use xorsat_core::experiments::{run_kernel_sweep, run_tree_sweep, Problem, SweepConfig};
use xorsat_core::format::{emit_graph, emit_instance, parse_graph, parse_instance};
use xorsat_core::grover::{
    grover_search_unknown, oracle_resources, query_cost_count, query_cost_decision, GroverError,
    OracleSpec, DEFAULT_CONFIRMATIONS,
};
use xorsat_core::hamiltonian::{
    hc_cost_exponent, hc_rank_check, hc_to_occupation, solve_hc, Graph, HcError,
};
use xorsat_core::search::{
    backtrack_count, backtrack_solve, count_in_reduction, optimize_permutation, TreeStats,
};
use xorsat_core::{
    gen_locked_random, reduce, Instance, LockedParams, Reduction, SolveStatus, SolverError,
    XorOutcome,
};

#[derive(Parser)]
#[command(
    name = "xorsat-reduce",
    version,
    about = "Occupation-problem SAT through parity reduction"
)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random locked instance, or a random graph with --graph.
    Gen(GenArgs),
    /// Decide satisfiability by enumerating the reduced space.
    Solve(InputArgs),
    /// Count solutions by enumerating the reduced space.
    Count(InputArgs),
    /// Backtracking search over the standard form.
    Backtrack(BacktrackArgs),
    /// Simulated Grover search with unknown solution count.
    Grover(GroverArgs),
    /// Query-cost and gate-count estimates.
    GroverCost(InputArgs),
    /// Hamiltonian cycle of a graph file.
    Hc(InputArgs),
    /// Kernel-excess statistics over a random ensemble (CSV).
    SweepKernel(SweepArgs),
    /// Backtracking tree statistics over a random ensemble (CSV).
    SweepTree(SweepArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input file, `-` for stdin.
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    Cubic,
    Bipartite,
    Connected,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Clause density M/n.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Explicit clause count, overriding --alpha.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long, default_value_t = 0.5)]
    negation_prob: f64,
    /// Generate a graph with n nodes instead of an instance.
    #[arg(long, value_enum)]
    graph: Option<GraphKind>,
    /// Edge probability for --graph connected.
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
}

#[derive(Args)]
struct BacktrackArgs {
    input: PathBuf,
    /// Explore the whole tree and count solutions.
    #[arg(long)]
    count: bool,
    /// Random restarts for free-coordinate optimisation (0 disables it).
    #[arg(long, default_value_t = 0)]
    perm_trials: usize,
}

#[derive(Args)]
struct GroverArgs {
    input: PathBuf,
    /// Consecutive artificial hits required to report UNSAT.
    #[arg(long, default_value_t = DEFAULT_CONFIRMATIONS)]
    confirmations: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// occ1in3, occ2in4 or <q>in<p>.
    #[arg(long, default_value = "occ1in3")]
    problem: String,
    /// Comma-separated variable counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0.5)]
    negation_prob: f64,
    #[arg(long, default_value_t = 100)]
    perm_trials: usize,
    /// Raise M to the smallest lockable value when alpha is too low.
    #[arg(long)]
    lockable_floor: bool,
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Guard(String),
    Generation(String),
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Generation(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Guard(m)
            | CliError::Generation(m)
            | CliError::Other(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::GuardExceeded { .. } => CliError::Guard(format!("enumeration guard: {e}")),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GroverError> for CliError {
    fn from(e: GroverError) -> Self {
        match e {
            GroverError::GuardExceeded { .. } => CliError::Guard(format!("simulation guard: {e}")),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<HcError> for CliError {
    fn from(e: HcError) -> Self {
        match e {
            HcError::GuardExceeded { .. } => CliError::Guard(format!("enumeration guard: {e}")),
            HcError::BruteForceGuard { .. } => CliError::Guard(format!("brute-force guard: {e}")),
            other => CliError::Other(other.to_string()),
        }
    }
}

/// Headline plus ordered fields; rendered as text or JSON from the same data.
struct Report {
    headline: String,
    fields: Vec<(&'static str, Value)>,
}

impl Report {
    fn new(headline: impl Into<String>) -> Self {
        Self {
            headline: headline.into(),
            fields: Vec::new(),
        }
    }

    fn field(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.fields.push((key, value.into()));
        self
    }

    fn render(&self, as_json: bool) -> String {
        if as_json {
            let mut map = serde_json::Map::new();
            map.insert("status".into(), Value::String(self.headline.clone()));
            for (k, v) in &self.fields {
                map.insert((*k).into(), v.clone());
            }
            return format!("{}\n", Value::Object(map));
        }
        let mut out = format!("{}\n", self.headline);
        for (k, v) in &self.fields {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k}: {shown}\n"));
        }
        out
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
    }
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    parse_instance(&read_input(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph, CliError> {
    parse_graph(&read_input(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn structure(report: Report, instance: &Instance, r: &Reduction) -> Report {
    report
        .field("n", instance.n())
        .field("M", instance.m())
        .field("m_prime", r.m_prime())
        .field("k", r.k())
        .field("delta_k", r.kernel_excess(instance))
}

/// Report for an instance whose parity relaxation is inconsistent. Witness
/// clauses are numbered from 1 in file order.
fn xor_certified(instance: &Instance, witness: &[usize]) -> Report {
    Report::new("UNSAT (XOR-certified)")
        .field("n", instance.n())
        .field("M", instance.m())
        .field(
            "witness_clauses",
            witness.iter().map(|c| c + 1).collect::<Vec<_>>(),
        )
}

fn tree_fields(report: Report, tree: &TreeStats) -> Report {
    report
        .field("tree_nodes", tree.total_nodes)
        .field("nodes_per_depth", tree.nodes_per_depth.clone())
}

fn cmd_gen(args: &GenArgs, seed: u64) -> Result<String, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Some(kind) = args.graph {
        let g = match kind {
            GraphKind::Cubic => Graph::random_cubic(args.n, &mut rng),
            GraphKind::Bipartite => Graph::random_bipartite_cubic(args.n, &mut rng),
            GraphKind::Connected => Graph::random_connected(args.n, args.edge_prob, &mut rng),
        }
        .map_err(|e| CliError::Generation(e.to_string()))?;
        return Ok(emit_graph(&g));
    }
    let mut params =
        LockedParams::with_alpha(args.n, args.alpha, args.p, args.q, args.negation_prob);
    if let Some(m) = args.m {
        params.m = m;
    }
    let inst =
        gen_locked_random(params, &mut rng).map_err(|e| CliError::Generation(e.to_string()))?;
    Ok(emit_instance(&inst))
}

fn cmd_solve(path: &Path) -> Result<Report, CliError> {
    let inst = load_instance(path)?;
    let r = match reduce(&inst) {
        XorOutcome::Infeasible(w) => return Ok(xor_certified(&inst, &w.witness)),
        XorOutcome::Feasible(r) => r,
    };
    let outcome = xorsat_core::solve_enumerate(&inst)?;
    let report = match &outcome.status {
        SolveStatus::Sat(a) => Report::new("SAT").field("assignment", a.to_string()),
        SolveStatus::Unsat => Report::new("UNSAT"),
    };
    Ok(structure(report, &inst, &r).field("queries", outcome.queries))
}

fn cmd_count(path: &Path) -> Result<Report, CliError> {
    let inst = load_instance(path)?;
    let r = match reduce(&inst) {
        XorOutcome::Infeasible(w) => return Ok(xor_certified(&inst, &w.witness).field("count", 0)),
        XorOutcome::Feasible(r) => r,
    };
    let v = count_in_reduction(&inst, &r)?;
    Ok(structure(Report::new(format!("COUNT={v}")), &inst, &r)
        .field("count", v)
        .field("queries", 1u64 << r.k()))
}

fn cmd_backtrack(args: &BacktrackArgs, seed: u64) -> Result<Report, CliError> {
    let inst = load_instance(&args.input)?;
    let r = match reduce(&inst) {
        XorOutcome::Infeasible(w) => {
            return Ok(tree_fields(
                xor_certified(&inst, &w.witness),
                &TreeStats::empty(),
            ));
        }
        XorOutcome::Feasible(r) => r,
    };
    let r = if args.perm_trials > 0 {
        optimize_permutation(&inst, &r, args.perm_trials, seed)
    } else {
        r
    };
    let free: Vec<usize> = r.standard().free_coordinates().to_vec();
    if args.count {
        let (v, tree) = backtrack_count(&inst, &r);
        let report = structure(Report::new(format!("COUNT={v}")), &inst, &r).field("count", v);
        return Ok(tree_fields(report, &tree).field("free_coordinates", free));
    }
    let (outcome, tree) = backtrack_solve(&inst, &r);
    let report = match &outcome.status {
        SolveStatus::Sat(a) => Report::new("SAT").field("assignment", a.to_string()),
        SolveStatus::Unsat => Report::new("UNSAT"),
    };
    let report = structure(report, &inst, &r).field("queries", outcome.queries);
    Ok(tree_fields(report, &tree).field("free_coordinates", free))
}

fn cmd_grover(args: &GroverArgs, seed: u64) -> Result<Report, CliError> {
    let inst = load_instance(&args.input)?;
    let r = match reduce(&inst) {
        XorOutcome::Infeasible(w) => {
            return Ok(xor_certified(&inst, &w.witness).field("seed", seed))
        }
        XorOutcome::Feasible(r) => r,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let search =
        grover_search_unknown::<f64, _>(&OracleSpec::new(&inst, &r), args.confirmations, &mut rng)?;
    let report = match &search.outcome.status {
        SolveStatus::Sat(a) => Report::new("SAT").field("assignment", a.to_string()),
        SolveStatus::Unsat => Report::new("UNSAT (certified)"),
    };
    Ok(structure(report, &inst, &r)
        .field("queries", search.outcome.queries)
        .field("rounds", search.rounds)
        .field("artificial_hits", search.artificial_hits)
        .field("seed", seed))
}

fn cmd_grover_cost(path: &Path) -> Result<Report, CliError> {
    let inst = load_instance(path)?;
    let r = match reduce(&inst) {
        XorOutcome::Infeasible(w) => return Ok(xor_certified(&inst, &w.witness)),
        XorOutcome::Feasible(r) => r,
    };
    let decision = query_cost_decision::<f64>(inst.n(), r.m_prime())?;
    let res = oracle_resources(&inst, &r);
    let mut report =
        structure(Report::new("COST"), &inst, &r).field("query_cost_decision", decision);
    // The counting cost needs V, which is only known below the enumeration guard.
    if let Ok(v) = count_in_reduction(&inst, &r) {
        let count_cost = query_cost_count::<f64>(inst.n(), r.m_prime(), v)?;
        report = report
            .field("solutions", v)
            .field("query_cost_count", count_cost);
    }
    Ok(report
        .field("ancillas", res.ancillas)
        .field("gates_module_i", res.gates_module_i)
        .field("gates_module_ii", res.gates_module_ii)
        .field("gates_module_iii", res.gates_module_iii)
        .field("gates_module_iv", res.gates_module_iv)
        .field("total_gates", res.total_gates)
        .field("gates_over_n_squared", res.quadratic_ratio(inst.n())))
}

fn cmd_hc(path: &Path) -> Result<Report, CliError> {
    let g = load_graph(path)?;
    let inst = hc_to_occupation(&g);
    let rank = hc_rank_check(&g);
    let cycle = solve_hc(&g)?;
    let report = match &cycle {
        Some(x) => {
            let edges: Vec<Value> = x
                .ones()
                .map(|e| {
                    let (u, v) = g.edges()[e];
                    json!([u + 1, v + 1])
                })
                .collect();
            Report::new("HAMILTONIAN").field("cycle_edges", edges)
        }
        None => Report::new("NOT HAMILTONIAN"),
    };
    Ok(report
        .field("nodes", g.n_nodes())
        .field("edges", g.n_edges())
        .field("rank", rank)
        .field("k", g.n_edges() - rank)
        .field("cost_exponent", hc_cost_exponent(&g))
        .field("clauses", inst.m()))
}

fn sweep_config(args: &SweepArgs, seed: u64) -> Result<SweepConfig, CliError> {
    let problem: Problem = args
        .problem
        .parse()
        .map_err(|e: xorsat_core::experiments::SweepError| CliError::Other(e.to_string()))?;
    let mut c = SweepConfig::new(problem, args.n.clone(), args.alpha, args.samples, seed);
    c.negation_prob = args.negation_prob;
    c.perm_trials = args.perm_trials;
    c.lockable_floor = args.lockable_floor;
    c.validate().map_err(|e| CliError::Other(e.to_string()))?;
    Ok(c)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let seed = cli.seed;
    let report = match &cli.command {
        Command::Gen(a) => return cmd_gen(a, seed),
        Command::Solve(a) => cmd_solve(&a.input)?,
        Command::Count(a) => cmd_count(&a.input)?,
        Command::Backtrack(a) => cmd_backtrack(a, seed)?,
        Command::Grover(a) => cmd_grover(a, seed)?,
        Command::GroverCost(a) => cmd_grover_cost(&a.input)?,
        Command::Hc(a) => cmd_hc(&a.input)?,
        Command::SweepKernel(a) => {
            let sweep = run_kernel_sweep(&sweep_config(a, seed)?)
                .map_err(|e| CliError::Other(e.to_string()))?;
            return Ok(if cli.json {
                serde_json::to_string(&sweep).map_err(|e| CliError::Other(e.to_string()))? + "\n"
            } else {
                sweep.to_csv()
            });
        }
        Command::SweepTree(a) => {
            let sweep = run_tree_sweep(&sweep_config(a, seed)?)
                .map_err(|e| CliError::Other(e.to_string()))?;
            return Ok(if cli.json {
                serde_json::to_string(&sweep).map_err(|e| CliError::Other(e.to_string()))? + "\n"
            } else {
                sweep.to_csv()
            });
        }
    };
    Ok(report.render(cli.json))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| {
        match &cli.out {
            Some(path) => fs::write(path, text)?,
            None => io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
