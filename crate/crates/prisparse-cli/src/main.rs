//! Command-line front end: solve instances, validate solutions, generate
//! random benchmarks, certify approximation ratios against the exact
//! optimum, and export the nested per-level subgraphs of a solution.
//!
//! Exit codes: 0 success, 1 invalid result or failed sweep, 2 unreadable
//! input, 3 rejected family/strategy/solver combination, 4 disconnected
//! terminals, 5 declared weight does not match the rates.

use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use prisparse::format::{
    parse_instance, parse_solution, serialize_instance, serialize_solution, InstanceFile,
    SolutionFile,
};
use prisparse::generate::{generate, GenModel, GenParams, PriorityDist};
use prisparse::graph::GraphError;
use prisparse::oracle::{certify_ratio, CertifyError, OracleBudget, OracleError, Verdict};
use prisparse::pipeline::{
    partition, round_up_priorities, run, PartitionStrategy, PipelineError, RunReport,
};
use prisparse::solvers::{SolveError, SolverKind};
use prisparse::validity::{
    constraint_count, is_valid_k_priority, solution_weight, ConstraintFamily,
};
use prisparse::weight::{format_weight, Weight};

const EXIT_FAILED: u8 = 1;
const EXIT_UNREADABLE: u8 = 2;
const EXIT_REJECTED: u8 = 3;
const EXIT_DISCONNECTED: u8 = 4;
const EXIT_WEIGHT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(name = "prisparse", version, about = "k-priority graph sparsification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the solution file.
    Solve {
        instance: PathBuf,
        #[arg(long, value_parser = family_arg)]
        family: ConstraintFamily,
        #[arg(long, value_parser = strategy_arg, default_value = "inclusive")]
        strategy: PartitionStrategy,
        /// Defaults to the standard solver for the family.
        #[arg(long, value_parser = solver_arg)]
        solver: Option<SolverKind>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution file against its instance.
    Validate { instance: PathBuf, solution: PathBuf },
    /// Generate a random instance.
    Gen(GenArgs),
    /// Sweep random instances and compare runs against the exact optimum.
    Certify(CertifyArgs),
    /// Write one edge-list file per priority level of a solution.
    Levels {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// er, grid, or star.
    #[arg(long)]
    model: String,
    /// Vertex count (er and star).
    #[arg(long)]
    n: Option<usize>,
    /// Edge probability (er).
    #[arg(long)]
    p: Option<f64>,
    /// Grid dimensions, e.g. 3x4.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    k: u32,
    /// uniform or constant:<p>.
    #[arg(long, value_parser = dist_arg, default_value = "uniform")]
    priority_dist: PriorityDist,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Edge cap for the exact enumeration; instances above it are skipped.
    #[arg(long, default_value_t = 12)]
    budget: usize,
    #[arg(long, value_parser = family_arg)]
    family: ConstraintFamily,
    #[arg(long, value_parser = strategy_arg, default_value = "inclusive")]
    strategy: PartitionStrategy,
    /// Defaults to the standard solver for the family.
    #[arg(long, value_parser = solver_arg)]
    solver: Option<SolverKind>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest vertex count in the sweep; sizes cycle through 2..=n.
    #[arg(long, default_value_t = 7)]
    n: usize,
    /// Largest k in the sweep; values cycle through 1..=k.
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

fn family_arg(s: &str) -> Result<ConstraintFamily, String> {
    s.parse()
}

fn strategy_arg(s: &str) -> Result<PartitionStrategy, String> {
    s.parse()
}

fn solver_arg(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn dist_arg(s: &str) -> Result<PriorityDist, String> {
    s.parse()
}

fn standard_solver(family: &ConstraintFamily) -> SolverKind {
    match family {
        ConstraintFamily::Tree => SolverKind::SteinerMst2Approx,
        ConstraintFamily::Multiplicative(alpha) => {
            SolverKind::SubsetSpannerClosure { alpha: alpha.clone() }
        }
        _ => SolverKind::PathGreedy,
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Display) -> Failure {
    Failure { code, message: message.to_string() }
}

fn unreadable(e: impl Display) -> Failure {
    fail(EXIT_UNREADABLE, e)
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let code = match &e {
        PipelineError::InvalidStrategyForFamily { .. }
        | PipelineError::Solve(SolveError::IncompatibleSolver { .. }) => EXIT_REJECTED,
        PipelineError::Solve(SolveError::Graph(GraphError::Disconnected { .. }))
        | PipelineError::Solve(SolveError::Oracle(OracleError::Infeasible)) => EXIT_DISCONNECTED,
        _ => EXIT_FAILED,
    };
    fail(code, e)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { instance, family, strategy, solver, out } => {
            cmd_solve(instance, family, strategy, solver, out)
        }
        Command::Validate { instance, solution } => cmd_validate(instance, solution),
        Command::Gen(args) => cmd_gen(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Levels { instance, solution, out_dir } => cmd_levels(instance, solution, out_dir),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn read_instance(path: &PathBuf) -> Result<InstanceFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| unreadable(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(unreadable)
}

fn read_solution(path: &PathBuf) -> Result<SolutionFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| unreadable(format!("{}: {e}", path.display())))?;
    parse_solution(&text).map_err(unreadable)
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| fail(EXIT_FAILED, format!("{}: {e}", path.display())))
}

fn cmd_solve(
    instance: PathBuf,
    family: ConstraintFamily,
    strategy: PartitionStrategy,
    solver: Option<SolverKind>,
    out: PathBuf,
) -> Result<ExitCode, Failure> {
    let ins = read_instance(&instance)?;
    let solver = solver.unwrap_or_else(|| standard_solver(&family));
    let (solution, report) =
        run(&ins.graph, &family, strategy, &solver).map_err(pipeline_failure)?;
    let file = SolutionFile::from_solution(&ins, &family, strategy, &solver, &solution);
    write_file(&out, &serialize_solution(&file))?;

    println!("instance {}", ins.reference());
    println!("family {family}");
    println!("strategy {strategy}");
    println!("solver {solver}");
    print_report(&ins.graph, strategy, &report);
    eprintln!("wall {:?}", report.wall);
    if report.validity.is_valid() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_FAILED))
    }
}

fn print_report(g: &prisparse::graph::PriorityGraph, strategy: PartitionStrategy, r: &RunReport) {
    let (rounded, _) = round_up_priorities(g);
    let counts = constraint_count(
        &partition(&rounded, strategy).expect("the run built this partitioning"),
    );
    println!("constraints {}", counts.total);
    for (label, from, to) in &r.rounding {
        println!("rounded {label} {from} -> {to}");
    }
    println!("invocations {} of {}", r.invocations, r.invocation_budget);
    for (i, w) in &r.merged_level_weights {
        println!("level {i} weight {}", format_weight(w));
    }
    println!("weight {}", format_weight(&r.total_weight));
    for v in &r.validity.violations {
        println!("violation {v}");
    }
    println!("valid {}", if r.validity.is_valid() { "yes" } else { "no" });
}

fn cmd_validate(instance: PathBuf, solution: PathBuf) -> Result<ExitCode, Failure> {
    let ins = read_instance(&instance)?;
    let file = read_solution(&solution)?;
    let resolved = file.resolve(&ins).map_err(unreadable)?;

    let recomputed =
        solution_weight(&ins.graph, &resolved).expect("resolved against this instance");
    if recomputed != file.weight {
        return Err(fail(
            EXIT_WEIGHT_MISMATCH,
            format!(
                "declared weight {} but the rates add up to {}",
                format_weight(&file.weight),
                format_weight(&recomputed)
            ),
        ));
    }
    for (&i, declared) in &file.level_weights {
        let actual = resolved.level_subgraph(i).weight(&ins.graph);
        if actual != *declared {
            return Err(fail(
                EXIT_WEIGHT_MISMATCH,
                format!(
                    "declared level {i} weight {} but its edges weigh {}",
                    format_weight(declared),
                    format_weight(&actual)
                ),
            ));
        }
    }

    println!("instance {}", ins.reference());
    println!("weight {} confirmed", format_weight(&recomputed));
    let report = is_valid_k_priority(&ins.graph, &resolved, &file.family);
    for (level, ok) in &report.per_level {
        println!("level {level} {}", if *ok { "ok" } else { "violated" });
    }
    for v in &report.violations {
        println!("violation {v}");
    }
    println!("valid {}", if report.is_valid() { "yes" } else { "no" });
    if report.is_valid() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_FAILED))
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, Failure> {
    let model = match args.model.as_str() {
        "er" => {
            let n = args.n.ok_or_else(|| unreadable("--model er needs --n"))?;
            let p = args.p.ok_or_else(|| unreadable("--model er needs --p"))?;
            GenModel::Er { n, p }
        }
        "grid" => {
            let dims = args.dims.ok_or_else(|| unreadable("--model grid needs --dims"))?;
            let (rows, cols) = dims
                .split_once('x')
                .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)))
                .ok_or_else(|| unreadable(format!("bad --dims {dims:?}, expected e.g. 3x4")))?;
            GenModel::Grid { rows, cols }
        }
        "star" => {
            let n = args.n.ok_or_else(|| unreadable("--model star needs --n"))?;
            GenModel::Star { n }
        }
        other => return Err(unreadable(format!("unknown model {other:?}"))),
    };
    let params =
        GenParams { model, k: args.k, priorities: args.priority_dist, seed: args.seed };
    let ins = generate(&params).map_err(unreadable)?;
    write_file(&args.out, &serialize_instance(&ins))?;
    println!(
        "wrote {} ({} vertices, {} edges, k={})",
        args.out.display(),
        ins.graph.vertex_count(),
        ins.graph.edge_count(),
        ins.graph.k()
    );
    Ok(ExitCode::SUCCESS)
}

/// A budget overrun from either side of the comparison: the enumeration or
/// an exact per-level solver inside the pipeline.
fn budget_detail(e: &CertifyError) -> Option<&str> {
    match e {
        CertifyError::Oracle(OracleError::BudgetExceeded { detail })
        | CertifyError::Pipeline(PipelineError::Solve(SolveError::Oracle(
            OracleError::BudgetExceeded { detail },
        ))) => Some(detail),
        _ => None,
    }
}

fn cmd_certify(args: CertifyArgs) -> Result<ExitCode, Failure> {
    if args.n < 2 {
        return Err(unreadable("--n must be at least 2"));
    }
    if args.k < 1 {
        return Err(unreadable("--k must be at least 1"));
    }
    let start = Instant::now();
    let budget = OracleBudget { max_edges: args.budget, ..OracleBudget::default() };
    let solver = match args.solver.unwrap_or_else(|| standard_solver(&args.family)) {
        // The sweep budget also caps the exact per-level solver.
        SolverKind::Exact { .. } => SolverKind::Exact { budget },
        s => s,
    };
    println!("family {} strategy {} solver {}", args.family, args.strategy, solver);
    println!("index seed n m k ratio verdict");

    let mut ratios: Vec<Weight> = Vec::new();
    let mut skipped = 0usize;
    let mut failures = 0usize;
    for j in 0..args.count {
        let seed = args.seed.wrapping_add(j as u64);
        let n = 2 + j % (args.n - 1);
        let k = 1 + (j as u32) % args.k;
        let ins = generate(&GenParams {
            model: GenModel::Er { n, p: args.p },
            k,
            priorities: PriorityDist::Uniform,
            seed,
        })
        .map_err(unreadable)?;
        let g = &ins.graph;
        let row = format!("{j} {seed} {} {} {k}", g.vertex_count(), g.edge_count());
        match certify_ratio(g, &args.family, args.strategy, &solver, &budget) {
            Ok(cert) => {
                println!("{row} {} {}", format_weight(&cert.ratio), cert.verdict);
                if cert.verdict != Verdict::Pass {
                    failures += 1;
                }
                ratios.push(cert.ratio);
            }
            Err(e) => match budget_detail(&e) {
                Some(detail) => {
                    println!("{row} - skipped: {detail}");
                    skipped += 1;
                }
                None => return Err(fail(EXIT_FAILED, e)),
            },
        }
    }
    eprintln!("wall {:?}", start.elapsed());

    println!("certified {} of {} ({skipped} over budget)", ratios.len(), args.count);
    if ratios.is_empty() {
        println!("nothing certified");
        return Ok(ExitCode::from(EXIT_FAILED));
    }
    let min = ratios.iter().min().unwrap();
    let max = ratios.iter().max().unwrap();
    let mean = ratios.iter().cloned().sum::<Weight>()
        / Weight::from_integer(ratios.len() as i128);
    println!(
        "ratio min {} mean {} max {}",
        format_weight(min),
        format_weight(&mean),
        format_weight(max)
    );
    if failures == 0 {
        println!("all passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failures} failed");
        Ok(ExitCode::from(EXIT_FAILED))
    }
}

fn cmd_levels(instance: PathBuf, solution: PathBuf, out_dir: PathBuf) -> Result<ExitCode, Failure> {
    let ins = read_instance(&instance)?;
    let file = read_solution(&solution)?;
    let resolved = file.resolve(&ins).map_err(unreadable)?;
    fs::create_dir_all(&out_dir)
        .map_err(|e| fail(EXIT_FAILED, format!("{}: {e}", out_dir.display())))?;

    let g = &ins.graph;
    for i in 1..=g.k() {
        let mut lines = vec![format!("# level {i} of {}", g.k())];
        for (&eid, &rate) in resolved.rates() {
            if rate >= i {
                let e = g.edge(eid);
                lines.push(format!(
                    "e {} {} {} rate {rate}",
                    g.label(e.u),
                    g.label(e.v),
                    format_weight(&e.weight)
                ));
            }
        }
        let path = out_dir.join(format!("level_{i}.txt"));
        write_file(&path, &(lines.join("\n") + "\n"))?;
        println!("level {i} -> {} ({} edges)", path.display(), lines.len() - 1);
    }
    Ok(ExitCode::SUCCESS)
}
