//! Command-line front end: `solve`, `bench` and `hierarchy-info`.
//!
//! Exit codes: 0 on success, 1 on bad input, 2 when a solve did not converge.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PrecLabel, PreconditionerConfig};
use crate::error::{Error, Result};
use crate::hierarchy::build_hierarchy;
use crate::krylov::{cg_solve, fcg_solve, CgPreconditioner, SolveOptions, SolveReport};
use crate::mtx::read_matrix_market_file;
use crate::partition::{make_partition, PartitionScheme};
use crate::problems::{grid_dims, poisson_matrix, ProblemKind};
use crate::sparse::CsrMatrix;
use crate::study::{run_study, StudyMode, StudySpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "amgbench", version, about = "Matching-based AMG solver and scaling bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve A x = b for a MatrixMarket matrix and print the solve report.
    Solve(SolveArgs),
    /// Run a strong or weak scaling study and emit JSON and CSV.
    Bench(BenchArgs),
    /// Build a hierarchy and print its summary.
    HierarchyInfo(InfoArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side as a MatrixMarket n x 1 matrix; all ones if omitted.
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long, default_value = "mlvsmatch3", value_parser = parse_prec)]
    prec: PrecLabel,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    ranks: usize,
    #[arg(long, default_value = "contiguous", value_parser = parse_scheme)]
    partition: PartitionScheme,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the solution, one value per line.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_problem)]
    problem: Option<ProblemKind>,
    /// Points per side, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_prec)]
    prec: Vec<PrecLabel>,
    #[arg(long, value_delimiter = ',')]
    ranks: Vec<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<StudyMode>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, env = "BENCH_SEED")]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_scheme)]
    partition: Option<PartitionScheme>,
    /// Directory for report.json and report.csv; JSON goes to stdout if
    /// omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InfoArgs {
    #[arg(long, conflicts_with = "problem")]
    matrix: Option<PathBuf>,
    #[arg(long, value_parser = parse_problem, requires = "n")]
    problem: Option<ProblemKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "mlvsmatch3", value_parser = parse_prec)]
    prec: PrecLabel,
    #[arg(long, default_value_t = 1)]
    ranks: usize,
    #[arg(long, default_value = "contiguous", value_parser = parse_scheme)]
    partition: PartitionScheme,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_prec(s: &str) -> std::result::Result<PrecLabel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_problem(s: &str) -> std::result::Result<ProblemKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<StudyMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "strong" => Ok(StudyMode::Strong),
        "weak" => Ok(StudyMode::Weak),
        _ => Err(format!("unknown mode {s:?} (expected strong or weak)")),
    }
}

fn parse_scheme(s: &str) -> std::result::Result<PartitionScheme, String> {
    match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "contiguous" => Ok(PartitionScheme::Contiguous),
        "sfc_morton" | "morton" => Ok(PartitionScheme::SfcMorton),
        _ => Err(format!("unknown partition {s:?} (expected contiguous or sfc_morton)")),
    }
}

fn parse_list<T>(value: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    value.split(',').map(|v| f(v.trim())).collect()
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("invalid number {s:?}"))
}

/// Reads a key=value file into `args`, leaving values already given on the
/// command line untouched. Blank lines and `#` comments are ignored.
fn merge_config_file(args: &mut BenchArgs, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)?;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { line: k + 1, msg };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
        let value = value.trim();
        match key.trim() {
            "problem" if args.problem.is_none() => args.problem = Some(parse_problem(value).map_err(parse_err)?),
            "n" if args.n.is_empty() => args.n = parse_list(value, parse_num).map_err(parse_err)?,
            "prec" if args.prec.is_empty() => args.prec = parse_list(value, parse_prec).map_err(parse_err)?,
            "ranks" if args.ranks.is_empty() => args.ranks = parse_list(value, parse_num).map_err(parse_err)?,
            "mode" if args.mode.is_none() => args.mode = Some(parse_mode(value).map_err(parse_err)?),
            "steps" if args.steps.is_none() => args.steps = Some(parse_num(value).map_err(parse_err)?),
            "tol" if args.tol.is_none() => args.tol = Some(parse_num(value).map_err(parse_err)?),
            "max_iters" if args.max_iters.is_none() => args.max_iters = Some(parse_num(value).map_err(parse_err)?),
            "seed" if args.seed.is_none() => args.seed = Some(parse_num(value).map_err(parse_err)?),
            "partition" if args.partition.is_none() => {
                args.partition = Some(parse_scheme(value).map_err(parse_err)?)
            }
            "out" if args.out.is_none() => args.out = Some(PathBuf::from(value)),
            "problem" | "n" | "prec" | "ranks" | "mode" | "steps" | "tol" | "max_iters" | "seed" | "partition"
            | "out" => {}
            other => return Err(parse_err(format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn solve_with(a: &CsrMatrix, b: &[f64], prec: PrecLabel, opts: &SolveOptions, part_ranks: usize, scheme: PartitionScheme) -> Result<(Vec<f64>, SolveReport)> {
    let x0 = vec![0.0; b.len()];
    match prec {
        PrecLabel::None => cg_solve(a, b, CgPreconditioner::None, opts, &x0),
        PrecLabel::Jacobi => cg_solve(a, b, CgPreconditioner::Jacobi, opts, &x0),
        label => {
            let part = make_partition(a.nrows(), part_ranks, scheme, None)?;
            let h = build_hierarchy(a, &part, &PreconditionerConfig::new(label))?;
            let (x, mut report) = fcg_solve(a, b, &h, opts, &x0)?;
            report.setup_seconds = h.setup_seconds();
            Ok((x, report))
        }
    }
}

fn run_solve(args: SolveArgs) -> Result<i32> {
    let a = read_matrix_market_file(&args.matrix)?;
    let b = match &args.rhs {
        Some(path) => {
            let r = read_matrix_market_file(path)?;
            if r.nrows() != a.nrows() || r.ncols() != 1 {
                return Err(Error::DimensionMismatch(format!(
                    "rhs is {}x{}, expected {}x1",
                    r.nrows(),
                    r.ncols(),
                    a.nrows()
                )));
            }
            (0..r.nrows()).map(|i| r.get(i, 0)).collect()
        }
        None => vec![1.0; a.nrows()],
    };
    if args.partition == PartitionScheme::SfcMorton {
        return Err(Error::Config("solve reads an unstructured matrix; use the contiguous partition".into()));
    }
    let opts = SolveOptions::with_tol(args.tol, args.max_iters);
    let (x, report) = solve_with(&a, &b, args.prec, &opts, args.ranks, args.partition)?;
    emit(&report.to_json()?, args.out.as_deref())?;
    if let Some(path) = &args.solution {
        let text: String = x.iter().map(|v| format!("{v:.17e}\n")).collect();
        fs::write(path, text)?;
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn run_bench(mut args: BenchArgs) -> Result<i32> {
    if let Some(path) = args.config.clone() {
        merge_config_file(&mut args, &path)?;
    }
    let defaults = StudySpec::default();
    let spec = StudySpec {
        mode: args.mode.unwrap_or(defaults.mode),
        problem: args.problem.unwrap_or(defaults.problem),
        sizes: if args.n.is_empty() { defaults.sizes } else { args.n },
        ranks: if args.ranks.is_empty() { defaults.ranks } else { args.ranks },
        tol: args.tol.unwrap_or(defaults.tol),
        max_iters: args.max_iters.unwrap_or(defaults.max_iters),
        time_steps: args.steps.unwrap_or(defaults.time_steps),
        seed: args.seed.unwrap_or(defaults.seed),
        partition: args.partition.unwrap_or(defaults.partition),
        perturbation: defaults.perturbation,
    };
    let labels = if args.prec.is_empty() { vec![PrecLabel::Mlvsmatch3] } else { args.prec };
    let configs: Vec<PreconditionerConfig> = labels.into_iter().map(PreconditionerConfig::new).collect();
    let report = run_study(&spec, &configs)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), report.to_json()?)?;
            report.write_csv(fs::File::create(dir.join("report.csv"))?)?;
            for c in &report.cells {
                println!(
                    "{:<10} {} n={:<4} ranks={:<3} levels={} avg_iters={:.2} converged={}",
                    c.config, c.problem, c.n, c.ranks, c.n_levels, c.avg_iterations, c.converged
                );
            }
        }
        None => println!("{}", report.to_json()?),
    }
    for c in report.cells.iter().filter(|c| c.error.is_some()) {
        eprintln!("{} n={} ranks={}: {}", c.config, c.n, c.ranks, c.error.as_deref().unwrap_or_default());
    }
    Ok(if report.all_converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn run_info(args: InfoArgs) -> Result<i32> {
    if !args.prec.is_amg() {
        return Err(Error::Config(format!("{} builds no hierarchy", args.prec)));
    }
    let (a, grid) = match (&args.matrix, args.problem, args.n) {
        (Some(path), _, _) => (read_matrix_market_file(path)?, None),
        (None, Some(p), Some(n)) => (poisson_matrix(p.dim(), n)?, Some(grid_dims(p.dim(), n)?)),
        _ => return Err(Error::Config("give --matrix, or --problem with --n".into())),
    };
    let part = make_partition(a.nrows(), args.ranks, args.partition, grid.as_deref())?;
    let h = build_hierarchy(&a, &part, &PreconditionerConfig::new(args.prec))?;
    emit(&serde_json::to_string_pretty(&h.summary())?, args.out.as_deref())?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Bench(a) => run_bench(a),
        Command::HierarchyInfo(a) => run_info(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
