//! The `dimers` command line tool.
//!
//! Subcommands map onto the library: `exact` (segment analytics CSV),
//! `oracle` (exact small-graph law), `simulate` (Monte Carlo density),
//! `covariance`, `clt`, `cages`, `bound`, `diagnose`, and `report` (the
//! variance-discrepancy study in markdown).
//!
//! Reproducibility contract: the seed defaults to [`DEFAULT_SEED`] (never
//! wall-clock time), replication i always uses PRNG stream i, and outputs
//! embed the resolved configuration, so identical invocations produce
//! byte-identical output regardless of `--threads`.
//!
//! A flat key=value config file can prefill any long flag of the chosen
//! subcommand; explicit flags override file entries. The environment
//! variable `DIMERS_THREADS` supplies the default worker count.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;

use crate::exact1d;
use crate::graphs::GraphSpec;
use crate::oracle;
use crate::report;
use crate::stats;

/// Default PRNG seed for every subcommand.
pub const DEFAULT_SEED: u64 = 271_828;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "dimers", version, about = "Random sequential dimer placement on graphs")]
struct Cli {
    /// Worker threads (default: DIMERS_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat key=value file prefilling the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact segment analytics as CSV: e_n, density, and both variance
    /// recurrences for every n up to --n.
    Exact(ExactArgs),
    /// Exact monomer-count law of a small graph (JSON).
    Oracle(OracleArgs),
    /// Monte Carlo density on a graph; optionally dump one configuration.
    Simulate(SimulateArgs),
    /// Covariance vs separation on a periodic box (CSV or JSON).
    Covariance(CovarianceArgs),
    /// Normality check of the normalized monomer sums (JSON).
    Clt(CltArgs),
    /// Cage density and caged-interior law on a periodic box (JSON).
    Cages(CagesArgs),
    /// The three-term concentration bound, optionally checked empirically.
    Bound(BoundArgs),
    /// Quick self-diagnosis battery (JSON).
    Diagnose(DiagnoseArgs),
    /// Variance-discrepancy study (markdown).
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ExactArgs {
    /// Largest segment length.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Graph spec: path:N, cycle:N, lattice:DIM:SIDE:{free|periodic}, tree:DEG:DEPTH.
    #[arg(long)]
    graph: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dump the first replication's configuration as JSON to this path.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    /// Dump the graph as an edge-list text file ("v e" then one pair per line).
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CovarianceArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    max_sep: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output format: csv (curve rows) or json (full summary with sigma2).
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
struct CltArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CagesArgs {
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Box side length.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Truncation radius; defaults to ceil(ln n).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Also measure the empirical exceedance with this many replications.
    #[arg(long)]
    check_reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Corrected-recurrence evaluation point.
    #[arg(long)]
    large_n: Option<usize>,
    /// Monte Carlo segment length.
    #[arg(long)]
    mc_n: Option<usize>,
    #[arg(long)]
    mc_reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Csv => write!(f, "csv"),
            OutputFormat::Json => write!(f, "json"),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

/// Failures carrying the process exit code: 2 for validation problems,
/// 1 for runtime errors.
#[derive(Debug)]
struct RunError {
    code: i32,
    message: String,
}

impl RunError {
    fn validation(message: impl Into<String>) -> Self {
        RunError { code: 2, message: message.into() }
    }
    fn runtime(message: impl Into<String>) -> Self {
        RunError { code: 1, message: message.into() }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::runtime(format!("io error: {e}"))
    }
}

impl From<stats::StatsError> for RunError {
    fn from(e: stats::StatsError) -> Self {
        match e {
            stats::StatsError::TooFewReps { .. }
            | stats::StatsError::BadGraph(_)
            | stats::StatsError::SeparationTooLarge { .. }
            | stats::StatsError::NotA2dLattice
            | stats::StatsError::EmptyPath => RunError::validation(e.to_string()),
            _ => RunError::runtime(e.to_string()),
        }
    }
}

/// CLI entry point; exits the process.
pub fn run() -> ! {
    let code = match Cli::try_parse() {
        Ok(cli) => match execute(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message);
                e.code
            }
        },
        Err(e) => {
            // clap prints usage on stderr for errors, stdout for --help
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    };
    std::process::exit(code)
}

/// Flat key=value config file; '#' starts a comment line.
fn load_config(path: &Option<PathBuf>) -> Result<HashMap<String, String>, RunError> {
    let mut map = HashMap::new();
    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::validation(format!("config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                RunError::validation(format!(
                    "config {} line {}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            map.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
    }
    Ok(map)
}

/// Flag value, then config-file value, then default.
fn resolve<T>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, RunError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|e| RunError::validation(format!("config key {key}={raw}: {e}"))),
        None => Ok(default),
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), RunError> {
    let from_env = std::env::var("DIMERS_THREADS")
        .ok()
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| RunError::validation(format!("DIMERS_THREADS={v} is not a number")))
        })
        .transpose()?;
    if let Some(n) = threads.or(from_env) {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), RunError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    format_version: u32,
    command: String,
    config: serde_json::Value,
    results: T,
}

fn json_output<T: Serialize>(
    command: &str,
    config: serde_json::Value,
    results: T,
) -> Result<String, RunError> {
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        command: command.to_string(),
        config,
        results,
    };
    let mut s = serde_json::to_string_pretty(&envelope)
        .map_err(|e| RunError::runtime(format!("serialize: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn csv_header(command: &str, config: &serde_json::Value) -> String {
    format!("# format_version={FORMAT_VERSION} command={command} config={config}\n")
}

fn execute(cli: Cli) -> Result<(), RunError> {
    init_threads(cli.threads)?;
    let file = load_config(&cli.config)?;
    let out = &cli.out;
    match cli.command {
        Command::Exact(args) => {
            let n = resolve(args.n, &file, "n", 50)?;
            let e = exact1d::expected_monomers_upto(n);
            let corrected = exact1d::variance_corrected_upto(n);
            let config = json!({"n": n});
            let mut s = csv_header("exact", &config);
            s.push_str("n,e_n,e_n_decimal,density,corrected_variance,paper_variance\n");
            for k in 0..=n {
                let density = if k == 0 {
                    "0".to_string()
                } else {
                    exact1d::decimal_string(&(&e[k] / num_rational::BigRational::from(
                        num_bigint::BigInt::from(k as u64),
                    )), 9)
                };
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    k,
                    e[k],
                    exact1d::decimal_string(&e[k], 9),
                    density,
                    corrected[k],
                    exact1d::variance_paper_recurrence(k),
                ));
            }
            write_output(out, &s)
        }
        Command::Oracle(args) => {
            let graph = resolve(args.graph, &file, "graph", "path:4".to_string())?;
            let spec: GraphSpec =
                graph.parse().map_err(|e| RunError::validation(format!("{e}")))?;
            let g = spec.build().map_err(|e| RunError::validation(e.to_string()))?;
            let law = oracle::exact_distribution(&g)
                .map_err(|e| RunError::validation(e.to_string()))?;
            let mut fractions = serde_json::Map::new();
            let mut decimals = serde_json::Map::new();
            for (m, p) in law.probs() {
                fractions.insert(m.to_string(), json!(p.to_string()));
                decimals.insert(m.to_string(), json!(p.to_f64()));
            }
            let results = json!({
                "distribution": fractions,
                "distribution_decimal": decimals,
                "mean": law.mean().to_string(),
                "mean_decimal": law.mean().to_f64(),
                "variance": law.variance().to_string(),
                "variance_decimal": law.variance().to_f64(),
            });
            let s = json_output("oracle", json!({"graph": graph}), results)?;
            write_output(out, &s)
        }
        Command::Simulate(args) => {
            let graph = resolve(args.graph, &file, "graph", "lattice:2:64:periodic".to_string())?;
            let reps = resolve(args.reps, &file, "reps", 100)?;
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let spec: GraphSpec =
                graph.parse().map_err(|e| RunError::validation(format!("{e}")))?;
            let density = stats::density_estimate(&spec, reps, seed)?;
            if let Some(dump) = &args.dump_graph {
                let g = spec.build().map_err(|e| RunError::validation(e.to_string()))?;
                fs::write(dump, g.to_edge_list_string())?;
            }
            if let Some(dump) = &args.dump_config {
                let g = spec.build().map_err(|e| RunError::validation(e.to_string()))?;
                let w = crate::engine::sample_wakeups(&g, seed, 0);
                let c = crate::engine::run_rsa(&g, &w)
                    .map_err(|e| RunError::runtime(e.to_string()))?;
                let dump_json = json_output(
                    "simulate/dump-config",
                    json!({"graph": graph, "seed": seed, "stream": 0}),
                    json!({
                        "placed_edges": c.placed(),
                        "monomer_vertices": c.monomer_vertices(),
                    }),
                )?;
                fs::write(dump, dump_json)?;
            }
            let s = json_output(
                "simulate",
                json!({"graph": graph, "reps": reps, "seed": seed}),
                json!({"density": density}),
            )?;
            write_output(out, &s)
        }
        Command::Covariance(args) => {
            let dim = resolve(args.dim, &file, "dim", 2)?;
            let side = resolve(args.side, &file, "side", 64)?;
            let reps = resolve(args.reps, &file, "reps", 1000)?;
            let max_sep = resolve(args.max_sep, &file, "max_sep", 10)?;
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let format = resolve(args.format, &file, "format", OutputFormat::Csv)?;
            let curve = stats::covariance_curve(dim, side, reps, max_sep, seed)?;
            let config = json!({
                "dim": dim, "side": side, "reps": reps,
                "max_sep": max_sep, "seed": seed,
            });
            match format {
                OutputFormat::Csv => {
                    let mut s = csv_header("covariance", &config);
                    s.push_str("separation,covariance,std_error,envelope\n");
                    let degree = (2 * dim) as f64;
                    let mut envelope = 1.0;
                    for (r, est) in &curve {
                        if *r > 0 {
                            envelope *= degree / *r as f64;
                        }
                        s.push_str(&format!(
                            "{},{},{},{}\n",
                            r, est.estimate, est.std_error, envelope
                        ));
                    }
                    write_output(out, &s)
                }
                OutputFormat::Json => {
                    let sigma2 = stats::sigma2_estimate(dim, side, reps, seed)?;
                    let results = json!({
                        "curve": curve
                            .iter()
                            .map(|(r, e)| json!({"separation": r, "estimate": e}))
                            .collect::<Vec<_>>(),
                        "sigma2": sigma2,
                        "sigma2_positive": sigma2.excludes_zero(2.576),
                    });
                    let s = json_output("covariance", config, results)?;
                    write_output(out, &s)
                }
            }
        }
        Command::Clt(args) => {
            let dim = resolve(args.dim, &file, "dim", 2)?;
            let side = resolve(args.side, &file, "side", 64)?;
            let reps = resolve(args.reps, &file, "reps", 2000)?;
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let report = stats::clt_check(dim, side, reps, seed)?;
            let config = json!({"dim": dim, "side": side, "reps": reps, "seed": seed});
            let s = json_output("clt", config, &report)?;
            write_output(out, &s)
        }
        Command::Cages(args) => {
            let side = resolve(args.side, &file, "side", 64)?;
            let reps = resolve(args.reps, &file, "reps", 10_000)?;
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let harvest = stats::cage_harvest(side, reps, seed)?;
            let config = json!({"side": side, "reps": reps, "seed": seed});
            let results = json!({
                "harvest": &harvest,
                "density_positive": harvest.density.excludes_zero(2.576),
            });
            let s = json_output("cages", config, results)?;
            write_output(out, &s)
        }
        Command::Bound(args) => {
            let n = resolve(args.n, &file, "n", 64)?;
            let dim = resolve(args.dim, &file, "dim", 2)?;
            let default_r = (n as f64).ln().ceil().max(1.0) as usize;
            let r = resolve(args.r, &file, "r", default_r)?;
            let eps = resolve(args.eps, &file, "eps", 0.1)?;
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let check_reps = resolve(args.check_reps, &file, "check_reps", 0)?;
            if n == 0 || r == 0 || dim == 0 {
                return Err(RunError::validation("n, dim, and r must be positive"));
            }
            if eps <= 0.0 || eps.is_nan() {
                return Err(RunError::validation("eps must be positive"));
            }
            let bound = stats::concentration_bound(n, dim, r, eps);
            let config =
                json!({"n": n, "dim": dim, "r": r, "eps": eps, "seed": seed, "check_reps": check_reps});
            let results = if check_reps >= 2 {
                let spec = if dim == 1 {
                    GraphSpec::Path { n }
                } else {
                    GraphSpec::Lattice { dim, side: n, boundary: crate::graphs::Boundary::Periodic }
                };
                let check =
                    stats::empirical_exceedance(&spec, dim, n, r, eps, check_reps, seed)?;
                json!({"bound": bound, "check": check})
            } else {
                json!({"bound": bound})
            };
            let s = json_output("bound", config, results)?;
            write_output(out, &s)
        }
        Command::Diagnose(args) => {
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let d = report::diagnose(seed)?;
            let s = json_output("diagnose", json!({"seed": seed}), &d)?;
            write_output(out, &s)
        }
        Command::Report(args) => {
            let large_n = resolve(args.large_n, &file, "large_n", 10_000)?;
            let mc_n = resolve(args.mc_n, &file, "mc_n", 1000)?;
            let mc_reps = resolve(args.mc_reps, &file, "mc_reps", 10_000)?;
            let seed = resolve(args.seed, &file, "seed", DEFAULT_SEED)?;
            let r = report::variance_discrepancy(large_n, mc_n, mc_reps, seed)?;
            write_output(out, &r.to_markdown())
        }
    }
}
