use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use gsql_core::materialize::provenance_csv;
use gsql_core::model::{serialize_collection, GraphIdx};
use gsql_core::pipeline::{load_store, run_graph, GraphRun, InputFormat, PhaseTimes};
use gsql_core::{parse_rules, ColumnarStore, Error, MatchMode, RuleSet};

#[derive(Parser)]
#[command(name = "gsql", version, about = "Graph-grammar rewriting over collections of graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Match and rewrite every graph of a collection.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Gsm,
    Conllu,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Homomorphic,
    Isomorphic,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Input graph collection.
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long, value_enum, default_value = "gsm")]
    format: Format,
    /// Rule file.
    #[arg(long)]
    rules: PathBuf,
    /// Output collection; provenance is written next to it as `<out>.prov.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Phase timings as CSV (printed to stdout with --bench if omitted).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Per-morphism rewrite log.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Repeat querying, rewriting and materialisation N times and report means.
    #[arg(long, value_name = "N")]
    bench: Option<u32>,
    #[arg(long, value_enum, default_value = "homomorphic")]
    mode: Mode,
    /// Process graphs concurrently.
    #[arg(long)]
    parallel: bool,
}

enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::Model(_) | Error::Conllu(_)) => 3,
            Failure::Core(Error::Rule(_)) => 4,
            Failure::Core(Error::Store(_)) => 5,
            Failure::Core(Error::Rewrite(_)) => 6,
            Failure::Core(Error::Materialize(_)) => 7,
            Failure::Io(..) => 8,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(Error::Model(e)) => write!(f, "cannot load graphs: {e}"),
            Failure::Core(Error::Conllu(e)) => write!(f, "cannot load CoNLL-U: {e}"),
            Failure::Core(Error::Rule(e)) => write!(f, "cannot load rules: {e}"),
            Failure::Core(Error::Store(e)) => write!(f, "cannot index graphs: {e}"),
            Failure::Core(Error::Rewrite(e)) => write!(f, "rewriting failed: {e}"),
            Failure::Core(Error::Materialize(e)) => write!(f, "materialisation failed: {e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Core(e.into())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn run_once(store: &ColumnarStore, rules: &RuleSet, mode: MatchMode, parallel: bool) -> Result<Vec<GraphRun>, Failure> {
    let n = store.graph_count() as GraphIdx;
    let runs: Result<Vec<GraphRun>, Error> = if parallel {
        (0..n).into_par_iter().map(|g| run_graph(store, g, rules, mode)).collect()
    } else {
        (0..n).map(|g| run_graph(store, g, rules, mode)).collect()
    };
    Ok(runs?)
}

fn stats_csv(load: Duration, per_graph: &[PhaseTimes]) -> String {
    let mut s = String::from("graph_id,load_index_ms,query_ms,materialise_ms,total_ms\n");
    // Loading and indexing happen once for the whole collection; each graph
    // is charged an equal share.
    let load_share = if per_graph.is_empty() { 0.0 } else { ms(load) / per_graph.len() as f64 };
    let (mut q_all, mut m_all) = (0.0, 0.0);
    for (g, t) in per_graph.iter().enumerate() {
        let (q, m) = (ms(t.query), ms(t.materialise));
        q_all += q;
        m_all += m;
        let _ = writeln!(s, "{g},{load_share:.4},{q:.4},{m:.4},{:.4}", load_share + q + m);
    }
    let _ = writeln!(s, "all,{:.4},{q_all:.4},{m_all:.4},{:.4}", ms(load), ms(load) + q_all + m_all);
    s
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let format = match args.format {
        Format::Gsm => InputFormat::Gsm,
        Format::Conllu => InputFormat::Conllu,
    };
    let mode = match args.mode {
        Mode::Homomorphic => MatchMode::Homomorphic,
        Mode::Isomorphic => MatchMode::Isomorphic,
    };
    let rules = parse_rules(&read(&args.rules)?)?;
    let text = read(&args.graphs)?;
    let (store, load) = load_store(&text, format)?;

    let reps = args.bench.unwrap_or(1).max(1);
    let mut totals = vec![PhaseTimes::default(); store.graph_count()];
    let mut runs = Vec::new();
    for _ in 0..reps {
        runs = run_once(&store, &rules, mode, args.parallel)?;
        for (acc, r) in totals.iter_mut().zip(&runs) {
            acc.query += r.times.query;
            acc.materialise += r.times.materialise;
        }
    }
    let means: Vec<PhaseTimes> =
        totals.iter().map(|t| PhaseTimes { query: t.query / reps, materialise: t.materialise / reps }).collect();

    if let Some(out) = &args.out {
        let graphs: Vec<_> = runs.iter().map(|r| r.output.graph.clone()).collect();
        write(out, &serialize_collection(&graphs))?;
        let outputs: Vec<_> = runs.iter().map(|r| r.output.clone()).collect();
        let mut prov = out.as_os_str().to_owned();
        prov.push(".prov.csv");
        write(Path::new(&prov), &provenance_csv(&outputs))?;
    }
    if let Some(path) = &args.trace {
        let mut s = String::new();
        for (g, r) in runs.iter().enumerate() {
            let _ = writeln!(s, "# graph {g}");
            s.push_str(&r.trace.to_string());
        }
        write(path, &s)?;
    }
    let stats = stats_csv(load, &means);
    match &args.stats {
        Some(path) => write(path, &stats)?,
        None if args.bench.is_some() => print!("{stats}"),
        None => {}
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gsql: {f}");
            ExitCode::from(f.code())
        }
    }
}
