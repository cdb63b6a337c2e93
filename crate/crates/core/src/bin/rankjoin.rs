use std::collections::HashMap;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rankjoin::analysis::{gen_antichain_product, gen_diameter4_instance, gen_path3_product};
use rankjoin::error::{Error, QueryError, Result};
use rankjoin::job::{plan_disjuncts, read_query_file, Job, JobSpec};
use rankjoin::oracle::DEFAULT_ORACLE_CAP;
use rankjoin::query::parse_query;
use rankjoin::{Database, RankingFunction};

/// Ranked enumeration of join queries.
#[derive(Parser)]
#[command(name = "rankjoin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the decomposition, ranking compatibility and feasibility report.
    Plan(JobArgs),
    /// Print the k best results. Exits 5 when more results remain.
    Topk {
        #[command(flatten)]
        job: JobArgs,
        #[arg(short, long)]
        k: Option<usize>,
    },
    /// Print every result in rank order.
    Enumerate(JobArgs),
    /// Pull k results and report operation counts as key=value lines.
    Bench {
        #[command(flatten)]
        job: JobArgs,
        #[arg(short, long)]
        k: Option<usize>,
    },
    /// Write a generated instance (CSV files, query.txt, job.conf) to a directory.
    Gen {
        kind: GenKind,
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print every result by brute force (for cross-checking).
    Oracle {
        #[command(flatten)]
        job: JobArgs,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Antichain,
    Diameter4,
    Path3,
}

#[derive(Args, Clone, Default)]
struct JobArgs {
    /// key=value job file (query, data, rank, decomp, k, weight_col, vertex_weights).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    query: Option<PathBuf>,
    /// Directory of <Relation>.csv files.
    #[arg(long)]
    data: Option<PathBuf>,
    /// tuple_sum | tuple_max | tuple_product | vertex_sum | vertex_max |
    /// vertex_product | lex(v,...) | bounded(<ranking>; v,...)
    #[arg(long)]
    rank: Option<String>,
    /// Decomposition file, once per disjunct.
    #[arg(long)]
    decomp: Vec<PathBuf>,
    /// Column holding tuple weights (repeatable).
    #[arg(long = "weight-col")]
    weight_col: Vec<String>,
    /// constant,weight file; defaults to vertex_weights.txt in the data directory.
    #[arg(long)]
    vertex_weights: Option<PathBuf>,
}

struct Resolved {
    query: PathBuf,
    data: Option<PathBuf>,
    rank: String,
    decomps: Vec<PathBuf>,
    weight_cols: Vec<String>,
    vertex_weights: Option<PathBuf>,
    k: Option<usize>,
}

fn read_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect()
}

impl JobArgs {
    /// Merges the config file under the flags. Config paths are relative to
    /// the config file.
    fn resolve(&self, k_flag: Option<usize>) -> Result<Resolved> {
        let (conf, base) = match &self.config {
            Some(p) => (read_config(p)?, p.parent().map(Path::to_owned).unwrap_or_default()),
            None => (HashMap::new(), PathBuf::new()),
        };
        let path = |key: &str| conf.get(key).map(|v| base.join(v));
        let query = self
            .query
            .clone()
            .or_else(|| path("query"))
            .ok_or_else(|| Error::Usage("no query given (use --query or query= in --config)".into()))?;
        let decomps = if self.decomp.is_empty() {
            conf.get("decomp").map(|v| list(v).into_iter().map(|p| base.join(p)).collect()).unwrap_or_default()
        } else {
            self.decomp.clone()
        };
        let weight_cols =
            if self.weight_col.is_empty() { conf.get("weight_col").map(|v| list(v)).unwrap_or_default() } else { self.weight_col.clone() };
        let k = match (k_flag, conf.get("k")) {
            (Some(k), _) => Some(k),
            (None, Some(v)) => Some(v.parse().map_err(|_| Error::Usage(format!("k={v} is not a count")))?),
            (None, None) => None,
        };
        Ok(Resolved {
            query,
            data: self.data.clone().or_else(|| path("data")),
            rank: self.rank.clone().or_else(|| conf.get("rank").cloned()).unwrap_or_else(|| "tuple_sum".into()),
            decomps,
            weight_cols,
            vertex_weights: self.vertex_weights.clone().or_else(|| path("vertex_weights")),
            k,
        })
    }
}

impl Resolved {
    fn job(&self) -> Result<Job> {
        let data = self
            .data
            .clone()
            .ok_or_else(|| Error::Usage("no data directory given (use --data or data= in --config)".into()))?;
        let text = read_query_file(&self.query)?;
        let spec = JobSpec {
            query_text: text.clone(),
            data_dir: data,
            rank: self.rank.clone(),
            decomps: self.decomps.clone(),
            weight_cols: self.weight_cols.clone(),
            vertex_weights: self.vertex_weights.clone(),
        };
        Job::load(&spec).map_err(|e| with_file(e, &self.query, &text))
    }

    fn k(&self) -> Result<usize> {
        self.k.ok_or_else(|| Error::Usage("no k given (use --k or k= in --config)".into()))
    }
}

/// Prefixes query errors with `path` or `path:line:col`.
fn with_file(e: Error, query: &Path, text: &str) -> Error {
    match &e {
        Error::Query(QueryError::Syntax { offset, .. }) => {
            let before = &text[..(*offset).min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            e.context(format!("{}:{line}:{col}", query.display()))
        }
        Error::Query(_) => e.context(query.display().to_string()),
        _ => e,
    }
}

fn cmd_plan(args: &JobArgs) -> Result<u8> {
    let r = args.resolve(None)?;
    let report = if r.data.is_some() {
        r.job()?.plan_report()
    } else {
        let text = read_query_file(&r.query)?;
        let uq = parse_query(&text).map_err(|e| with_file(e.into(), &r.query, &text))?;
        let plans = plan_disjuncts(&uq, &RankingFunction::parse(&r.rank, uq.head())?, &r.decomps)?;
        let job = Job { rank: RankingFunction::parse(&r.rank, uq.head())?, query: uq, db: Database::default(), plans };
        job.plan_report()
    };
    print!("{report}");
    Ok(0)
}

fn emit(records: impl Iterator<Item = String>) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for r in records {
        if let Err(e) = writeln!(out, "{r}") {
            if e.kind() == io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(Error::Io { path: "<stdout>".into(), source: e });
        }
    }
    match out.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn cmd_topk(args: &JobArgs, k: Option<usize>) -> Result<u8> {
    let r = args.resolve(k)?;
    let k = r.k()?;
    let job = r.job()?;
    let mut cursor = job.cursor()?;
    let results = cursor.by_ref().take(k).map(|t| job.record(&t)).collect::<Vec<_>>();
    let truncated = results.len() == k && cursor.next().is_some();
    emit(results.into_iter())?;
    Ok(if truncated { 5 } else { 0 })
}

fn cmd_enumerate(args: &JobArgs) -> Result<u8> {
    let job = args.resolve(None)?.job()?;
    let cursor = job.cursor()?;
    emit(cursor.map(|t| job.record(&t)))?;
    Ok(0)
}

fn cmd_oracle(args: &JobArgs, cap: usize) -> Result<u8> {
    let job = args.resolve(None)?.job()?;
    let out = job.oracle(cap)?;
    emit(out.iter().map(|t| job.record(t)))?;
    Ok(0)
}

fn median(v: &mut [u64]) -> u64 {
    if v.is_empty() {
        return 0;
    }
    v.sort_unstable();
    v[v.len() / 2]
}

fn cmd_bench(args: &JobArgs, k: Option<usize>) -> Result<u8> {
    let r = args.resolve(k)?;
    let k = r.k()?;
    let job = r.job()?;
    let started = Instant::now();
    let mut cursor = job.cursor()?;
    let prep = started.elapsed();
    let initial_cells = cursor.total_cells();
    let bag_tuples: usize = cursor.prepare_stats().iter().map(|s| s.reduced.iter().sum::<usize>()).sum();
    let materialized: usize = cursor.prepare_stats().iter().map(|s| s.materialized.iter().sum::<usize>()).sum();
    let (mut pops, mut inserts, mut cmps, mut cells) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let pulled_at = Instant::now();
    let mut pulled = 0usize;
    while pulled < k {
        if cursor.next().is_none() {
            break;
        }
        pulled += 1;
        if let Some(s) = cursor.last_pull() {
            pops.push(s.pops);
            inserts.push(s.inserts);
            cmps.push(s.comparisons);
            cells.push(s.cells_created);
        }
    }
    let enum_time = pulled_at.elapsed();
    let max = |v: &[u64]| v.iter().copied().max().unwrap_or(0);
    let mut lines = vec![
        format!("preprocess_ms={:.3}", prep.as_secs_f64() * 1e3),
        format!("enumerate_ms={:.3}", enum_time.as_secs_f64() * 1e3),
        format!("pulls={pulled}"),
        format!("bag_tuples_materialized={materialized}"),
        format!("bag_tuples_reduced={bag_tuples}"),
        format!("initial_cells={initial_cells}"),
        format!("peak_cells={}", cursor.total_cells()),
    ];
    if cursor.last_pull().is_some() {
        lines.extend([
            format!("max_pops={}", max(&pops)),
            format!("median_pops={}", median(&mut pops)),
            format!("max_inserts={}", max(&inserts)),
            format!("median_inserts={}", median(&mut inserts)),
            format!("max_comparisons={}", max(&cmps)),
            format!("median_comparisons={}", median(&mut cmps)),
            format!("max_cells_created={}", max(&cells)),
            format!("median_cells_created={}", median(&mut cells)),
        ]);
    }
    let t = cursor.totals();
    lines.extend([
        format!("total_pops={}", t.pops),
        format!("total_inserts={}", t.inserts),
        format!("total_comparisons={}", t.comparisons),
        format!("total_cells_created={}", t.cells_created),
    ]);
    emit(lines.into_iter())?;
    Ok(0)
}

fn cmd_gen(kind: GenKind, n: usize, out: &Path, seed: u64) -> Result<u8> {
    if n == 0 {
        return Err(Error::Usage("n must be at least 1".into()));
    }
    let inst = match kind {
        GenKind::Antichain => gen_antichain_product(n),
        GenKind::Diameter4 => gen_diameter4_instance(n),
        GenKind::Path3 => gen_path3_product(n, seed),
    };
    inst.write_dir(out)?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Topk { job, k } => cmd_topk(job, *k),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Bench { job, k } => cmd_bench(job, *k),
        Command::Gen { kind, n, out, seed } => cmd_gen(*kind, *n, out, *seed),
        Command::Oracle { job, cap } => cmd_oracle(job, *cap),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
