//! Command-line front end: `build`, `query`, `bench`, `dbscan`, `model`.
//!
//! Exit codes are 0 on success, 1 on usage errors and 2 on data errors.
//! Every timing value is printed as a `<name>_ms=<value>` token so output
//! can be compared across runs after masking those tokens.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{zscore_standardize, PointMatrix};
use crate::dbscan::{dbscan, nmi, Backend, DbscanParams};
use crate::error::SnnError;
use crate::indexer::SnnIndex;
use crate::metrics::{self, parse_radius, MetricKind};
use crate::oracle::MatvecBruteForce;
use crate::persist::{self, MatrixFormat};
use crate::query::QueryResult;
use crate::synthetic::Synthetic;
use crate::theory::{self, BlobModel};

#[derive(Debug, Parser)]
#[command(name = "snn", version, about = "Exact fixed-radius nearest neighbor search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an index from a dataset file and save it.
    Build(BuildArgs),
    /// Answer radius queries against a saved index.
    Query(QueryArgs),
    /// Measure return and candidate ratios on synthetic data.
    Bench(BenchArgs),
    /// Cluster a dataset with DBSCAN.
    Dbscan(DbscanArgs),
    /// Evaluate the Gaussian-blob efficiency model.
    Model(ModelArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Matrix file format.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: MatrixFormat,
    /// Skip a single header line (CSV only).
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    input_opts: InputArgs,
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    metric: MetricKind,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[command(flatten)]
    input_opts: InputArgs,
    /// Radius in the metric's native unit; angles accept `0.30pi`. Not
    /// used with `--metric mips`, which reports the maximum inner product.
    #[arg(long, value_parser = parse_radius_arg)]
    radius: Option<f64>,
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    metric: MetricKind,
    /// Write hit lists here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_parser = ["uniform", "blob"])]
    synthetic: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Elongation of the blob generator.
    #[arg(long, default_value_t = 0.1)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', value_parser = parse_radius_arg, required = true)]
    radii: Vec<f64>,
    /// Query every indexed point instead of fresh out-of-sample points.
    #[arg(long)]
    self_query: bool,
    /// Number of out-of-sample queries (ignored with --self-query).
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    /// Emit one JSON object per radius.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DbscanArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    input_opts: InputArgs,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 5)]
    min_samples: usize,
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    metric: MetricKind,
    /// Z-score standardize every column first.
    #[arg(long)]
    standardize: bool,
    #[arg(long, default_value = "snn", value_parser = parse_backend)]
    backend: Backend,
    /// Ground-truth labels, one integer per line; prints NMI.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Write labels here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long = "c", allow_hyphen_values = true)]
    c: f64,
    #[arg(long = "R")]
    radius: f64,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    json: bool,
}

fn parse_format(s: &str) -> Result<MatrixFormat, String> {
    s.parse().map_err(|e: SnnError| e.to_string())
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: SnnError| e.to_string())
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: SnnError| e.to_string())
}

fn parse_radius_arg(s: &str) -> Result<f64, String> {
    parse_radius(s).map_err(|e| e.to_string())
}

enum CliError {
    Usage(String),
    Data(SnnError),
}

impl From<SnnError> for CliError {
    fn from(e: SnnError) -> Self {
        Self::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.into())
    }
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Build(a) => build(a, out),
        Command::Query(a) => query(a, out),
        Command::Bench(a) => bench(a, out),
        Command::Dbscan(a) => run_dbscan(a, out, err),
        Command::Model(a) => model(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn build(a: BuildArgs, out: &mut dyn Write) -> CliResult {
    let points = persist::load_matrix(&a.input, a.input_opts.format, a.input_opts.header)?;
    let points = match a.metric {
        MetricKind::Cosine | MetricKind::Angular => {
            metrics::check_unit_rows(&points)?;
            points
        }
        MetricKind::Mips => metrics::mips_transform(&points)?.0,
        MetricKind::Euclidean | MetricKind::Manhattan => points,
    };
    let start = Instant::now();
    let index = SnnIndex::build(&points)?;
    let build_ms = ms(start);
    persist::save_index(&index, &a.output)?;
    let [s1, s2] = index.sigma();
    writeln!(
        out,
        "n={} d={} sigma1={} sigma2={} build_ms={:.3}",
        index.len(),
        index.dim(),
        s1,
        s2,
        build_ms
    )?;
    Ok(())
}

/// Converts a Euclidean hit distance to the metric's native unit.
fn native_distance(kind: MetricKind, euclid: f64) -> f64 {
    match kind {
        MetricKind::Cosine => euclid * euclid / 2.0,
        MetricKind::Angular => 2.0 * (euclid / 2.0).min(1.0).asin(),
        _ => euclid,
    }
}

fn query(a: QueryArgs, out: &mut dyn Write) -> CliResult {
    let index = persist::load_index(&a.index)?;
    let queries = persist::load_matrix(&a.queries, a.input_opts.format, a.input_opts.header)?;
    let kind = a.metric;
    let radius = match (kind, a.radius) {
        (MetricKind::Mips, Some(_)) => return Err(usage("--radius does not apply to --metric mips")),
        (MetricKind::Mips, None) => 0.0,
        (_, None) => return Err(usage("--radius is required")),
        (MetricKind::Cosine, Some(r)) => metrics::cosine_radius_to_euclidean(r).map_err(|e| usage(e.to_string()))?,
        (MetricKind::Angular, Some(r)) => metrics::angular_radius_to_euclidean(r).map_err(|e| usage(e.to_string()))?,
        (_, Some(r)) if r < 0.0 => return Err(usage(format!("negative radius: {r}"))),
        (_, Some(r)) => r,
    };
    let expected = if kind == MetricKind::Mips {
        index.dim() - 1
    } else {
        index.dim()
    };
    if queries.d() != expected {
        return Err(SnnError::DimensionMismatch {
            expected,
            found: queries.d(),
        }
        .into());
    }

    let mut file_out;
    let mut sink: &mut dyn Write = match &a.output {
        Some(p) => {
            file_out = BufWriter::new(File::create(p)?);
            &mut file_out
        }
        None => out,
    };

    if kind == MetricKind::Mips {
        let mut total_ms = 0.0;
        for (qid, q) in queries.rows().enumerate() {
            let start = Instant::now();
            let (id, ip) = metrics::max_inner_product(&index, q)?;
            total_ms += ms(start);
            writeln!(sink, "{qid}: {id}:{ip}")?;
        }
        sink.flush()?;
        if a.output.is_some() {
            sink = out;
        }
        writeln!(
            sink,
            "# queries={} mean_query_ms={:.6}",
            queries.n(),
            total_ms / queries.n().max(1) as f64
        )?;
        return Ok(());
    }

    let mut total_hits = 0usize;
    let mut total_candidates = 0usize;
    let mut total_ms = 0.0;
    for (qid, q) in queries.rows().enumerate() {
        let start = Instant::now();
        let outcome = match kind {
            MetricKind::Cosine | MetricKind::Angular => {
                let norm = crate::kernels::dot(q, q).sqrt();
                if (norm - 1.0).abs() > metrics::UNIT_NORM_TOLERANCE {
                    return Err(SnnError::InvalidParameter(format!("query {qid} is not unit-normalized")).into());
                }
                index.query_radius_with_range(q, radius)?
            }
            MetricKind::Manhattan => metrics::manhattan_query_with_range(&index, q, radius)?,
            _ => index.query_radius_with_range(q, radius)?,
        };
        total_ms += ms(start);
        total_hits += outcome.result.len();
        total_candidates += outcome.range.len();
        write_hits(sink, qid, &outcome.result, kind)?;
    }
    sink.flush()?;
    if a.output.is_some() {
        sink = out;
    }
    let nq = queries.n().max(1) as f64;
    writeln!(
        sink,
        "# queries={} mean_hits={} mean_candidate_fraction={} mean_query_ms={:.6}",
        queries.n(),
        total_hits as f64 / nq,
        total_candidates as f64 / (nq * index.len() as f64),
        total_ms / nq
    )?;
    Ok(())
}

fn write_hits(w: &mut dyn Write, qid: usize, result: &QueryResult, kind: MetricKind) -> std::io::Result<()> {
    write!(w, "{qid}:")?;
    for h in &result.hits {
        write!(w, " {}:{}", h.id, native_distance(kind, h.dist))?;
    }
    writeln!(w)
}

#[derive(Debug, Serialize)]
struct BenchRow {
    radius: f64,
    return_ratio: f64,
    candidate_ratio: f64,
    hits: usize,
    queries: usize,
    index_ms: f64,
    query_ms: f64,
    brute_query_ms: f64,
}

/// Queries timed against the brute-force baseline per radius.
const BRUTE_SAMPLE: usize = 200;

/// Return ratio of a query batch: hits per query relative to `n`. In
/// self-query mode each query's own match is discounted and the ratio is
/// taken over the other `n − 1` points.
pub fn return_ratio(total_hits: usize, queries: usize, n: usize, self_query: bool) -> f64 {
    if queries == 0 || n == 0 {
        return 0.0;
    }
    if self_query {
        if n == 1 {
            return 0.0;
        }
        (total_hits - queries) as f64 / (queries as f64 * (n - 1) as f64)
    } else {
        total_hits as f64 / (queries as f64 * n as f64)
    }
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> CliResult {
    if a.n == 0 || a.d == 0 {
        return Err(usage("--n and --d must be positive"));
    }
    if let Some(r) = a.radii.iter().find(|r| **r < 0.0) {
        return Err(usage(format!("negative radius {r}")));
    }
    let gen = match a.synthetic.as_str() {
        "uniform" => Synthetic::Uniform,
        _ if a.s > 0.0 => Synthetic::Blob { s: a.s },
        _ => return Err(usage("--s must be positive")),
    };
    let points = gen.generate(a.n, a.d, a.seed)?;
    let queries = if a.self_query {
        points.clone()
    } else {
        gen.generate(a.queries, a.d, a.seed ^ 0x9E37_79B9_7F4A_7C15)?
    };

    let start = Instant::now();
    let index = SnnIndex::build(&points)?;
    let index_ms = ms(start);
    let brute = MatvecBruteForce::new(&points)?;

    if !a.json {
        writeln!(
            out,
            "# synthetic={} n={} d={} s={} seed={} queries={} self_query={}",
            a.synthetic,
            a.n,
            a.d,
            a.s,
            a.seed,
            queries.n(),
            a.self_query
        )?;
    }
    for &radius in &a.radii {
        let mut hits = 0usize;
        let mut candidates = 0usize;
        let start = Instant::now();
        for q in queries.rows() {
            let o = index.query_radius_with_range(q, radius)?;
            hits += o.result.len();
            candidates += o.range.len();
        }
        let query_ms = ms(start) / queries.n().max(1) as f64;

        let sample = queries.n().min(BRUTE_SAMPLE);
        let start = Instant::now();
        for q in queries.rows().take(sample) {
            std::hint::black_box(brute.query(q, radius)?);
        }
        let brute_query_ms = ms(start) / sample.max(1) as f64;

        let row = BenchRow {
            radius,
            return_ratio: return_ratio(hits, queries.n(), a.n, a.self_query),
            candidate_ratio: candidates as f64 / (queries.n().max(1) as f64 * a.n as f64),
            hits,
            queries: queries.n(),
            index_ms,
            query_ms,
            brute_query_ms,
        };
        if a.json {
            let line = serde_json::to_string(&row).map_err(std::io::Error::other)?;
            writeln!(out, "{line}")?;
        } else {
            writeln!(
                out,
                "radius={} return_ratio={:.4}% candidate_ratio={:.4}% hits={} index_ms={:.3} query_ms={:.6} brute_query_ms={:.6}",
                row.radius,
                row.return_ratio * 100.0,
                row.candidate_ratio * 100.0,
                row.hits,
                row.index_ms,
                row.query_ms,
                row.brute_query_ms
            )?;
        }
    }
    Ok(())
}

fn read_labels(path: &PathBuf) -> Result<Vec<i64>, CliError> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0)
            .ok_or_else(|| SnnError::Parse {
                row: i + 1,
                col: 1,
                field: t.to_string(),
            })?;
        labels.push(v as i64);
    }
    Ok(labels)
}

fn run_dbscan(a: DbscanArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    if a.metric != MetricKind::Euclidean {
        return Err(usage(format!(
            "dbscan supports only the euclidean metric, got {}",
            a.metric
        )));
    }
    let params = DbscanParams::new(a.eps, a.min_samples, a.backend).map_err(|e| usage(e.to_string()))?;
    let mut points: PointMatrix = persist::load_matrix(&a.input, a.input_opts.format, a.input_opts.header)?;
    if a.standardize {
        points = zscore_standardize(&points)?;
    }
    let truth = a.labels.as_ref().map(read_labels).transpose()?;

    let start = Instant::now();
    let labeling = dbscan(&points, &params)?;
    let cluster_ms = ms(start);

    let mut file_out;
    let sink: &mut dyn Write = match &a.output {
        Some(p) => {
            file_out = BufWriter::new(File::create(p)?);
            &mut file_out
        }
        None => out,
    };
    for l in &labeling.labels {
        writeln!(sink, "{l}")?;
    }
    sink.flush()?;

    write!(
        err,
        "# clusters={} noise={} backend={} cluster_ms={:.3}",
        labeling.clusters,
        labeling.noise_count(),
        params.backend,
        cluster_ms
    )?;
    if let Some(truth) = truth {
        let score = nmi(&labeling.labels, &truth)?;
        write!(err, " nmi={score:.6}")?;
    }
    writeln!(err)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ModelRow {
    c: f64,
    #[serde(rename = "R")]
    radius: f64,
    s: f64,
    d: usize,
    p1: f64,
    p2: f64,
    ratio: f64,
}

fn model(a: ModelArgs, out: &mut dyn Write) -> CliResult {
    let m = BlobModel::new(a.s, a.d, a.c, a.radius).map_err(|e| usage(e.to_string()))?;
    let row = ModelRow {
        c: a.c,
        radius: a.radius,
        s: a.s,
        d: a.d,
        p1: theory::p1(m.c, m.radius),
        p2: theory::p2(&m),
        ratio: theory::efficiency_ratio(&m)?,
    };
    if a.json {
        let line = serde_json::to_string(&row).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
        return Ok(());
    }
    writeln!(out, "P1 = {:.10}", row.p1)?;
    writeln!(out, "P2 = {:.10}", row.p2)?;
    writeln!(out, "P  = {:.10}", row.ratio)?;
    writeln!(out, "c,R,s,d,p1,p2,ratio")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        row.c, row.radius, row.s, row.d, row.p1, row.p2, row.ratio
    )?;
    Ok(())
}
