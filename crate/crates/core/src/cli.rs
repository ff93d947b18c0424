//! The `rds` command line.
//!
//! Every subcommand reads an optional JSON config, writes its outputs and a
//! `manifest.json` into `--out`, and exits with 0 on success, 2 on usage or
//! configuration errors (before anything is written) and 1 on runtime
//! failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmark::{self, BenchRecord, Family, GridConfig, ProblemSpec};
use crate::error::Error;
use crate::euclidean_pss::PssSpec;
use crate::geometry::Manifold;
use crate::rng;
use crate::solver::{self, Problem, SolverConfig};
use crate::sphere_analysis;

#[derive(Debug, Parser)]
#[command(name = "rds", version, about = "Riemannian direct search toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed; falls back to RDS_SEED, then to the config, then to 0.
    #[arg(long, env = "RDS_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel stages (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cosine and complexity measure of a positive spanning set.
    Cm(CommonArgs),
    /// Projected ±basis cosine measure on spheres: heatmap, range scan,
    /// complexity table.
    SphereStudy(SphereArgs),
    /// Run direct search on one problem.
    Solve(CommonArgs),
    /// Run a benchmark grid.
    Bench(CommonArgs),
    /// Data profiles and head-to-head tables from benchmark records.
    Profiles(CommonArgs),
}

#[derive(Debug, Args)]
pub struct SphereArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Heatmap resolution on S² (at least 8).
    #[arg(long)]
    pub heatmap: Option<usize>,
    /// Comma-separated ambient dimensions for the range scan.
    #[arg(long, value_delimiter = ',')]
    pub scan: Option<Vec<usize>>,
    /// Random points per dimension in the range scan.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated dimensions for the complexity table.
    #[arg(long, value_delimiter = ',')]
    pub table: Option<Vec<usize>>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config_digest: String,
    pub seed: u64,
    pub output_files: Vec<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// Hex SHA-256 of the config's canonical JSON (object keys sorted).
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_string(&value).expect("value serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn read_config<T: DeserializeOwned>(path: Option<&Path>) -> CliResult<Option<T>> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn require_config<T: DeserializeOwned>(path: Option<&Path>) -> CliResult<T> {
    read_config(path)?.ok_or_else(|| CliError::Config("--config is required".into()))
}

/// Collects outputs in memory so nothing is written until the run succeeds.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    fn write(
        self,
        out: &Path,
        subcommand: &str,
        digest: String,
        seed: u64,
        started: u128,
    ) -> CliResult<()> {
        let io = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", out.display()));
        fs::create_dir_all(out).map_err(io)?;
        let mut names = Vec::new();
        for (name, contents) in &self.files {
            let path = out.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(io)?;
            }
            fs::write(&path, contents).map_err(io)?;
            names.push(name.clone());
        }
        names.sort();
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config_digest: digest,
            seed,
            output_files: names,
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(out.join("manifest.json"), text + "\n").map_err(io)?;
        Ok(())
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

/// JSON number rounded to 10 decimals, written as an integer when integral.
fn rounded(v: f64) -> serde_json::Value {
    let r = (v * 1e10).round() / 1e10;
    if r.fract() == 0.0 && r.abs() < 1e15 {
        serde_json::Value::from(r as i64)
    } else {
        serde_json::Value::from(r)
    }
}

fn ndjson<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("record serializes") + "\n")
        .collect()
}

fn run_cm(args: &CommonArgs) -> CliResult<()> {
    let spec: PssSpec = require_config(args.config.as_deref())?;
    let pss = spec.build().map_err(|e| CliError::Config(e.to_string()))?;
    let started = now_ms();
    let report = pss.cosine_measure()?;
    let mut obj = serde_json::Map::new();
    obj.insert("cm".into(), rounded(report.cosine_measure));
    obj.insert(
        "chi".into(),
        report.complexity_measure.map_or(serde_json::Value::Null, rounded),
    );
    obj.insert("cardinality".into(), report.cardinality.into());
    obj.insert("dim".into(), pss.dim().into());
    obj.insert("generator".into(), pss.generator().name().into());
    obj.insert(
        "witness".into(),
        report.witness.iter().map(|v| rounded(*v)).collect::<Vec<_>>().into(),
    );
    let text = serde_json::to_string(&serde_json::Value::Object(obj)).expect("json");
    println!("{text}");
    let mut outputs = Outputs::new();
    outputs.add("cm.json", text + "\n");
    let seed = args.seed.unwrap_or(0);
    outputs.write(&args.out, "cm", config_digest(&spec), seed, started)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SphereConfig {
    heatmap: Option<usize>,
    scan: Option<Vec<usize>>,
    samples: usize,
    table: Option<Vec<usize>>,
    seed: u64,
}

impl Default for SphereConfig {
    fn default() -> Self {
        SphereConfig {
            heatmap: None,
            scan: None,
            samples: 100,
            table: None,
            seed: 0,
        }
    }
}

fn run_sphere(args: &SphereArgs) -> CliResult<()> {
    let mut cfg: SphereConfig = read_config(args.common.config.as_deref())?.unwrap_or_default();
    if args.heatmap.is_some() {
        cfg.heatmap = args.heatmap;
    }
    if args.scan.is_some() {
        cfg.scan = args.scan.clone();
    }
    if args.table.is_some() {
        cfg.table = args.table.clone();
    }
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let bad = |m: String| Err(CliError::Config(m));
    if cfg.heatmap.is_none() && cfg.scan.is_none() && cfg.table.is_none() {
        return bad("nothing to do: pass --heatmap, --scan or --table".into());
    }
    if cfg.heatmap.is_some_and(|r| r < 8) {
        return bad("heatmap resolution must be at least 8".into());
    }
    if cfg.scan.as_ref().is_some_and(|ns| ns.iter().any(|n| *n < 3)) {
        return bad("scan dimensions must be at least 3".into());
    }
    if cfg.table.as_ref().is_some_and(|ns| ns.iter().any(|n| *n < 2)) {
        return bad("table dimensions must be at least 2".into());
    }
    if cfg.samples == 0 {
        return bad("samples must be positive".into());
    }
    let started = now_ms();
    let outputs = with_threads(args.common.threads, || -> CliResult<Outputs> {
        let mut outputs = Outputs::new();
        if let Some(r) = cfg.heatmap {
            let rows = sphere_analysis::sphere_heatmap(r)?;
            outputs.add("heatmap.csv", sphere_analysis::heatmap_csv(&rows));
        }
        if let Some(ns) = &cfg.scan {
            let rows = sphere_analysis::cm_range_scan(ns, cfg.samples, cfg.seed)?;
            let csv = sphere_analysis::scan_csv(&rows);
            print!("{csv}");
            outputs.add("scan.csv", csv);
        }
        if let Some(ns) = &cfg.table {
            let rows = sphere_analysis::complexity_table(ns)?;
            outputs.add("complexity.csv", sphere_analysis::complexity_csv(&rows));
        }
        Ok(outputs)
    })??;
    outputs.write(&args.common.out, "sphere-study", config_digest(&cfg), cfg.seed, started)
}

/// Problem description for `solve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// A generated benchmark instance.
    Benchmark {
        family: Family,
        m: usize,
        n: usize,
        #[serde(default)]
        index: usize,
    },
    /// `⟨x, Ax⟩`; `a` is row-major.
    Rayleigh {
        manifold: Manifold,
        a: Vec<Vec<f64>>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
    /// `½⟨Ax, x⟩ - ⟨b, x⟩`; `a` is row-major.
    Quadratic {
        manifold: Manifold,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn square_matrix(rows: &[Vec<f64>], n: usize) -> std::result::Result<DMatrix<f64>, Error> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig(format!("matrix `a` must be {n} x {n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Builds the problem described by `cfg`; random pieces use `seed`.
pub fn build_problem(cfg: &ProblemConfig, seed: u64) -> crate::Result<Problem> {
    let start = |manifold: &Manifold, x0: &Option<Vec<f64>>| match x0 {
        Some(v) => manifold
            .point(DVector::from_column_slice(v))
            .map_err(|e| Error::InvalidConfig(format!("x0: {e}"))),
        None => Ok(manifold.random_point(&mut rng::stream(rng::derive_seed("solve-x0", &[seed])))),
    };
    match cfg {
        ProblemConfig::Benchmark { family, m, n, index } => {
            let spec = ProblemSpec::derived(*family, *m, *n, seed, *index);
            spec.validate()?;
            Ok(benchmark::generate_instance(spec)?.problem)
        }
        ProblemConfig::Rayleigh { manifold, a, x0 } => {
            let a = square_matrix(a, manifold.ambient_dim())?;
            let x0 = start(manifold, x0)?;
            let ga = a.clone() + a.transpose();
            Ok(Problem::new(manifold.clone(), x0, std::sync::Arc::new(move |x| x.dot(&(&a * x))))
                .with_gradient(std::sync::Arc::new(move |x| &ga * x)))
        }
        ProblemConfig::Quadratic { manifold, a, b, x0 } => {
            let n = manifold.ambient_dim();
            let a = square_matrix(a, n)?;
            if b.len() != n {
                return Err(Error::InvalidConfig(format!("vector `b` must have length {n}")));
            }
            let b = DVector::from_column_slice(b);
            let x0 = start(manifold, x0)?;
            let sym = (&a + a.transpose()) * 0.5;
            let (a2, b2) = (sym.clone(), b.clone());
            Ok(Problem::new(
                manifold.clone(),
                x0,
                std::sync::Arc::new(move |x| 0.5 * x.dot(&(&a * x)) - b.dot(x)),
            )
            .with_gradient(std::sync::Arc::new(move |x| &a2 * x - &b2)))
        }
    }
}

fn run_solve(args: &CommonArgs) -> CliResult<()> {
    let mut cfg: SolveConfig = require_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.solver.seed = s;
    }
    cfg.solver.validate()?;
    let problem = build_problem(&cfg.problem, cfg.solver.seed)?;
    let started = now_ms();
    let trace = solver::direct_search(&problem, &cfg.solver)?;
    println!("{}", trace.summary());
    let result = serde_json::json!({
        "f0": trace.f0,
        "final_f": trace.final_f,
        "final_alpha": trace.final_alpha,
        "final_point": trace.final_point,
        "evals": trace.evals,
        "iterations": trace.records.len(),
        "successes": trace.successes,
        "stop": trace.stop,
    });
    let mut outputs = Outputs::new();
    outputs.add("trace.ndjson", ndjson(&trace.records));
    outputs.add("result.json", serde_json::to_string_pretty(&result).expect("json") + "\n");
    outputs.write(&args.out, "solve", config_digest(&cfg), cfg.solver.seed, started)
}

fn run_bench(args: &CommonArgs) -> CliResult<()> {
    let mut cfg: GridConfig = require_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    if args.threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    let started = now_ms();
    let records = benchmark::run_grid_with_threads(&cfg, args.threads)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!("{} records ({} failed solves)", records.len(), failed);
    let mut outputs = Outputs::new();
    outputs.add("records.ndjson", ndjson(&records));
    outputs.add(
        "distributions.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "barycenter_points": "standard gaussian in R^n (projected onto the subspace for barycenter_on_manifold)",
            "quadratic_b": "standard gaussian",
            "quadratic_spectrum": "uniform on [0.1, 1]",
            "rayleigh_matrix": "(M + M^T)/2 with standard gaussian M",
            "subspace_basis": "haar orthonormal n x m",
            "x0": "random manifold point (gaussian coefficients / normalized gaussian)",
        }))
        .expect("json")
            + "\n",
    );
    outputs.write(&args.out, "bench", config_digest(&cfg), cfg.base_seed, started)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilesConfig {
    /// Newline-delimited benchmark records.
    records: PathBuf,
    #[serde(default = "default_tau")]
    tau: f64,
    #[serde(default = "default_max_alpha")]
    max_alpha: usize,
}

fn default_tau() -> f64 {
    1e-2
}

fn default_max_alpha() -> usize {
    100
}

fn load_records(path: &Path) -> CliResult<Vec<BenchRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read records {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Config(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn run_profiles(args: &CommonArgs) -> CliResult<()> {
    let cfg: ProfilesConfig = require_config(args.config.as_deref())?;
    if !(cfg.tau > 0.0 && cfg.tau < 1.0) {
        return Err(CliError::Config(format!("tau must lie in (0, 1), got {}", cfg.tau)));
    }
    let records = load_records(&cfg.records)?;
    let started = now_ms();
    let panels = benchmark::profile_panels(&records, cfg.tau, cfg.max_alpha)?;
    let table = benchmark::head_to_head(&records);
    let mut outputs = Outputs::new();
    for ((m, codim), profile) in &panels {
        outputs.add(
            format!("profiles/profile_m{m}_codim{codim}.csv"),
            benchmark::profile_csv(profile),
        );
    }
    outputs.add("head_to_head.csv", benchmark::head_to_head_csv(&table));
    let summary = serde_json::json!({
        "records": records.len(),
        "panels": panels.len(),
        "unpaired": table.unpaired,
        "proxy_undershoot": benchmark::proxy_undershoot(&records),
    });
    println!("{summary}");
    outputs.add("summary.json", serde_json::to_string_pretty(&summary).expect("json") + "\n");
    let seed = args.seed.unwrap_or(0);
    outputs.write(&args.out, "profiles", config_digest(&cfg), seed, started)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Cm(a) => run_cm(a),
        Command::SphereStudy(a) => run_sphere(a),
        Command::Solve(a) => run_solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Profiles(a) => run_profiles(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
