//! The `codedmv` command line: construct, analyze, verify, multiply and
//! simulate.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{
    analyze, certify_full_rank, format_table, worst_case_load, AnalysisOptions, EnumerationMode, PatternBound,
    DEFAULT_BUDGET, DEFAULT_RANK_TOL,
};
use crate::coding::{self, decode, simulate, CodedJob, CodingError, InputMatrix, Schedule};
use crate::schemes::{CollectionDocument, GeneratorCollection, Generators, SchemeConfig};
use crate::tables;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CERTIFICATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "codedmv", version, about = "Straggler-tolerant coded matrix-vector multiplication")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a generator collection and write it as JSON plus per-worker CSVs.
    Construct(SourceArgs),
    /// Condition-number and density statistics over all patterns.
    Analyze(AnalyzeArgs),
    /// Check the full-rank condition for every pattern.
    Verify(AnalyzeArgs),
    /// Encode A, run the workers, decode A·x.
    Multiply(MultiplyArgs),
    /// Like multiply, on a seeded random A and x.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Scheme config JSON.
    #[arg(long, conflicts_with = "collection")]
    pub scheme: Option<PathBuf>,
    /// Collection JSON written by `construct`.
    #[arg(long)]
    pub collection: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    #[arg(long, default_value = "block-aligned")]
    pub mode: EnumerationMode,
    /// Restrict patterns to v_i ≤ ℓ−1.
    #[arg(long)]
    pub strict_psi: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
}

impl PatternArgs {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            mode: self.mode,
            bound: if self.strict_psi { PatternBound::Strict } else { PatternBound::Inclusive },
            budget: self.budget,
            rank_tol: self.rank_tol,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Run a preset table (1 or 2) instead of a single scheme.
    #[arg(long, conflicts_with_all = ["scheme", "collection"])]
    pub table: Option<u8>,
    #[command(flatten)]
    pub patterns: PatternArgs,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Per-worker product budgets, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "rates")]
    pub budgets: Option<Vec<usize>>,
    /// Per-worker exponential rates (0 = dead worker), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Workers that never compute anything.
    #[arg(long, value_delimiter = ',')]
    pub disable: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MultiplyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Dense CSV (`.csv`) or `row col value` triplets (any other extension).
    #[arg(long = "a")]
    pub a: PathBuf,
    /// One value per line.
    #[arg(long = "x")]
    pub x: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 96)]
    pub rows: usize,
    #[arg(long, default_value_t = 48)]
    pub cols: usize,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl ToString) -> Self {
        CliError { code, message: message.to_string() }
    }

    fn config(message: impl ToString) -> Self {
        CliError::new(EXIT_CONFIG, message)
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::new(EXIT_OTHER, format!("{}: {e}", path.display()))
    }
}

impl From<CodingError> for CliError {
    fn from(e: CodingError) -> Self {
        let code = match e {
            CodingError::Infeasible { .. } | CodingError::NotDecodable { .. } => EXIT_INFEASIBLE,
            CodingError::RankDeficient { .. } => EXIT_CERTIFICATION,
            CodingError::Parse(_) | CodingError::Shape(_) | CodingError::Domain(_) => EXIT_CONFIG,
            CodingError::WorkerFinished(_) => EXIT_OTHER,
        };
        CliError::new(code, e)
    }
}

type CliResult = Result<(), CliError>;

/// A loaded collection together with the resolved config and its hash.
struct Loaded {
    coll: GeneratorCollection,
    config: Option<SchemeConfig>,
    hash: String,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load(src: &SourceArgs) -> Result<Loaded, CliError> {
    match (&src.scheme, &src.collection) {
        (Some(path), _) => {
            let config = SchemeConfig::from_json(&read(path)?).map_err(CliError::config)?;
            let coll = config.build().map_err(CliError::config)?;
            Ok(Loaded { hash: config.hash(), coll, config: Some(config) })
        }
        (None, Some(path)) => {
            let text = read(path)?;
            let doc: CollectionDocument =
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let coll = GeneratorCollection::from_document(&doc).map_err(CliError::config)?;
            let hash = doc.meta.config_hash.clone().unwrap_or_else(|| hex::encode(Sha256::digest(text.as_bytes())));
            Ok(Loaded { coll, config: doc.meta.config, hash })
        }
        (None, None) => Err(CliError::config("one of --scheme or --collection is required")),
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(EXIT_OTHER, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn worker_csv(coll: &GeneratorCollection, k: usize) -> String {
    let rows: Vec<Vec<String>> = match coll.generators() {
        Generators::Real(m) => m[k].to_rows().into_iter().map(|r| r.iter().map(|v| format!("{v}")).collect()).collect(),
        Generators::Integer(m) => m[k].to_rows().into_iter().map(|r| r.iter().map(i64::to_string).collect()).collect(),
        Generators::Field(ctx, m) => m[k]
            .to_rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .map(|&a| ctx.coeffs(a).iter().map(u32::to_string).collect::<Vec<_>>().join(";"))
                    .collect()
            })
            .collect(),
    };
    rows.into_iter().map(|r| r.join(",") + "\n").collect()
}

fn cmd_construct(args: &SourceArgs, out: &mut dyn Write) -> CliResult {
    let loaded = load(args)?;
    let dir = out_dir(&args.out)?;
    let coll = &loaded.coll;
    let mut doc = coll.to_document(loaded.config.as_ref());
    doc.meta.config_hash = Some(loaded.hash.clone());
    write_json(&dir.join("collection.json"), &doc)?;
    for k in 0..coll.n_workers() {
        write_text(&dir.join(format!("worker_{k}.csv")), &worker_csv(coll, k))?;
    }
    let _ = writeln!(
        out,
        "{}: N={} shape {}x{} s={} Q_b={} density {:.1}% domain {}",
        coll.construction(),
        coll.n_workers(),
        coll.delta(),
        coll.ell(),
        coll.s(),
        coll.q_b(),
        coll.density() * 100.0,
        coll.domain().name()
    );
    let _ = writeln!(out, "wrote {}", dir.join("collection.json").display());
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let opts = args.patterns.options();
    let dir = out_dir(&args.source.out)?;
    if let Some(t) = args.table {
        let rows = tables::table(t).ok_or_else(|| CliError::config(format!("unknown table {t}; use 1 or 2")))?;
        let reports = tables::run_table(&rows, &opts).map_err(CliError::config)?;
        let hash = hex::encode(Sha256::digest(
            rows.iter().map(|r| r.config.hash()).collect::<Vec<_>>().join(",").as_bytes(),
        ));
        let doc = json!({
            "config_hash": hash,
            "mode": opts.mode,
            "bound": opts.bound,
            "rows": rows.iter().zip(&reports).map(|(r, rep)| json!({
                "config": r.config,
                "target": r.target,
                "report": rep,
            })).collect::<Vec<_>>(),
        });
        write_json(&dir.join(format!("table{t}.json")), &doc)?;
        let text = format_table(&reports);
        write_text(&dir.join(format!("table{t}.txt")), &text)?;
        let _ = write!(out, "mode {} ({})\n{text}", opts.mode, opts.bound);
        return Ok(());
    }
    let loaded = load(&args.source)?;
    let mut report = analyze(&loaded.coll, &opts).map_err(CliError::config)?;
    report.config_hash = Some(loaded.hash.clone());
    write_json(
        &dir.join("analysis.json"),
        &json!({ "config": loaded.config, "report": report }),
    )?;
    let _ = write!(out, "mode {} ({})\n{}", opts.mode, opts.bound, format_table(std::slice::from_ref(&report)));
    if !report.certification.verdict.passed() {
        let _ = writeln!(out, "full-rank certification FAILED: {:?}", report.certification.verdict);
        return Err(CliError::new(EXIT_CERTIFICATION, "certification failed"));
    }
    Ok(())
}

fn cmd_verify(args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let opts = args.patterns.options();
    let loaded = load(&args.source)?;
    let cert = certify_full_rank(&loaded.coll, opts.mode, opts.bound, opts.rank_tol);
    if let Some(dir) = &args.source.out {
        let dir = out_dir(&Some(dir.clone()))?;
        write_json(&dir.join("verify.json"), &json!({ "config_hash": loaded.hash, "certification": cert }))?;
    }
    match &cert.verdict {
        crate::analysis::Verdict::Pass => {
            let _ = writeln!(
                out,
                "PASS: {} patterns ({}, {}, {:?} rank)",
                cert.patterns_checked, cert.mode, cert.bound, cert.exactness
            );
            Ok(())
        }
        crate::analysis::Verdict::Fail { pattern, rank } => {
            let _ = writeln!(out, "FAIL at pattern {pattern:?}: rank {rank} < Δ = {} ({:?} rank)", loaded.coll.delta(), cert.exactness);
            Err(CliError::new(EXIT_CERTIFICATION, format!("pattern {pattern:?} is rank deficient")))
        }
    }
}

fn schedule_for(args: &ScheduleArgs, coll: &GeneratorCollection) -> Result<Schedule, CliError> {
    let n = coll.n_workers();
    if let Some(&k) = args.disable.iter().find(|&&k| k >= n) {
        return Err(CliError::config(format!("--disable {k}: only {n} workers")));
    }
    Ok(match (&args.budgets, &args.rates) {
        (Some(b), _) => {
            let mut budgets = b.clone();
            for &k in &args.disable {
                if let Some(slot) = budgets.get_mut(k) {
                    *slot = 0;
                }
            }
            Schedule::Budgets { budgets }
        }
        (None, Some(r)) => {
            let mut rates = r.clone();
            for &k in &args.disable {
                if let Some(slot) = rates.get_mut(k) {
                    *slot = 0.0;
                }
            }
            Schedule::Exponential { seed: args.seed, rates }
        }
        (None, None) => {
            let budgets = (0..n).map(|k| if args.disable.contains(&k) { 0 } else { coll.ell() }).collect();
            Schedule::Budgets { budgets }
        }
    })
}

fn run_job(job: &CodedJob, schedule: &Schedule, hash: &str, dir: &Path, out: &mut dyn Write) -> CliResult {
    let encoded = job.encode();
    let trace = simulate(job, &encoded, schedule)?;
    let decoded = decode(&trace, job)?;
    let direct = job.direct_product();
    let err = (DVector::from_vec(decoded.ax.clone()) - &direct).norm() / direct.norm().max(f64::MIN_POSITIVE);
    let coll = job.collection();
    let bound = worst_case_load(coll.delta(), coll.n_workers(), coll.s());
    let ax_text: String = decoded.ax.iter().map(|v| format!("{v:.17e}\n")).collect();
    write_text(&dir.join("ax.txt"), &ax_text)?;
    write_json(&dir.join("trace.json"), &json!({ "config_hash": hash, "trace": trace }))?;
    write_json(
        &dir.join("diagnostics.json"),
        &json!({
            "config_hash": hash,
            "pattern": decoded.pattern,
            "residual": decoded.residual,
            "kappa": if decoded.kappa.is_finite() { json!(decoded.kappa) } else { json!("inf") },
            "relative_error": err,
            "total_products": trace.total_products,
            "worst_case_load": bound,
            "padded_rows": job.padded_rows(),
            "sparse_input": job.input().is_sparse(),
        }),
    )?;
    let _ = writeln!(
        out,
        "decoded from pattern {:?}: {} products (bound {bound}), κ = {:.3e}, residual {:.2e}, relative error {:.2e}",
        decoded.pattern, trace.total_products, decoded.kappa, decoded.residual, err
    );
    Ok(())
}

fn cmd_multiply(args: &MultiplyArgs, out: &mut dyn Write) -> CliResult {
    let loaded = load(&args.source)?;
    let open = |p: &Path| fs::File::open(p).map(BufReader::new).map_err(|e| CliError::io(p, e));
    let a = if args.a.extension().is_some_and(|e| e == "csv") {
        InputMatrix::auto(coding::read_dense_csv(open(&args.a)?)?)
    } else {
        coding::read_triplets(open(&args.a)?)?
    };
    let x = coding::read_vector(open(&args.x)?)?;
    let job = CodedJob::new(a, x, loaded.coll.clone())?;
    let schedule = schedule_for(&args.schedule, job.collection())?;
    run_job(&job, &schedule, &loaded.hash, &out_dir(&args.source.out)?, out)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    let loaded = load(&args.source)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.schedule.seed);
    let a = DMatrix::from_fn(args.rows, args.cols, |_, _| rng.random_range(-1.0..1.0));
    let x = DVector::from_fn(args.cols, |_, _| rng.random_range(-1.0..1.0));
    let job = CodedJob::new(InputMatrix::Dense(a), x, loaded.coll.clone())?;
    let mut schedule = schedule_for(&args.schedule, job.collection())?;
    if args.schedule.budgets.is_none() && args.schedule.rates.is_none() {
        let rates = (0..job.collection().n_workers())
            .map(|k| if args.schedule.disable.contains(&k) { 0.0 } else { 1.0 })
            .collect();
        schedule = Schedule::Exponential { seed: args.schedule.seed, rates };
    }
    run_job(&job, &schedule, &loaded.hash, &out_dir(&args.source.out)?, out)
}

/// Runs the CLI; returns the process exit code. Messages go to `out`,
/// errors to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Construct(a) => cmd_construct(a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Multiply(a) => cmd_multiply(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
