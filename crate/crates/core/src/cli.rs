//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 verification
//! failure.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    dominance_scan, fmt_g10, grid_cells, regime_map, rho_jaccard, rho_report, Method, RhoReport,
};
use crate::bench::{run_bench, BenchConfig};
use crate::error::Error;
use crate::index::CpIndex;
use crate::measure::{MeasureKind, ThresholdPair};
use crate::reductions::{DenseBits, TransformParams, TransformT};
use crate::set::{read_sets, write_sets};
use crate::verify::{
    verify_map, verify_padded_hash, verify_transform, Check, MapVerifyConfig, PaddedVerifyConfig,
    TransformVerifyConfig,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "chosen-path", version, about = "Approximate set similarity search with Chosen Path maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index snapshot from a set-file and print a JSON stats line.
    Build(BuildArgs),
    /// Query a snapshot; one `query,found|NONE,similarity,candidates` line per query.
    Query(QueryArgs),
    /// Planted-pair recall and work benchmark (JSON report on stdout).
    Bench(BenchArgs),
    /// ρ-value tables, slices and regime maps as CSV.
    Rho(RhoArgs),
    /// Monte Carlo verification harnesses.
    Verify(VerifyArgs),
    /// Map dense hex-encoded bit vectors to sparse sets.
    Transform(TransformArgs),
}

/// Thresholds given either as Braun-Blanquet (`--b1/--b2`) or as another
/// measure (`--j1/--j2`, or `--s1/--s2` with `--measure`) at size ratio
/// `--beta`.
#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    #[arg(long)]
    pub j1: Option<f64>,
    #[arg(long)]
    pub j2: Option<f64>,
    #[arg(long)]
    pub s1: Option<f64>,
    #[arg(long)]
    pub s2: Option<f64>,
    #[arg(long, value_parser = parse_measure)]
    pub measure: Option<MeasureKind>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

fn parse_measure(s: &str) -> Result<MeasureKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ThresholdArgs {
    /// The Braun-Blanquet pair the index works with.
    fn braun_blanquet(&self) -> Result<(f64, f64), CliError> {
        let pair = match (self.b1, self.b2, self.j1, self.j2, self.s1, self.s2) {
            (Some(b1), Some(b2), None, None, None, None) => {
                ThresholdPair::new(b1, b2, MeasureKind::BraunBlanquet, self.beta)
            }
            (None, None, Some(j1), Some(j2), None, None) => {
                ThresholdPair::new(j1, j2, MeasureKind::Jaccard, self.beta)
            }
            (None, None, None, None, Some(s1), Some(s2)) => {
                let measure = self
                    .measure
                    .ok_or_else(|| CliError::Usage("--s1/--s2 need --measure".into()))?;
                ThresholdPair::new(s1, s2, measure, self.beta)
            }
            _ => {
                return Err(CliError::Usage(
                    "give exactly one of --b1/--b2, --j1/--j2 or --s1/--s2".into(),
                ))
            }
        };
        let (b1, b2) = pair.and_then(|p| p.overlap_ratios()).map_err(usage)?;
        if !(0.0 < b2 && b2 < b1 && b1 < 1.0) {
            return Err(CliError::Usage(format!(
                "Braun-Blanquet thresholds must satisfy 0 < b2 < b1 < 1, got {b1}, {b2}"
            )));
        }
        Ok((b1, b2))
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Set-file with one point per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Snapshot path.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Repetitions (default ceil(log2 n) + 2).
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Snapshot written by `build`.
    #[arg(long)]
    pub index: PathBuf,
    /// Set-file of queries.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file (default stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Set size.
    #[arg(long, default_value_t = 64)]
    pub t: usize,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub b1: f64,
    #[arg(long, default_value_t = 2.0 / 11.0)]
    pub b2: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Leave out the planted point.
    #[arg(long)]
    pub decoys_only: bool,
    /// Skip the MinHash baseline.
    #[arg(long)]
    pub no_minhash: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RhoArgs {
    /// A single point, e.g. `--point b1=0.3333333333 b2=0.1818181818`
    /// (also `j1=`/`j2=` for Jaccard at beta 1).
    #[arg(long, num_args = 2, value_names = ["S1", "S2"])]
    pub point: Option<Vec<String>>,
    /// Slice j2 = j1 / 2 over j1 in (0, 1), equal-size sets.
    #[arg(long)]
    pub figure2: bool,
    /// Regime map over Jaccard thresholds at size ratio --beta.
    #[arg(long)]
    pub regime: bool,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Cells per axis.
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
    /// Run the dominance checks instead of printing a grid.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyTarget {
    /// Size, shared-path and collision properties of the map.
    Map,
    /// Collision rates of the padded single-valued hash.
    PaddedHash,
    /// Cardinality and similarity of the dense-to-sparse transform.
    Transform,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub target: VerifyTarget,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Set size (map, padded-hash).
    #[arg(long)]
    pub t: Option<usize>,
    /// Number of points the parameters are chosen for (map, padded-hash).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    /// Source dimension (transform).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output dimension (transform).
    #[arg(long)]
    pub out_dim: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sampled transforms for the similarity check (transform).
    #[arg(long)]
    pub pairs: Option<usize>,
}

/// Dense input: one vector per line as `ceil(D/4)` hex digits; the most
/// significant bit of the first digit is coordinate 0.
#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Source dimension D.
    #[arg(long)]
    pub dim: usize,
    /// Output dimension d (t = floor(d / l) blocks).
    #[arg(long)]
    pub out_dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub b1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Verification(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(Error::Io(e))
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Rho(a) => cmd_rho(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Transform(a) => cmd_transform(a),
    }
}

fn cmd_build(a: BuildArgs) -> Result<(), CliError> {
    let (b1, b2) = a.thresholds.braun_blanquet()?;
    let points = read_sets(open_input(&a.input)?)?;
    if points.is_empty() {
        return Err(CliError::Data(Error::NoPoints));
    }
    let index = match a.reps {
        Some(r) => CpIndex::build_with_reps(points, b1, b2, r, a.seed)?,
        None => CpIndex::build(points, b1, b2, a.seed)?,
    };
    let bytes = index.to_bytes();
    File::create(&a.output)?.write_all(&bytes)?;
    let s = index.stats();
    let record = json!({
        "n": s.n,
        "k": s.k,
        "w": s.w,
        "R": s.reps,
        "buckets": s.buckets,
        "entries": s.entries,
        "entries_bound": s.entries_bound,
        "bytes": bytes.len(),
        "b1": b1,
        "b2": b2,
        "seed": a.seed,
        "version": VERSION,
    });
    println!("{record}");
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<(), CliError> {
    let index = CpIndex::load(&a.index)?;
    let queries = read_sets(open_input(&a.input)?)?;
    let mut out = open_output(a.output.as_deref())?;
    for (i, q) in queries.iter().enumerate() {
        let o = index.query(q)?;
        match (o.found, o.similarity) {
            (Some(id), Some(s)) => writeln!(out, "{i},{id},{},{}", fmt_g10(s), o.candidates_scanned)?,
            _ => writeln!(out, "{i},NONE,,{}", o.candidates_scanned)?,
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig {
        n: a.n,
        t: a.t,
        b1: a.b1,
        b2: a.b2,
        trials: a.trials,
        seed: a.seed,
        reps: a.reps,
        decoys_only: a.decoys_only,
        minhash: !a.no_minhash,
    };
    let start = Instant::now();
    let report = run_bench(&cfg)?;
    let mut out = open_output(a.output.as_deref())?;
    writeln!(out, "{}", serde_json::to_string(&report).expect("report serializes"))?;
    out.flush()?;
    // wall time stays off stdout so reports are byte-identical across runs
    eprintln!("wall_time_s={:.3}", start.elapsed().as_secs_f64());
    Ok(())
}

const DATADEP_NOTE: &str = "# rho_datadep ignores o_n(1) terms";

fn rho_header(prefix: bool) -> String {
    let cols: Vec<String> = Method::ALL.iter().map(|m| format!("rho_{m}")).collect();
    let lead = if prefix { "beta,j1,j2,b1,b2" } else { "b1,b2" };
    format!("{lead},{},winner", cols.join(","))
}

fn rho_cells(r: &RhoReport) -> String {
    Method::ALL
        .iter()
        .map(|&m| r.get(m).map(fmt_g10).unwrap_or_default())
        .collect::<Vec<_>>()
        .join(",")
}

fn bb_row(r: &RhoReport) -> String {
    let t = r.thresholds;
    format!("{},{},{},{}", fmt_g10(t.s1), fmt_g10(t.s2), rho_cells(r), r.winner)
}

fn parse_point(tokens: &[String]) -> Result<(f64, f64), CliError> {
    let mut b = (None, None);
    let mut j = (None, None);
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got {tok:?}")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid number in {tok:?}")))?;
        match key {
            "b1" => b.0 = Some(v),
            "b2" => b.1 = Some(v),
            "j1" => j.0 = Some(v),
            "j2" => j.1 = Some(v),
            _ => return Err(CliError::Usage(format!("unknown key {key:?}"))),
        }
    }
    match (b, j) {
        ((Some(b1), Some(b2)), (None, None)) => Ok((b1, b2)),
        ((None, None), (Some(j1), Some(j2))) => {
            let to_b = |j: f64| 2.0 * j / (1.0 + j);
            Ok((to_b(j1), to_b(j2)))
        }
        _ => Err(CliError::Usage("--point needs b1=,b2= or j1=,j2=".into())),
    }
}

fn cmd_rho(a: RhoArgs) -> Result<(), CliError> {
    if a.resolution == 0 {
        return Err(CliError::Usage("resolution must be positive".into()));
    }
    let modes = [a.point.is_some(), a.figure2, a.regime, a.check];
    if modes.iter().filter(|&&m| m).count() > 1 {
        return Err(CliError::Usage("choose one of --point, --figure2, --regime, --check".into()));
    }
    let mut out = open_output(a.output.as_deref())?;
    if a.check {
        let report = dominance_scan(a.resolution)?;
        for v in report.violations.iter().take(20) {
            eprintln!("{v}");
        }
        let summary = json!({
            "resolution": report.resolution,
            "cells": report.cells,
            "violations": report.violations.len(),
            "cp_le_datadep": report.cp_le_datadep,
            "datadep_better": report.datadep_better,
            "low_b2_all_chosenpath": report.low_b2_all_cp,
            "passed": report.passed(),
        });
        writeln!(out, "{summary}")?;
        out.flush()?;
        if !report.passed() {
            let what = match report.violations.first() {
                Some(v) => v.to_string(),
                None => "data-dependent LSH wins a cell with b2 <= 1/5".into(),
            };
            return Err(CliError::Verification(format!("dominance check failed: {what}")));
        }
        return Ok(());
    }
    writeln!(out, "{DATADEP_NOTE}")?;
    if let Some(tokens) = &a.point {
        let (b1, b2) = parse_point(tokens)?;
        writeln!(out, "{}", rho_header(false))?;
        writeln!(out, "{}", bb_row(&rho_report(b1, b2)?))?;
    } else if a.figure2 {
        writeln!(out, "{}", rho_header(true))?;
        let r = a.resolution as f64;
        for i in 0..a.resolution {
            let j1 = (i as f64 + 0.5) / r;
            let j2 = j1 / 2.0;
            let to_b = |j: f64| 2.0 * j / (1.0 + j);
            let report = rho_report(to_b(j1), to_b(j2))?;
            let values: Vec<String> = Method::ALL
                .iter()
                .map(|&m| rho_jaccard(m, j1, j2).map(fmt_g10))
                .collect::<Result<_, _>>()?;
            writeln!(
                out,
                "1,{},{},{},{},{},{}",
                fmt_g10(j1),
                fmt_g10(j2),
                fmt_g10(to_b(j1)),
                fmt_g10(to_b(j2)),
                values.join(","),
                report.winner
            )?;
        }
    } else if a.regime {
        if !(a.beta > 0.0 && a.beta <= 1.0) {
            return Err(CliError::Usage(format!("beta must lie in (0, 1], got {}", a.beta)));
        }
        writeln!(out, "{}", rho_header(true))?;
        for (j1, j2) in grid_cells(a.resolution, a.beta) {
            let r = regime_map(j1, j2, a.beta)?;
            let (b1, b2) = r.thresholds.overlap_ratios()?;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_g10(a.beta),
                fmt_g10(j1),
                fmt_g10(j2),
                fmt_g10(b1),
                fmt_g10(b2),
                rho_cells(&r),
                r.winner
            )?;
        }
    } else {
        writeln!(out, "{}", rho_header(false))?;
        for (b1, b2) in grid_cells(a.resolution, 1.0) {
            writeln!(out, "{}", bb_row(&rho_report(b1, b2)?))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn print_checks(out: &mut dyn Write, meta: serde_json::Value, checks: &[Check]) -> Result<(), CliError> {
    writeln!(out, "{meta}")?;
    for c in checks {
        writeln!(
            out,
            "{} {}: {} ± {} vs {} ({:?})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt_g10(c.estimate),
            fmt_g10(c.se),
            fmt_g10(c.target),
            c.relation
        )?;
    }
    out.flush()?;
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(CliError::Verification(format!("check failed: {}", c.name))),
        None => Ok(()),
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let mut out = open_output(None)?;
    match a.target {
        VerifyTarget::Map => {
            let d = MapVerifyConfig::default();
            let cfg = MapVerifyConfig {
                t: a.t.unwrap_or(d.t),
                n: a.n.unwrap_or(d.n),
                b1: a.b1.unwrap_or(d.b1),
                b2: a.b2.unwrap_or(d.b2),
                trials: a.trials.unwrap_or(d.trials),
                seed: a.seed,
            };
            let (params, checks) = verify_map(&cfg)?;
            let meta = json!({"target": "map", "config": cfg, "k": params.k, "w": params.w, "version": VERSION});
            print_checks(&mut out, meta, &checks)
        }
        VerifyTarget::PaddedHash => {
            let d = PaddedVerifyConfig::default();
            let cfg = PaddedVerifyConfig {
                t: a.t.unwrap_or(d.t),
                n: a.n.unwrap_or(d.n),
                b1: a.b1.unwrap_or(d.b1),
                b2: a.b2.unwrap_or(d.b2),
                trials: a.trials.unwrap_or(d.trials),
                seed: a.seed,
            };
            let (summary, checks) = verify_padded_hash(&cfg)?;
            let meta = json!({"target": "padded-hash", "config": cfg, "summary": summary, "version": VERSION});
            print_checks(&mut out, meta, &checks)
        }
        VerifyTarget::Transform => {
            let d = TransformVerifyConfig::default();
            let cfg = TransformVerifyConfig {
                source_dim: a.dim.unwrap_or(d.source_dim),
                target_dim: a.out_dim.unwrap_or(d.target_dim),
                b1: a.b1.unwrap_or(d.b1),
                eps: a.eps.unwrap_or(d.eps),
                inputs: a.trials.unwrap_or(d.inputs),
                pairs: a.pairs.unwrap_or(d.pairs),
                seed: a.seed,
            };
            let (params, checks) = verify_transform(&cfg)?;
            let meta = json!({"target": "transform", "config": cfg, "params": params, "version": VERSION});
            print_checks(&mut out, meta, &checks)
        }
    }
}

fn cmd_transform(a: TransformArgs) -> Result<(), CliError> {
    let params = TransformParams::new(a.dim, a.out_dim, a.b1, a.eps)?;
    let tr = TransformT::new(params, a.seed)?;
    let mut sets = Vec::new();
    for (i, line) in open_input(&a.input)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let x = DenseBits::from_hex(&line, a.dim, i + 1)?;
        sets.push(tr.apply(&x)?);
    }
    let out = open_output(a.output.as_deref())?;
    write_sets(out, &sets)?;
    Ok(())
}
