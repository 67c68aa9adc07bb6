//! `pas`: compound mean estimation from the command line.
//!
//! Subcommands: `synth` (seeded synthetic benchmark), `bench` (split-based
//! benchmark over a CSV dataset), `estimate` (one-shot estimates for one
//! estimator), `cure-scan` (dump the risk curve over the shrinkage grid).
//!
//! Exit codes: 0 success, 2 input/schema error, 3 numeric failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pas_core::bench::{
    cure_scan, parse_estimators, run_ratio_sweep, run_synth_bench, single_shot, BenchReport,
    EstimatorKind, MomentsMode, SplitPlan,
};
use pas_core::data::{ingest_csv, read_moments_csv, read_tables, SecondMoments};
use pas_core::synth::{Predictor, SynthConfig};
use pas_core::{Error, Result};

const DEFAULT_ESTIMATORS: &str = "classical,prediction-avg,ppi,pt,shrink-classical,shrink-avg,pas";

#[derive(Parser)]
#[command(name = "pas", version, about = "Compound mean estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo benchmark on the built-in synthetic model
    Synth(SynthArgs),
    /// Split-based benchmark on a fully labeled CSV dataset
    Bench(BenchArgs),
    /// One-shot estimates for a single estimator on a CSV dataset
    Estimate(EstimateArgs),
    /// Scan the adaptive-shrinkage risk objective and emit the curve
    CureScan(CureScanArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of parallel problems
    #[arg(long, default_value_t = 200)]
    m: usize,
    /// Labeled sample size per problem
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Unlabeled sample size per problem
    #[arg(long = "big-n", default_value_t = 80)]
    big_n: usize,
    /// Predictor: abs | square
    #[arg(long)]
    predictor: String,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Second moments for the moment-based estimators: known | sample
    #[arg(long, default_value = "known")]
    moments: String,
    /// Comma-separated estimator list, or "all"
    #[arg(long, default_value = DEFAULT_ESTIMATORS)]
    estimators: String,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: csv | json
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct BenchArgs {
    /// CSV dataset; every row must carry a y value
    #[arg(long)]
    data: PathBuf,
    /// Unlabeled fraction(s); several values run a sweep
    #[arg(long, value_delimiter = ',', default_value = "0.8")]
    ratio: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// known is rejected here: file-based runs estimate moments from data
    #[arg(long, default_value = "sample")]
    moments: String,
    #[arg(long, default_value = DEFAULT_ESTIMATORS)]
    estimators: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Known-moments sidecar (problem_id,sigma2,tau2,gamma); sample moments
    /// when omitted
    #[arg(long = "moments-file")]
    moments_file: Option<PathBuf>,
    /// One estimator name
    #[arg(long)]
    estimator: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CureScanArgs {
    /// CSV dataset (sample moments); omit to scan a synthetic draw
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long = "big-n", default_value_t = 80)]
    big_n: usize,
    /// Predictor for the synthetic source: abs | square
    #[arg(long, default_value = "square")]
    predictor: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Moments for the synthetic source: known | sample
    #[arg(long, default_value = "known")]
    moments: String,
    /// Interior grid points of the omega scan
    #[arg(long = "grid-size", default_value_t = 512)]
    grid_size: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Bench(args) => run_bench(args),
        Command::Estimate(args) => run_estimate(args),
        Command::CureScan(args) => run_cure_scan(args),
    }
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        m: args.m,
        n: args.n,
        big_n: args.big_n,
        predictor: args.predictor.parse::<Predictor>()?,
        seed: args.seed,
        ..Default::default()
    };
    let moments: MomentsMode = args.moments.parse()?;
    let estimators = parse_estimators(&args.estimators)?;
    let report = run_synth_bench(&cfg, args.replicates, moments, &estimators)?;
    eprintln!(
        "synth benchmark: {} replicates in {:.2?}",
        args.replicates, report.wall_time
    );
    emit_report(&report, &args.format, args.out.as_deref())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let tables = read_tables(&args.data)?;
    let moments: MomentsMode = args.moments.parse()?;
    let estimators = parse_estimators(&args.estimators)?;
    if args.ratio.is_empty() {
        return Err(Error::InvalidParam {
            name: "ratio",
            reason: "need at least one split ratio".into(),
        });
    }
    let plan = SplitPlan {
        ratio: args.ratio[0],
        replicates: args.replicates,
        seed: args.seed,
    };
    let reports = run_ratio_sweep(&tables, &args.ratio, &plan, moments, &estimators)?;
    for (report, &ratio) in reports.iter().zip(&args.ratio) {
        eprintln!(
            "bench ratio {ratio}: {} replicates in {:.2?}",
            args.replicates, report.wall_time
        );
        let out = if reports.len() > 1 {
            args.out.as_deref().map(|p| suffix_path(p, ratio))
        } else {
            args.out.clone()
        };
        emit_report(report, &args.format, out.as_deref())?;
    }
    Ok(())
}

/// report.csv -> report-r0.2.csv for ratio sweeps with a single --out stem.
fn suffix_path(path: &Path, ratio: f64) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    let ext = path.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(ext) => format!("{stem}-r{ratio}.{ext}"),
        None => format!("{stem}-r{ratio}"),
    };
    path.with_file_name(name)
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let problems = ingest_csv(&args.data)?;
    let kind: EstimatorKind = args.estimator.parse()?;
    let known: Option<Vec<SecondMoments>> = match &args.moments_file {
        Some(path) => Some(align_moments(&problems, &read_moments_csv(path)?)?),
        None => None,
    };
    let estimates = single_shot(&problems, kind, known.as_deref())?;
    write_out(args.out.as_deref(), |w| {
        writeln!(w, "problem_id,estimate").map_err(io_err)?;
        for (p, est) in problems.iter().zip(&estimates) {
            writeln!(w, "{},{}", p.id, est).map_err(io_err)?;
        }
        Ok(())
    })
}

fn align_moments(
    problems: &[pas_core::data::ProblemData],
    sidecar: &[(String, SecondMoments)],
) -> Result<Vec<SecondMoments>> {
    problems
        .iter()
        .map(|p| {
            sidecar
                .iter()
                .find(|(id, _)| *id == p.id)
                .map(|(_, m)| *m)
                .ok_or_else(|| Error::InvalidParam {
                    name: "moments-file",
                    reason: format!("no moments row for problem {:?}", p.id),
                })
        })
        .collect()
}

fn run_cure_scan(args: CureScanArgs) -> Result<()> {
    let curve = match &args.data {
        Some(path) => {
            let problems = ingest_csv(path)?;
            cure_scan(&problems, None, Some(args.grid_size))?
        }
        None => {
            let cfg = SynthConfig {
                m: args.m,
                n: args.n,
                big_n: args.big_n,
                predictor: args.predictor.parse::<Predictor>()?,
                seed: args.seed,
                ..Default::default()
            };
            let (problems, truths) = pas_core::synth::synth_draw(&cfg);
            let known: Vec<SecondMoments> = truths.iter().map(|t| t.moments()).collect();
            match args.moments.parse::<MomentsMode>()? {
                MomentsMode::Known => cure_scan(&problems, Some(&known), Some(args.grid_size))?,
                MomentsMode::Sample => cure_scan(&problems, None, Some(args.grid_size))?,
            }
        }
    };
    eprintln!(
        "cure-scan: argmin omega = {} (risk {})",
        curve.argmin_omega(),
        curve.min_risk()
    );
    write_out(args.out.as_deref(), |w| curve.write_csv(w))
}

fn emit_report(report: &BenchReport, format: &str, out: Option<&Path>) -> Result<()> {
    match format {
        "csv" => write_out(out, |w| report.write_csv(w)),
        "json" => write_out(out, |w| report.write_json(w)),
        other => Err(Error::InvalidParam {
            name: "format",
            reason: format!("expected csv|json, got {other:?}"),
        }),
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: e,
    }
}

fn write_out(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)
        }
    }
}
