use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cur_deim::bench::{
    emit_csv, parse_synthetic, run_experiment, ExperimentConfig, InputSource, RankSweep,
    SvdRankRule,
};
use cur_deim::matrix_io::{MatrixFormat, Preprocess};
use cur_deim::select::Method;

/// Sweep the CUR target rank and record relative error and index-selection
/// time for DEIM, L-DEIM, Q-DEIM and leverage-score sampling.
#[derive(Debug, Parser)]
#[command(name = "cur-bench", version)]
struct Args {
    /// Matrix file to load (Matrix Market or headerless CSV).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,

    /// Generate X·Yᵀ + noise·N instead of loading a file, given as RxC:rank:noise.
    #[arg(long, value_name = "RxC:rank:noise")]
    synthetic: Option<String>,

    /// Format of --input: mtx or csv. Defaults to csv for *.csv, mtx otherwise.
    #[arg(long, value_parser = ["mtx", "csv"])]
    format: Option<String>,

    /// Preprocessing applied once before the sweep.
    #[arg(long, default_value = "none", value_parser = ["none", "row-unit", "row-center", "col-center"])]
    preprocess: String,

    /// Comma-separated methods from deim, ldeim, qdeim, leverage.
    #[arg(long, default_value = "deim,ldeim,qdeim,leverage")]
    methods: String,

    /// Target-rank sweep as min:max:step. Defaults to 1:50:1 clipped to min(m, n).
    #[arg(long, value_name = "min:max:step")]
    ranks: Option<String>,

    /// Singular vectors given to L-DEIM: `half` (k = ceil(k_hat/2)) or `fixed=<k>`.
    #[arg(long, default_value = "half")]
    svd_rank_rule: String,

    /// Singular vectors used for leverage scores, independent of k_hat.
    #[arg(long, default_value_t = 2)]
    leverage_rank: usize,

    /// Timed repetitions per sweep point; the median is reported.
    #[arg(long, default_value_t = 5)]
    repeats: usize,

    /// Seed for synthetic input.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Also report the interpolation error bound for every point.
    #[arg(long)]
    bound: bool,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn build_config(args: &Args) -> cur_deim::Result<ExperimentConfig> {
    let input = match (&args.input, &args.synthetic) {
        (Some(path), _) => {
            let format = match &args.format {
                Some(f) => f.parse()?,
                None => MatrixFormat::from_path(path),
            };
            InputSource::File {
                path: path.clone(),
                format,
            }
        }
        (None, Some(spec)) => InputSource::Synthetic(parse_synthetic(spec, args.seed)?),
        (None, None) => unreachable!("clap enforces one input"),
    };
    let methods = args
        .methods
        .split(',')
        .map(|m| m.trim().parse::<Method>())
        .collect::<cur_deim::Result<Vec<_>>>()?;
    Ok(ExperimentConfig {
        input,
        preprocess: args.preprocess.parse::<Preprocess>()?,
        methods,
        ranks: args.ranks.as_deref().map(str::parse::<RankSweep>).transpose()?,
        svd_rank_rule: args.svd_rank_rule.parse::<SvdRankRule>()?,
        leverage_rank: args.leverage_rank,
        repeats: args.repeats,
        seed: args.seed,
        bound: args.bound,
    })
}

fn run(args: &Args) -> cur_deim::Result<()> {
    let cfg = build_config(args)?;
    let report = run_experiment(&cfg)?;
    for d in &report.diagnostics {
        eprintln!("warning: {} at k_hat={}: {}", d.method, d.k_hat, d.message);
    }
    emit_csv(&report.rows, &args.out)?;
    println!("wrote {} rows to {}", report.rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
