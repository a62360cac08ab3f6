//! Rank sweeps comparing the selection methods by relative CUR error and
//! index-selection time.
//!
//! Singular vectors are computed once per run and sliced for every sweep
//! point, so the reported times cover index selection only.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::cur::{bound_diagnostic, build_cur};
use crate::linalg::{spectral_norm, thin_svd, TruncatedSvd};
use crate::matrix_io::{load_matrix, preprocess, synthesize, MatrixFormat, Preprocess, SyntheticSpec};
use crate::select::Method;
use crate::{DenseMatrix, Error, Result};

pub const CSV_HEADER: [&str; 6] = [
    "method",
    "k_hat",
    "svd_rank_used",
    "rel_error",
    "selection_seconds",
    "bound_value",
];

#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    File { path: PathBuf, format: MatrixFormat },
    Synthetic(SyntheticSpec),
}

/// Number of singular vectors handed to L-DEIM at target rank `k̂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SvdRankRule {
    /// `k = ⌈k̂/2⌉`.
    #[default]
    Half,
    Fixed(usize),
}

impl SvdRankRule {
    pub fn rank_for(self, k_hat: usize) -> usize {
        match self {
            SvdRankRule::Half => k_hat.div_ceil(2),
            SvdRankRule::Fixed(k) => k,
        }
    }
}

impl FromStr for SvdRankRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "half" {
            return Ok(SvdRankRule::Half);
        }
        match s.strip_prefix("fixed=").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(SvdRankRule::Fixed(k)),
            _ => Err(Error::invalid(format!(
                "svd rank rule `{s}` is not `half` or `fixed=<k>` with k >= 1"
            ))),
        }
    }
}

/// Target ranks `min, min+step, …, ≤ max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankSweep {
    pub min: usize,
    pub max: usize,
    pub step: usize,
}

impl RankSweep {
    /// Error sweep of the reference experiment: `k̂ = 1..=50`.
    pub const ERRORS: RankSweep = RankSweep { min: 1, max: 50, step: 1 };
    /// Timing sweep of the reference experiment: `k̂ = 2..=50` step 2.
    pub const TIMINGS: RankSweep = RankSweep { min: 2, max: 50, step: 2 };

    pub fn points(&self) -> impl Iterator<Item = usize> {
        (self.min..=self.max).step_by(self.step.max(1))
    }
}

impl FromStr for RankSweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("rank sweep `{s}` is not min:max:step"));
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match parts[..] {
            [min, max, step] if min >= 1 && min <= max && step >= 1 => Ok(RankSweep { min, max, step }),
            _ => Err(bad()),
        }
    }
}

/// Parses `RxC:rank:noise`, e.g. `500x120:20:0.05`.
pub fn parse_synthetic(s: &str, seed: u64) -> Result<SyntheticSpec> {
    let bad = || Error::invalid(format!("synthetic spec `{s}` is not RxC:rank:noise"));
    let mut parts = s.split(':');
    let (shape, rank, noise) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), Some(c), None) => (a, b, c),
        _ => return Err(bad()),
    };
    let (r, c) = shape.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok(SyntheticSpec {
        rows: r.parse().map_err(|_| bad())?,
        cols: c.parse().map_err(|_| bad())?,
        true_rank: rank.parse().map_err(|_| bad())?,
        noise_level: noise.parse().map_err(|_| bad())?,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub input: InputSource,
    pub preprocess: Preprocess,
    pub methods: Vec<Method>,
    /// `None` sweeps [`RankSweep::ERRORS`] clipped to `min(m, n)`.
    pub ranks: Option<RankSweep>,
    pub svd_rank_rule: SvdRankRule,
    pub leverage_rank: usize,
    pub repeats: usize,
    pub seed: u64,
    pub bound: bool,
}

impl ExperimentConfig {
    pub fn new(input: InputSource) -> Self {
        ExperimentConfig {
            input,
            preprocess: Preprocess::None,
            methods: Method::ALL.to_vec(),
            ranks: None,
            svd_rank_rule: SvdRankRule::Half,
            leverage_rank: 2,
            repeats: 5,
            seed: 0,
            bound: false,
        }
    }

    /// Resolves the sweep for an `m×n` matrix and checks every constraint
    /// that does not depend on the data.
    pub fn sweep_for(&self, m: usize, n: usize) -> Result<RankSweep> {
        let limit = m.min(n);
        let sweep = match self.ranks {
            Some(s) => s,
            None => RankSweep {
                max: RankSweep::ERRORS.max.min(limit),
                ..RankSweep::ERRORS
            },
        };
        if sweep.min == 0 || sweep.min > sweep.max || sweep.step == 0 {
            return Err(Error::invalid(format!("invalid rank sweep {sweep:?}")));
        }
        if sweep.max > limit {
            return Err(Error::invalid(format!(
                "rank {} exceeds min(m, n) = {limit}",
                sweep.max
            )));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        if self.leverage_rank == 0 {
            return Err(Error::invalid("leverage rank must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        if let SvdRankRule::Fixed(k) = self.svd_rank_rule {
            if self.methods.contains(&Method::Ldeim) && k > sweep.min {
                return Err(Error::invalid(format!(
                    "L-DEIM with k = {k} needs every target rank >= k, but the sweep starts at {}",
                    sweep.min
                )));
            }
        }
        Ok(sweep)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub k_hat: usize,
    pub svd_rank_used: usize,
    /// `‖A − CMR‖₂/‖A‖₂`; NaN on a diagnostic row.
    pub rel_error: f64,
    /// Median selection time over the repeats; NaN on a diagnostic row.
    pub selection_seconds: f64,
    pub bound_value: Option<f64>,
}

/// Why a sweep point produced no (or only a partial) result.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub method: Method,
    pub k_hat: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Loads or generates the input and applies the configured preprocessing.
pub fn load_input(cfg: &ExperimentConfig) -> Result<DenseMatrix> {
    let raw = match &cfg.input {
        InputSource::File { path, format } => load_matrix(path, *format)?,
        InputSource::Synthetic(spec) => synthesize(spec)?,
    };
    Ok(preprocess(&raw, cfg.preprocess))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let a = load_input(cfg)?;
    run_on_matrix(&a, cfg)
}

/// Median of a non-empty sample.
fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

struct PointResult {
    row: ResultRow,
    note: Option<String>,
}

/// Runs the sweep on an already prepared matrix.
pub fn run_on_matrix(a: &DenseMatrix, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (m, n) = a.shape();
    let sweep = cfg.sweep_for(m, n)?;
    let norm_a = spectral_norm(a);
    if norm_a == 0.0 {
        return Err(Error::invalid("input matrix is zero"));
    }
    let svd = thin_svd(a)?;

    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();

    let mut report = ExperimentReport::default();
    for &method in &methods {
        for k_hat in sweep.points() {
            let svd_rank = match method {
                Method::Deim | Method::Qdeim => k_hat,
                Method::Ldeim => cfg.svd_rank_rule.rank_for(k_hat),
                Method::Leverage => cfg.leverage_rank.min(svd.rank()),
            };
            match run_point(a, norm_a, &svd, cfg, method, k_hat, svd_rank) {
                Ok(PointResult { row, note }) => {
                    if let Some(message) = note {
                        report.diagnostics.push(Diagnostic { method, k_hat, message });
                    }
                    report.rows.push(row);
                }
                Err(e) => {
                    report.diagnostics.push(Diagnostic {
                        method,
                        k_hat,
                        message: e.to_string(),
                    });
                    report.rows.push(ResultRow {
                        method,
                        k_hat,
                        svd_rank_used: svd_rank,
                        rel_error: f64::NAN,
                        selection_seconds: f64::NAN,
                        bound_value: None,
                    });
                }
            }
        }
    }
    report
        .rows
        .sort_by(|x, y| x.method.cmp(&y.method).then(x.k_hat.cmp(&y.k_hat)));
    Ok(report)
}

fn run_point(
    a: &DenseMatrix,
    norm_a: f64,
    svd: &TruncatedSvd,
    cfg: &ExperimentConfig,
    method: Method,
    k_hat: usize,
    svd_rank: usize,
) -> Result<PointResult> {
    if svd_rank > k_hat && method == Method::Ldeim {
        return Err(Error::invalid(format!(
            "L-DEIM needs k <= k_hat, got k = {svd_rank} > {k_hat}"
        )));
    }
    let vectors = svd.truncate(svd_rank);

    let mut times = Vec::with_capacity(cfg.repeats);
    let mut picked = None;
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        let rows = method.select(&vectors.u, k_hat)?;
        let cols = method.select(&vectors.v, k_hat)?;
        times.push(start.elapsed().as_secs_f64());
        picked = Some((rows.indices, cols.indices));
    }
    let (rows, cols) = picked.expect("repeats >= 1");

    let factors = build_cur(a, &cols, &rows)?;
    let rel_error = spectral_norm(&(a - factors.reconstruct())) / norm_a;

    let mut note = None;
    let bound_value = if cfg.bound {
        let sigma_next = svd.sigma.get(svd_rank).copied().unwrap_or(0.0);
        match bound_diagnostic(a, &vectors, &factors, sigma_next) {
            Ok(rep) => {
                if rep.violated() {
                    note = Some(format!(
                        "observed error {:e} exceeds bound {:e} (ratio {:.6})",
                        rep.observed_error,
                        rep.bound_value,
                        rep.ratio()
                    ));
                }
                Some(rep.bound_value)
            }
            Err(e) => {
                note = Some(format!("bound unavailable: {e}"));
                None
            }
        }
    } else {
        None
    };

    Ok(PointResult {
        row: ResultRow {
            method,
            k_hat,
            svd_rank_used: svd_rank,
            rel_error,
            selection_seconds: median(times),
            bound_value,
        },
        note,
    })
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_results<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for row in rows {
        wtr.write_record([
            row.method.name().to_string(),
            row.k_hat.to_string(),
            row.svd_rank_used.to_string(),
            fmt_real(row.rel_error),
            fmt_real(row.selection_seconds),
            row.bound_value.map(fmt_real).unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_results(rows, BufWriter::new(file))
}

/// Parses a results file written by [`write_results`].
pub fn parse_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or_default();
        let bad = |i: usize| Error::Parse {
            line,
            message: format!("bad {} `{}`", CSV_HEADER[i], field(i)),
        };
        let real = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        rows.push(ResultRow {
            method: field(0).parse().map_err(|_| bad(0))?,
            k_hat: field(1).parse().map_err(|_| bad(1))?,
            svd_rank_used: field(2).parse().map_err(|_| bad(2))?,
            rel_error: real(3)?,
            selection_seconds: real(4)?,
            bound_value: match field(5) {
                "" => None,
                _ => Some(real(5)?),
            },
        });
    }
    Ok(rows)
}
