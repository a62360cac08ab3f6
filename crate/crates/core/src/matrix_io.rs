//! Matrix loading, synthetic generation and the preprocessing recipes used by
//! the benchmark protocol.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{DenseMatrix, Error, Result};

/// Upper bound on the number of stored entries for a dense load (8 GiB of f64).
const MAX_DENSE_ENTRIES: usize = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarket,
    Csv,
}

impl MatrixFormat {
    /// Guesses the format from a file extension, defaulting to Matrix Market.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::MatrixMarket,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtx" | "matrix-market" => Ok(MatrixFormat::MatrixMarket),
            "csv" => Ok(MatrixFormat::Csv),
            other => Err(Error::invalid(format!("unknown matrix format `{other}`"))),
        }
    }
}

/// One preprocessing recipe. Recipes are never chained implicitly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preprocess {
    #[default]
    None,
    /// Scale every nonzero row to unit 2-norm; zero rows are left alone.
    RowUnitNorm,
    /// Subtract each row's mean from that row.
    RowCenter,
    /// Subtract each column's mean from that column.
    ColCenter,
}

impl FromStr for Preprocess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Preprocess::None),
            "row-unit" | "row-unit-norm" => Ok(Preprocess::RowUnitNorm),
            "row-center" => Ok(Preprocess::RowCenter),
            "col-center" => Ok(Preprocess::ColCenter),
            other => Err(Error::invalid(format!("unknown preprocessing `{other}`"))),
        }
    }
}

/// Parameters of a seeded low-rank-plus-noise test matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub true_rank: usize,
    pub noise_level: f64,
    pub seed: u64,
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    match format {
        MatrixFormat::MatrixMarket => read_matrix_market(reader),
        MatrixFormat::Csv => read_csv(reader),
    }
}

pub fn save_matrix(path: impl AsRef<Path>, a: &DenseMatrix, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    match format {
        MatrixFormat::MatrixMarket => write_matrix_market(&mut w, a),
        MatrixFormat::Csv => write_csv(&mut w, a),
    }
    .and_then(|_| w.flush())
    .map_err(io_err)
}

#[derive(Clone, Copy, PartialEq)]
enum MmLayout {
    Coordinate,
    Array,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn checked_shape(rows: usize, cols: usize) -> Result<()> {
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_DENSE_ENTRIES => Ok(()),
        _ => Err(Error::DimensionOverflow { rows, cols }),
    }
}

/// Reads a Matrix Market file in `coordinate real general` or
/// `array real general` layout. Coordinate files are densified, summing
/// duplicate entries.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DenseMatrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lineno, header) = match lines.next() {
        Some((n, l)) => (n, l.map_err(|e| parse_err(n, e.to_string()))?),
        None => return Err(parse_err(1, "empty file")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(lineno, "missing `%%MatrixMarket` banner"));
    }
    if tokens[1] != "matrix" {
        return Err(Error::UnsupportedFormat(header));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => MmLayout::Coordinate,
        "array" => MmLayout::Array,
        _ => return Err(Error::UnsupportedFormat(header)),
    };
    if tokens[3] != "real" || tokens[4] != "general" {
        return Err(Error::UnsupportedFormat(header));
    }

    let mut data = lines.filter(|(_, l)| match l {
        Ok(s) => {
            let t = s.trim();
            !t.is_empty() && !t.starts_with('%')
        }
        Err(_) => true,
    });
    let mut next_fields = |what: &str| -> Result<(usize, Vec<String>)> {
        match data.next() {
            Some((n, Ok(s))) => Ok((n, s.split_whitespace().map(String::from).collect())),
            Some((n, Err(e))) => Err(parse_err(n, e.to_string())),
            None => Err(parse_err(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (size_line, size) = next_fields("size line")?;
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(size_line, format!("bad count `{s}`")))
    };
    let expected_fields = if layout == MmLayout::Coordinate { 3 } else { 2 };
    if size.len() != expected_fields {
        return Err(parse_err(size_line, "malformed size line"));
    }
    let rows = parse_count(&size[0])?;
    let cols = parse_count(&size[1])?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(size_line, "matrix must have at least one row and column"));
    }
    checked_shape(rows, cols)?;

    let parse_value = |line: usize, s: &str| {
        s.parse::<f64>()
            .map_err(|_| parse_err(line, format!("bad value `{s}`")))
    };

    let mut a = DenseMatrix::zeros(rows, cols);
    match layout {
        MmLayout::Coordinate => {
            let nnz = parse_count(&size[2])?;
            for _ in 0..nnz {
                let (n, f) = next_fields("coordinate entry")?;
                if f.len() != 3 {
                    return Err(parse_err(n, "expected `row col value`"));
                }
                let i: usize = f[0].parse().map_err(|_| parse_err(n, "bad row index"))?;
                let j: usize = f[1].parse().map_err(|_| parse_err(n, "bad column index"))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(n, format!("index ({i}, {j}) out of range")));
                }
                a[(i - 1, j - 1)] += parse_value(n, &f[2])?;
            }
        }
        MmLayout::Array => {
            // column-major
            for j in 0..cols {
                for i in 0..rows {
                    let (n, f) = next_fields("array entry")?;
                    if f.len() != 1 {
                        return Err(parse_err(n, "expected a single value"));
                    }
                    a[(i, j)] = parse_value(n, &f[0])?;
                }
            }
        }
    }
    if let Some((n, _)) = data.next() {
        return Err(parse_err(n, "trailing data after last entry"));
    }
    check_finite(&a)?;
    Ok(a)
}

pub fn write_matrix_market<W: Write>(w: &mut W, a: &DenseMatrix) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for v in a.iter() {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}

/// Reads a headerless, comma-separated file of reals. Every row must have the
/// same number of fields.
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if rows == 0 {
            cols = record.len();
        }
        for field in record.iter() {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad value `{field}`")))?,
            );
        }
        rows += 1;
    }
    if rows == 0 || cols == 0 {
        return Err(parse_err(1, "empty csv"));
    }
    checked_shape(rows, cols)?;
    let a = DenseMatrix::from_row_slice(rows, cols, &values);
    check_finite(&a)?;
    Ok(a)
}

pub fn write_csv<W: Write>(w: &mut W, a: &DenseMatrix) -> std::io::Result<()> {
    for row in a.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn check_finite(a: &DenseMatrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn preprocess(a: &DenseMatrix, kind: Preprocess) -> DenseMatrix {
    let mut out = a.clone();
    match kind {
        Preprocess::None => {}
        Preprocess::RowUnitNorm => {
            for mut row in out.row_iter_mut() {
                let norm = row.norm();
                if norm > 0.0 {
                    row /= norm;
                }
            }
        }
        Preprocess::RowCenter => {
            for mut row in out.row_iter_mut() {
                let mean = row.mean();
                row.add_scalar_mut(-mean);
            }
        }
        Preprocess::ColCenter => {
            for mut col in out.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
        }
    }
    out
}

/// Returns `X·Yᵀ + noise_level·N` where `X`, `Y` and `N` hold independent
/// standard-normal draws from a ChaCha8 stream seeded with `spec.seed`.
/// `X` is drawn first, then `Y`, then `N`, each in column-major order.
pub fn synthesize(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    let SyntheticSpec {
        rows,
        cols,
        true_rank,
        noise_level,
        seed,
    } = *spec;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("synthetic matrix needs at least one row and column"));
    }
    if true_rank > rows.min(cols) {
        return Err(Error::invalid(format!(
            "true rank {true_rank} exceeds min({rows}, {cols})"
        )));
    }
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::invalid(format!("noise level {noise_level} must be finite and >= 0")));
    }
    checked_shape(rows, cols)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = DenseMatrix::from_fn(rows, true_rank, |_, _| draw());
    let y = DenseMatrix::from_fn(cols, true_rank, |_, _| draw());
    let mut a = &x * y.transpose();
    if noise_level > 0.0 {
        let noise = DenseMatrix::from_fn(rows, cols, |_, _| draw());
        a += noise * noise_level;
    }
    Ok(a)
}
