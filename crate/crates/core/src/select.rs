//! Row/column index selection from a block of singular vectors.
//!
//! Every selector takes an `m×k` basis with (approximately) orthonormal
//! columns and returns distinct row indices of that basis. Apply a selector
//! to the left singular vectors for the rows of `A` and to the right singular
//! vectors for its columns.
//!
//! All argmax and sort steps break ties toward the lowest index.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;
use std::time::Instant;

use crate::linalg::{pivoted_qr_select, solve_small, SINGULAR_CONDITION};
use crate::{DenseMatrix, Error, Result};

/// Accepted deviation `‖QᵀQ − I‖_F` for an input basis.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-6;

/// Ordered list of distinct 0-based indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexList(Vec<usize>);

impl IndexList {
    /// Validates that `indices` are distinct and all below `dim`.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in &indices {
            if i >= dim {
                return Err(Error::invalid(format!("index {i} out of range for dimension {dim}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("index {i} repeated")));
            }
        }
        Ok(IndexList(indices))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for IndexList {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Deim,
    Ldeim,
    Qdeim,
    Leverage,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Deim, Method::Ldeim, Method::Qdeim, Method::Leverage];

    pub fn name(self) -> &'static str {
        match self {
            Method::Deim => "deim",
            Method::Ldeim => "ldeim",
            Method::Qdeim => "qdeim",
            Method::Leverage => "leverage",
        }
    }

    /// Selects `k_sel` rows of `basis`. DEIM requires `k_sel` to equal the
    /// number of basis columns; L-DEIM treats `k_sel` as the target rank.
    pub fn select(self, basis: &DenseMatrix, k_sel: usize) -> Result<Selection> {
        match self {
            Method::Deim => {
                if k_sel != basis.ncols() {
                    return Err(Error::invalid(format!(
                        "DEIM selects exactly as many indices as basis vectors ({}), not {k_sel}",
                        basis.ncols()
                    )));
                }
                check_orthonormal(basis)?;
                let trace = deim_trace(basis)?;
                Ok(Selection {
                    indices: IndexList(trace.indices),
                    scores: trace.pivots,
                })
            }
            Method::Ldeim => {
                check_orthonormal(basis)?;
                ldeim_scored(basis, k_sel)
            }
            Method::Qdeim => qdeim_scored(basis, k_sel),
            Method::Leverage => leverage_scored(basis, k_sel),
        }
    }

    /// [`Method::select`] with wall-clock timing of the call.
    pub fn select_timed(self, basis: &DenseMatrix, k_sel: usize) -> Result<SelectionReport> {
        let start = Instant::now();
        let sel = self.select(basis, k_sel)?;
        let selection_seconds = start.elapsed().as_secs_f64();
        Ok(SelectionReport {
            method: self,
            indices: sel.indices,
            scores: sel.scores,
            selection_seconds,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`")))
    }
}

/// Indices with one score per index: the DEIM pivot `|r_j(s_j)|`, the
/// L-DEIM residual row norm, the Q-DEIM `|R(j, j)|`, or the leverage score.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub indices: IndexList,
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionReport {
    pub method: Method,
    pub indices: IndexList,
    pub scores: Vec<f64>,
    /// Time spent in the selection call alone (no SVD).
    pub selection_seconds: f64,
}

/// Fails unless `‖basisᵀ·basis − I‖_F ≤` [`ORTHONORMALITY_TOLERANCE`].
pub fn check_orthonormal(basis: &DenseMatrix) -> Result<()> {
    let k = basis.ncols();
    let gram = basis.tr_mul(basis);
    let deviation = (gram - DenseMatrix::identity(k, k)).norm();
    if deviation <= ORTHONORMALITY_TOLERANCE {
        Ok(())
    } else {
        Err(Error::NotOrthonormal {
            deviation,
            tolerance: ORTHONORMALITY_TOLERANCE,
        })
    }
}

fn argmax_abs_excluding(values: impl Iterator<Item = f64>, taken: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if taken[i] {
            continue;
        }
        let a = v.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best
}

/// Intermediate state of a DEIM sweep.
#[derive(Clone, Debug)]
pub struct DeimTrace {
    /// Selected indices in selection order.
    pub indices: Vec<usize>,
    /// Column `j` is basis column `j` minus its interpolant on the first `j`
    /// columns at the first `j` indices; column 0 is the basis column itself.
    pub residuals: DenseMatrix,
    /// `|residuals(indices[j], j)|`.
    pub pivots: Vec<f64>,
}

/// Runs DEIM on `u` without checking orthonormality, keeping the deflated
/// residual of every column.
pub fn deim_trace(u: &DenseMatrix) -> Result<DeimTrace> {
    let (m, k) = u.shape();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("DEIM needs 1 <= k <= m, got a {m}x{k} basis")));
    }
    let mut taken = vec![false; m];
    let mut indices = Vec::with_capacity(k);
    let mut pivots = Vec::with_capacity(k);
    let mut residuals = DenseMatrix::zeros(m, k);

    for j in 0..k {
        let mut r = u.column(j).into_owned();
        if j > 0 {
            let interp_rows = u.select_rows(&indices);
            let lhs = interp_rows.columns(0, j).into_owned();
            let rhs = interp_rows.columns(j, 1).into_owned();
            let coeffs = solve_small(&lhs, &rhs).map_err(|e| match e {
                Error::Singular { condition, .. } => Error::Singular {
                    context: format!("DEIM step {j} (interpolation matrix at {indices:?})"),
                    condition,
                },
                other => other,
            })?;
            r.gemm(-1.0, &u.columns(0, j), &coeffs, 1.0);
        }
        let (s, pivot) = argmax_abs_excluding(r.iter().copied(), &taken).expect("k <= m");
        let scale = u.column(j).amax();
        if !(pivot * SINGULAR_CONDITION > scale) {
            return Err(Error::Singular {
                context: format!("DEIM step {j} (residual vanished; column depends on earlier ones)"),
                condition: scale / pivot,
            });
        }
        taken[s] = true;
        indices.push(s);
        pivots.push(pivot);
        residuals.set_column(j, &r.column(0));
    }
    Ok(DeimTrace {
        indices,
        residuals,
        pivots,
    })
}

/// Greedy DEIM selection of `k` indices from an `m×k` orthonormal basis.
pub fn deim_select(u: &DenseMatrix) -> Result<IndexList> {
    check_orthonormal(u)?;
    deim_select_unchecked(u)
}

/// [`deim_select`] without the orthonormality check. Selection only needs
/// linearly independent columns; scaling a column does not change the result.
pub fn deim_select_unchecked(u: &DenseMatrix) -> Result<IndexList> {
    Ok(IndexList(deim_trace(u)?.indices))
}

fn ldeim_scored(u: &DenseMatrix, k_hat: usize) -> Result<Selection> {
    let (m, k) = u.shape();
    if k_hat < k || k_hat > m {
        return Err(Error::invalid(format!(
            "L-DEIM target rank {k_hat} outside {k}..={m}"
        )));
    }
    let trace = deim_trace(u)?;
    let row_norms: Vec<f64> = trace.residuals.row_iter().map(|r| r.norm()).collect();

    let mut taken = vec![false; m];
    for &i in &trace.indices {
        taken[i] = true;
    }
    let mut rest: Vec<usize> = (0..m).filter(|&i| !taken[i]).collect();
    // Stable sort keeps ascending index order among equal norms, which also
    // orders the zero-norm tail by index.
    rest.sort_by(|&a, &b| row_norms[b].total_cmp(&row_norms[a]));

    let mut indices = trace.indices;
    indices.extend_from_slice(&rest[..k_hat - k]);
    let scores = indices.iter().map(|&i| row_norms[i]).collect();
    Ok(Selection {
        indices: IndexList(indices),
        scores,
    })
}

/// L-DEIM: DEIM on the `k` basis columns, then the `k_hat − k` remaining
/// rows with the largest residual row norms.
pub fn ldeim_select(u: &DenseMatrix, k_hat: usize) -> Result<IndexList> {
    check_orthonormal(u)?;
    ldeim_select_unchecked(u, k_hat)
}

pub fn ldeim_select_unchecked(u: &DenseMatrix, k_hat: usize) -> Result<IndexList> {
    Ok(ldeim_scored(u, k_hat)?.indices)
}

/// L-DEIM applied to both singular-vector blocks: returns `(rows, cols)`.
pub fn ldeim_select_pair(
    u: &DenseMatrix,
    v: &DenseMatrix,
    k_hat: usize,
) -> Result<(IndexList, IndexList)> {
    Ok((ldeim_select(u, k_hat)?, ldeim_select(v, k_hat)?))
}

fn qdeim_scored(basis: &DenseMatrix, k_sel: usize) -> Result<Selection> {
    check_orthonormal(basis)?;
    let qr = pivoted_qr_select(&basis.transpose(), k_sel)?;
    Ok(Selection {
        indices: IndexList(qr.pivot_order),
        scores: qr.r_diag,
    })
}

/// Q-DEIM: pivot columns of `basisᵀ` under greedy column-pivoted QR.
pub fn qdeim_select(basis: &DenseMatrix, k_sel: usize) -> Result<IndexList> {
    Ok(qdeim_scored(basis, k_sel)?.indices)
}

/// Squared row norms of `v`.
pub fn leverage_scores(v: &DenseMatrix) -> Vec<f64> {
    v.row_iter().map(|r| r.norm_squared()).collect()
}

fn leverage_scored(v: &DenseMatrix, k_sel: usize) -> Result<Selection> {
    let n = v.nrows();
    if k_sel == 0 || k_sel > n {
        return Err(Error::invalid(format!("leverage selection of {k_sel} outside 1..={n}")));
    }
    check_orthonormal(v)?;
    let scores = leverage_scores(v);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k_sel);
    let picked = order.iter().map(|&i| scores[i]).collect();
    Ok(Selection {
        indices: IndexList(order),
        scores: picked,
    })
}

/// Indices of the `k_sel` largest leverage scores, largest first.
pub fn leverage_select(v: &DenseMatrix, k_sel: usize) -> Result<IndexList> {
    Ok(leverage_scored(v, k_sel)?.indices)
}
