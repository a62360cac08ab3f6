//! CUR factor assembly, relative error and the interpolation error bound.

use crate::linalg::{least_squares, sigma_min, spectral_norm, TruncatedSvd, SINGULAR_CONDITION};
use crate::select::IndexList;
use crate::{DenseMatrix, Error, Result};

/// `A ≈ c·m_mid·r` with `c` the columns of `A` at `col_idx` and `r` the rows
/// of `A` at `row_idx`.
#[derive(Clone, Debug)]
pub struct CurFactors {
    pub c: DenseMatrix,
    pub m_mid: DenseMatrix,
    pub r: DenseMatrix,
    pub col_idx: IndexList,
    pub row_idx: IndexList,
}

impl CurFactors {
    pub fn rank(&self) -> usize {
        self.col_idx.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        &self.c * &self.m_mid * &self.r
    }
}

fn with_side(e: Error, side: &str) -> Error {
    match e {
        Error::RankDeficient(what) => Error::RankDeficient(format!("{side} ({what})")),
        other => other,
    }
}

/// Extracts `C` and `R` and computes the middle matrix
/// `M = C⁺·A·R⁺ = (CᵀC)⁻¹CᵀA·Rᵀ(RRᵀ)⁻¹` by two least-squares solves.
pub fn build_cur(a: &DenseMatrix, col_idx: &IndexList, row_idx: &IndexList) -> Result<CurFactors> {
    let (m, n) = a.shape();
    if col_idx.len() != row_idx.len() || col_idx.is_empty() {
        return Err(Error::invalid(format!(
            "CUR needs equal, nonzero numbers of columns and rows, got {} and {}",
            col_idx.len(),
            row_idx.len()
        )));
    }
    let col_idx = IndexList::new(col_idx.to_vec(), n)?;
    let row_idx = IndexList::new(row_idx.to_vec(), m)?;

    let c = a.select_columns(col_idx.iter());
    let r = a.select_rows(row_idx.iter());
    // Y = C⁺A, then Mᵀ = (Rᵀ)⁺Yᵀ.
    let y = least_squares(&c, a).map_err(|e| with_side(e, "C"))?;
    let m_mid = least_squares(&r.transpose(), &y.transpose())
        .map_err(|e| with_side(e, "R"))?
        .transpose();
    Ok(CurFactors {
        c,
        m_mid,
        r,
        col_idx,
        row_idx,
    })
}

/// `‖A − CMR‖₂ / ‖A‖₂`.
pub fn relative_error(a: &DenseMatrix, f: &CurFactors) -> Result<f64> {
    let norm_a = spectral_norm(a);
    if norm_a == 0.0 {
        return Err(Error::invalid("relative error of a zero matrix is undefined"));
    }
    if f.c.nrows() != a.nrows() || f.r.ncols() != a.ncols() {
        return Err(Error::invalid("CUR factors do not match the matrix shape"));
    }
    Ok(spectral_norm(&(a - f.reconstruct())) / norm_a)
}

/// Error-bound diagnostic for a CUR built from rank-`k` singular vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// `σ_min(v(col_idx, :))`.
    pub sigma_min_vp: f64,
    /// `σ_min(u(row_idx, :))`.
    pub sigma_min_su: f64,
    pub sigma_k_plus_1: f64,
    /// `(1/sigma_min_vp + 1/sigma_min_su)·sigma_k_plus_1`.
    pub bound_value: f64,
    /// `‖A − CMR‖₂`.
    pub observed_error: f64,
}

impl BoundReport {
    /// `observed_error / bound_value`; infinite when the bound is zero but the
    /// error is not.
    pub fn ratio(&self) -> f64 {
        if self.bound_value > 0.0 {
            self.observed_error / self.bound_value
        } else if self.observed_error == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// True when the observed error exceeds the bound by more than a
    /// relative `1e-8`. A violation is reported, never raised.
    pub fn violated(&self) -> bool {
        self.observed_error > self.bound_value * (1.0 + 1e-8)
    }
}

/// Evaluates `‖A − CMR‖₂ ≤ (σ_min⁻¹(VᵀP) + σ_min⁻¹(SᵀU))·σ_{k+1}` for the
/// factors `f` and the rank-`k` singular vectors in `svd`.
pub fn bound_diagnostic(
    a: &DenseMatrix,
    svd: &TruncatedSvd,
    f: &CurFactors,
    sigma_k_plus_1: f64,
) -> Result<BoundReport> {
    if svd.u.nrows() != a.nrows() || svd.v.nrows() != a.ncols() {
        return Err(Error::invalid("singular vectors do not match the matrix shape"));
    }
    let k = svd.rank();
    if f.rank() < k {
        return Err(Error::RankDeficient(format!(
            "SᵀU and VᵀP ({} selected indices for {k} singular vectors)",
            f.rank()
        )));
    }
    let vp = svd.v.select_rows(f.col_idx.iter());
    let su = svd.u.select_rows(f.row_idx.iter());
    let sigma_min_vp = sigma_min(&vp);
    let sigma_min_su = sigma_min(&su);
    for (name, s) in [("VᵀP", sigma_min_vp), ("SᵀU", sigma_min_su)] {
        if !(s * SINGULAR_CONDITION > 1.0) {
            return Err(Error::RankDeficient(format!("{name} (sigma_min = {s:e})")));
        }
    }
    let bound_value = (1.0 / sigma_min_vp + 1.0 / sigma_min_su) * sigma_k_plus_1;
    let observed_error = spectral_norm(&(a - f.reconstruct()));
    Ok(BoundReport {
        sigma_min_vp,
        sigma_min_su,
        sigma_k_plus_1,
        bound_value,
        observed_error,
    })
}
