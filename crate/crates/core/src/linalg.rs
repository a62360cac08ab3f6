//! Dense kernels shared by the selection methods: SVD, greedy column-pivoted
//! QR, small square solves, least squares and extreme singular values.

use nalgebra::SVD;

use crate::{DenseMatrix, Error, Result};

/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Leading singular triplets `u·diag(sigma)·vᵀ`, sorted by non-increasing
/// `sigma`. Each left singular vector has its largest-magnitude entry made
/// nonnegative (the matching right vector is flipped with it).
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub sigma: Vec<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// The leading `k` triplets. Panics if `k > self.rank()`.
    pub fn truncate(&self, k: usize) -> TruncatedSvd {
        assert!(k <= self.rank(), "cannot truncate rank {} SVD to {k}", self.rank());
        TruncatedSvd {
            u: self.u.columns(0, k).into_owned(),
            v: self.v.columns(0, k).into_owned(),
            sigma: self.sigma[..k].to_vec(),
        }
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (mut col, s) in us.column_iter_mut().zip(&self.sigma) {
            col *= *s;
        }
        us * self.v.transpose()
    }
}

fn svd_of(a: &DenseMatrix, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(a.clone(), vectors, vectors, f64::EPSILON, 0).ok_or(Error::NoConvergence {
        rows: a.nrows(),
        cols: a.ncols(),
    })
}

/// Thin SVD with all `min(m, n)` triplets.
pub fn thin_svd(a: &DenseMatrix) -> Result<TruncatedSvd> {
    let svd = svd_of(a, true)?;
    let u_all = svd.u.expect("u requested");
    let vt_all = svd.v_t.expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });

    let r = order.len();
    let mut u = DenseMatrix::zeros(a.nrows(), r);
    let mut v = DenseMatrix::zeros(a.ncols(), r);
    let mut sigma = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        let ucol = u_all.column(src);
        let mut pivot = 0;
        for i in 1..ucol.len() {
            if ucol[i].abs() > ucol[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if ucol[pivot] < 0.0 { -1.0 } else { 1.0 };
        u.set_column(dst, &(ucol * sign));
        v.set_column(dst, &(vt_all.row(src).transpose() * sign));
        sigma.push(svd.singular_values[src].max(0.0));
    }
    Ok(TruncatedSvd { u, v, sigma })
}

pub fn truncated_svd(a: &DenseMatrix, k: usize) -> Result<TruncatedSvd> {
    let max_k = a.nrows().min(a.ncols());
    if k == 0 || k > max_k {
        return Err(Error::invalid(format!(
            "SVD rank {k} outside 1..={max_k} for a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(thin_svd(a)?.truncate(k))
}

/// All singular values in non-increasing order.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let mut s: Vec<f64> = svd_of(a, false)?.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    // LAPACK-style implicit QR on a finite matrix does not fail in practice;
    // fall back to the Frobenius norm, an upper bound, if it ever does.
    singular_values(a)
        .map(|s| s.first().copied().unwrap_or(0.0))
        .unwrap_or_else(|_| a.norm())
}

/// Smallest of the `min(m, n)` singular values; zero for rank-deficient input.
pub fn sigma_min(a: &DenseMatrix) -> f64 {
    singular_values(a)
        .ok()
        .and_then(|s| s.last().copied())
        .unwrap_or(0.0)
}

/// Greedy column selection from Businger–Golub pivoted QR.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    pub pivot_order: Vec<usize>,
    /// `|R(t, t)|` for each pivot step `t`.
    pub r_diag: Vec<f64>,
}

/// Runs `k` steps of Householder QR with column pivoting on `b`. At each step
/// the remaining column with the largest residual 2-norm is chosen (ties go
/// to the lowest original column index) and the others are orthogonalized
/// against it. Residual norms are recomputed from the updated trailing block
/// rather than downdated.
pub fn pivoted_qr_select(b: &DenseMatrix, k: usize) -> Result<PivotedQr> {
    let (rows, cols) = b.shape();
    if k == 0 || k > cols {
        return Err(Error::invalid(format!("pivot count {k} outside 1..={cols}")));
    }
    let mut w = b.clone();
    let mut taken = vec![false; cols];
    let mut pivot_order = Vec::with_capacity(k);
    let mut r_diag = Vec::with_capacity(k);

    for t in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..cols).filter(|&c| !taken[c]) {
            let norm = if t < rows { w.column(c).rows(t, rows - t).norm() } else { 0.0 };
            if best.is_none_or(|(_, n)| norm > n) {
                best = Some((c, norm));
            }
        }
        let (piv, norm) = best.expect("k <= cols leaves a candidate");
        taken[piv] = true;
        pivot_order.push(piv);
        r_diag.push(norm);

        if t + 1 >= rows || norm == 0.0 {
            continue;
        }
        // Householder reflector mapping w[t.., piv] onto a multiple of e_t.
        let mut v = w.column(piv).rows(t, rows - t).into_owned();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in (0..cols).filter(|&c| !taken[c]) {
            let mut col = w.column_mut(c);
            let mut col = col.rows_mut(t, rows - t);
            let proj = 2.0 * v.dot(&col) / vnorm2;
            col.axpy(-proj, &v, 1.0);
        }
        w.column_mut(piv).rows_mut(t, rows - t).fill(0.0);
        w[(t, piv)] = alpha;
    }
    Ok(PivotedQr {
        pivot_order,
        r_diag,
    })
}

fn norm1(a: &DenseMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a·x = b` for square `a` by LU with partial pivoting. Fails when the
/// 1-norm condition number of `a` exceeds [`SINGULAR_CONDITION`].
pub fn solve_small(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let k = a.nrows();
    if a.ncols() != k || b.nrows() != k {
        return Err(Error::invalid(format!(
            "solve_small shapes {}x{} and {}x{} are incompatible",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let lu = a.clone().lu();
    let singular = |condition| Error::Singular {
        context: format!("LU solve of {k}x{k} system"),
        condition,
    };
    let inv = lu.try_inverse().ok_or_else(|| singular(f64::INFINITY))?;
    let condition = norm1(a) * norm1(&inv);
    if !(condition <= SINGULAR_CONDITION) {
        return Err(singular(condition));
    }
    lu.solve(b).ok_or_else(|| singular(f64::INFINITY))
}

/// `argmin_x ‖a·x − b‖_F` through Householder QR of `a`.
pub fn least_squares(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, k) = a.shape();
    if m < k || k == 0 || b.nrows() != m {
        return Err(Error::invalid(format!(
            "least squares needs a tall coefficient matrix, got {m}x{k} with rhs {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let sv = singular_values(&r)?;
    let (hi, lo) = (sv[0], sv[k - 1]);
    if hi == 0.0 || lo * SINGULAR_CONDITION < hi {
        return Err(Error::RankDeficient(format!(
            "least-squares coefficient matrix ({m}x{k}, condition {:e})",
            hi / lo
        )));
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let top = qtb.rows(0, k).into_owned();
    r.solve_upper_triangular(&top)
        .ok_or_else(|| Error::RankDeficient("least-squares triangular factor".into()))
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use nalgebra::dmatrix;

    fn orth_err(q: &DenseMatrix) -> f64 {
        (q.transpose() * q - DenseMatrix::identity(q.ncols(), q.ncols())).norm()
    }

    #[test]
    fn svd_of_diagonal() {
        let a = DenseMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        let svd = truncated_svd(&a, 2).unwrap();
        assert!((svd.sigma[0] - 3.0).abs() < 1e-14 && (svd.sigma[1] - 2.0).abs() < 1e-14);
        let axes = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        assert!((svd.u.abs() - &axes).amax() < 1e-14);
        assert!((svd.v.abs() - &axes).amax() < 1e-14);
        // sign convention
        assert!(svd.u[(0, 0)] > 0.0 && svd.u[(1, 1)] > 0.0);

        let id = truncated_svd(&DenseMatrix::identity(3, 3), 3).unwrap();
        assert!(id.sigma.iter().all(|s| (s - 1.0).abs() < 1e-14));
    }

    #[test]
    fn svd_rank_out_of_range() {
        let a = gaussian(4, 3, 1);
        assert!(truncated_svd(&a, 0).is_err());
        assert!(truncated_svd(&a, 4).is_err());
    }

    #[test]
    fn svd_recovers_exact_rank() {
        let a = crate::matrix_io::synthesize(&crate::matrix_io::SyntheticSpec {
            rows: 50,
            cols: 40,
            true_rank: 5,
            noise_level: 0.0,
            seed: 3,
        })
        .unwrap();
        let svd = truncated_svd(&a, 5).unwrap();
        assert!((&a - svd.reconstruct()).norm() <= 1e-8 * svd.sigma[0]);
    }

    #[test]
    fn svd_properties_on_random_inputs() {
        for (seed, (m, n)) in [(3usize, 7usize), (9, 4), (12, 12), (30, 5), (5, 30)]
            .into_iter()
            .enumerate()
        {
            let a = gaussian(m, n, seed as u64);
            let full = singular_values(&a).unwrap();
            for k in 1..=m.min(n) {
                let svd = truncated_svd(&a, k).unwrap();
                assert!(orth_err(&svd.u) <= 1e-10 && orth_err(&svd.v) <= 1e-10);
                assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1] && w[1] >= 0.0));
                let tail = full.get(k).copied().unwrap_or(0.0);
                let resid = spectral_norm(&(&a - svd.reconstruct()));
                assert!(resid <= tail + 1e-8 * full[0], "k={k}: {resid} vs {tail}");
            }
        }
    }

    /// Reference greedy pivoting: at each step project every remaining column
    /// onto the orthogonal complement of the chosen columns from scratch.
    fn brute_force_pivots(b: &DenseMatrix, k: usize) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::new();
        for _ in 0..k {
            let basis = if chosen.is_empty() {
                None
            } else {
                Some(b.select_columns(&chosen).qr().q())
            };
            let mut best = (usize::MAX, -1.0);
            for c in 0..b.ncols() {
                if chosen.contains(&c) {
                    continue;
                }
                let col = b.column(c).into_owned();
                let resid = match &basis {
                    Some(q) => &col - q * (q.transpose() * &col),
                    None => col,
                };
                let n = resid.norm();
                if n > best.1 + 1e-12 {
                    best = (c, n);
                }
            }
            chosen.push(best.0);
        }
        chosen
    }

    #[test]
    fn pivoted_qr_examples() {
        let b = dmatrix![0.0, 1.0, 0.0, 0.0; 0.0, 0.0, 0.0, 2.0];
        let qr = pivoted_qr_select(&b, 2).unwrap();
        assert_eq!(qr.pivot_order, vec![3, 1]);
        assert_eq!(qr.r_diag, vec![2.0, 1.0]);

        let qr = pivoted_qr_select(&DenseMatrix::identity(3, 3), 3).unwrap();
        assert_eq!(qr.pivot_order, vec![0, 1, 2]);

        assert!(pivoted_qr_select(&b, 0).is_err());
        assert!(pivoted_qr_select(&b, 5).is_err());
    }

    #[test]
    fn pivoted_qr_matches_brute_force() {
        for seed in 0..20 {
            let b = gaussian(3, 6, 100 + seed);
            assert_eq!(
                pivoted_qr_select(&b, 3).unwrap().pivot_order,
                brute_force_pivots(&b, 3)
            );
            let b = gaussian(6, 9, 200 + seed);
            let full = pivoted_qr_select(&b, 9).unwrap();
            assert_eq!(full.pivot_order[..6], brute_force_pivots(&b, 6)[..]);
            let mut perm = full.pivot_order.clone();
            perm.sort_unstable();
            assert_eq!(perm, (0..9).collect::<Vec<_>>());
            assert!(full.r_diag.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn solve_small_examples() {
        let x = solve_small(&DenseMatrix::identity(2, 2), &dmatrix![5.0; 6.0]).unwrap();
        assert_eq!(x, dmatrix![5.0; 6.0]);
        let x = solve_small(&dmatrix![2.0, 0.0; 0.0, 4.0], &DenseMatrix::identity(2, 2)).unwrap();
        assert_eq!(x, dmatrix![0.5, 0.0; 0.0, 0.25]);
        let err = solve_small(&dmatrix![1.0, 1.0; 1.0, 1.0], &dmatrix![1.0; 2.0]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err}");
        let nearly = dmatrix![1.0, 1.0; 1.0, 1.0 + 1e-16];
        assert!(solve_small(&nearly, &dmatrix![1.0; 2.0]).is_err());
    }

    #[test]
    fn solve_small_residual() {
        for seed in 0..10 {
            let a = gaussian(8, 8, seed) + DenseMatrix::identity(8, 8) * 4.0;
            let b = gaussian(8, 3, 50 + seed);
            let x = solve_small(&a, &b).unwrap();
            assert!((&a * &x - &b).norm() <= 1e-10 * a.norm() * x.norm());
        }
    }

    #[test]
    fn least_squares_examples() {
        let a = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let x = least_squares(&a, &dmatrix![1.0; 2.0; 3.0]).unwrap();
        assert!((x - dmatrix![1.0; 2.0]).amax() < 1e-15);
        let b = dmatrix![1.5, -2.0; 0.25, 7.0];
        let x = least_squares(&DenseMatrix::identity(2, 2), &b).unwrap();
        assert!((x - b).amax() < 1e-15);

        let deficient = dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0];
        assert!(matches!(
            least_squares(&deficient, &dmatrix![1.0; 1.0; 1.0]),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn least_squares_normal_equations_residual() {
        for seed in 0..20 {
            let a = gaussian(6, 3, seed);
            let b = gaussian(6, 2, 1000 + seed);
            let x = least_squares(&a, &b).unwrap();
            let normal = a.transpose() * (&a * &x - &b);
            assert!(normal.amax() <= 1e-9);
            assert!(normal.norm() <= 1e-9 * a.norm() * b.norm());
        }
    }

    #[test]
    fn spectral_norm_and_sigma_min() {
        let d = DenseMatrix::from_diagonal(&nalgebra::dvector![3.0, 2.0, 1.0]);
        assert!((spectral_norm(&d) - 3.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 2)), 0.0);
        assert!((sigma_min(&DenseMatrix::identity(3, 3)) - 1.0).abs() < 1e-14);
        let d = DenseMatrix::from_diagonal(&nalgebra::dvector![5.0, 1e-3]);
        assert!((sigma_min(&d) - 1e-3).abs() <= 1e-3 * 1e-8);
        let q = orthonormal(10, 4, 5);
        assert!((sigma_min(&q) - 1.0).abs() < 1e-8);
        assert!((spectral_norm(&q) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_full_svd_and_transpose() {
        for seed in 0..10 {
            let a = gaussian(20, 15, seed);
            let full = a.clone().svd(false, false).singular_values.max();
            let s = spectral_norm(&a);
            assert!((s - full).abs() <= 1e-8 * full);
            assert!((s - spectral_norm(&a.transpose())).abs() <= 1e-10 * s);
        }
    }
}
