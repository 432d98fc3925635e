use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::Svd;
use crate::Scalar;

/// Numerical rank of a matrix with orthonormal bases of its kernel and range.
#[derive(Debug, Clone, Serialize)]
pub struct RankInfo<T: Scalar> {
    pub rank: usize,
    pub corank: usize,
    /// Descending.
    pub singular_values: Vec<T>,
    /// Columns span the numerical kernel.
    pub null_basis: DMatrix<T>,
    /// Leading left singular vectors; columns span the numerical range.
    #[serde(skip)]
    pub range_basis: DMatrix<T>,
    pub tol_used: T,
}

impl<T: Scalar> RankInfo<T> {
    pub fn sigma_max(&self) -> T {
        self.singular_values
            .first()
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Smallest singular value (zero for an empty spectrum).
    pub fn sigma_min(&self) -> T {
        self.singular_values.last().copied().unwrap_or_else(T::zero)
    }

    /// Distance of `w` from the numerical range: `||(I - U_r U_r^T) w||`.
    pub fn range_residual(&self, w: &DVector<T>) -> T {
        let proj = &self.range_basis * (self.range_basis.transpose() * w);
        (w - proj).norm()
    }

    /// `w` lies in the range when its residual is at most `tol * ||w||`.
    pub fn in_range(&self, w: &DVector<T>, tol: T) -> bool {
        self.range_residual(w) <= tol * w.norm()
    }

    /// Product of the `k` largest singular values.
    pub fn leading_product(&self, k: usize) -> T {
        self.singular_values
            .iter()
            .take(k)
            .fold(T::one(), |a, s| a * *s)
    }
}

/// Rank is the count of singular values above `tol`; the default threshold
/// is `max(rows, cols) * eps * sigma_max`.
pub fn rank_info<T: Scalar>(a: &DMatrix<T>, tol: Option<T>) -> RankInfo<T> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return RankInfo {
            rank: 0,
            corank: cols,
            singular_values: Vec::new(),
            null_basis: DMatrix::identity(cols, cols),
            range_basis: DMatrix::zeros(rows, 0),
            tol_used: tol.unwrap_or_else(T::zero),
        };
    }
    let svd = Svd::new(a);
    let sigma_max = svd.s.first().copied().unwrap_or_else(T::zero);
    let tol_used = tol
        .unwrap_or_else(|| T::from_usize_lossy(rows.max(cols)) * T::machine_epsilon() * sigma_max);
    let rank = svd.s.iter().filter(|s| **s > tol_used).count();
    let null_basis = svd.v.columns(rank, cols - rank).into_owned();
    let range_basis = svd.u.columns(0, rank).into_owned();
    let sv = svd.s;
    RankInfo {
        rank,
        corank: cols - rank,
        singular_values: sv,
        null_basis,
        range_basis,
        tol_used,
    }
}
