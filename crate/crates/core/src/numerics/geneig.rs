use nalgebra::{DMatrix, DVector};

use super::{rank_info, Svd};
use crate::{Error, Result, Scalar};

/// Generalized eigenvector for a zero eigenvalue of index two.
#[derive(Debug, Clone)]
pub struct GeneralizedEigvec<T: Scalar> {
    /// Unit vector with `A q` parallel to the kernel vector.
    pub q: DVector<T>,
    /// `||A q0 - p||` for the unnormalized minimum-norm solution `q0`.
    pub residual: T,
}

/// Minimum-norm least-squares solution of `A q = p` where `p` spans the
/// one-dimensional kernel of `A`.
///
/// A residual above `lsq_tol·||p||` means `p ∉ im A`: the zero eigenvalue
/// is simple and there is no index-two structure.
pub fn generalized_eigvec<T: Scalar>(
    a: &DMatrix<T>,
    p: &DVector<T>,
    rank_tol: Option<T>,
    lsq_tol: T,
) -> Result<GeneralizedEigvec<T>> {
    if !a.is_square() || a.nrows() != p.len() {
        return Err(Error::Dimension(format!(
            "matrix {}x{} with vector of length {}",
            a.nrows(),
            a.ncols(),
            p.len()
        )));
    }
    let info = rank_info(a, rank_tol);
    if info.corank != 1 {
        return Err(Error::CorankMismatch { found: info.corank });
    }
    let q0 = Svd::new(a).solve(p, info.tol_used);
    let residual = (a * &q0 - p).norm();
    let threshold = lsq_tol * p.norm();
    if residual > threshold || q0.norm().is_zero() {
        return Err(Error::NoIndexTwo {
            residual: residual.as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    Ok(GeneralizedEigvec {
        q: q0.normalize(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(n: usize, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, x)
    }

    #[test]
    fn jordan_block() {
        let g = generalized_eigvec(
            &m(2, &[0.0, 1.0, 0.0, 0.0]),
            &DVector::from_vec(vec![1.0, 0.0]),
            None,
            1e-8,
        )
        .unwrap();
        assert!((g.q - DVector::from_vec(vec![0.0, 1.0])).norm() < 1e-14);
    }

    #[test]
    fn simple_zero_has_no_solution() {
        let r = generalized_eigvec(
            &m(2, &[0.0, 0.0, 0.0, 2.0]),
            &DVector::from_vec(vec![1.0, 0.0]),
            None,
            1e-8,
        );
        assert!(matches!(r, Err(Error::NoIndexTwo { .. })));
    }

    #[test]
    fn block_with_hyperbolic_part() {
        let a = m(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let g =
            generalized_eigvec(&a, &DVector::from_vec(vec![1.0, 0.0, 0.0]), None, 1e-8).unwrap();
        assert!((g.q - DVector::from_vec(vec![0.0, 1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn corank_must_be_one() {
        let r = generalized_eigvec(
            &DMatrix::<f64>::zeros(2, 2),
            &DVector::from_vec(vec![1.0, 0.0]),
            None,
            1e-8,
        );
        assert!(matches!(r, Err(Error::CorankMismatch { found: 2 })));
    }

    proptest! {
        #[test]
        fn similarity_transformed_jordan_blocks(
            s in proptest::collection::vec(-1.0f64..1.0, 16),
            h in proptest::collection::vec(0.2f64..3.0, 2),
            signs in proptest::collection::vec(proptest::bool::ANY, 2),
        ) {
            let mut j = DMatrix::<f64>::zeros(4, 4);
            j[(0, 1)] = 1.0;
            j[(2, 2)] = if signs[0] { h[0] } else { -h[0] };
            j[(3, 3)] = if signs[1] { h[1] } else { -h[1] };
            let p_mat = DMatrix::from_row_slice(4, 4, &s) + DMatrix::identity(4, 4) * 2.0;
            let inv = p_mat.clone().try_inverse();
            prop_assume!(inv.is_some());
            let inv = inv.unwrap();
            prop_assume!(p_mat.norm() * inv.norm() < 50.0);
            let a = &p_mat * j * inv;
            let p = p_mat.column(0).into_owned().normalize();
            let g = generalized_eigvec(&a, &p, Some(1e-9 * a.norm()), 1e-8).unwrap();
            prop_assert!(g.residual <= 1e-10 * p.norm());
            // A^2 q = 0 and A q ≠ 0
            prop_assert!((&a * &a * &g.q).norm() <= 1e-9 * a.norm() * a.norm());
            prop_assert!((&a * &g.q).norm() > 1e-6);
        }
    }
}
