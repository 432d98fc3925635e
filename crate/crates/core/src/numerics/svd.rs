use nalgebra::{DMatrix, DVector};

use crate::Scalar;

/// Thin singular value decomposition `A = U diag(s) V^T` by one-sided
/// Jacobi rotations.
///
/// `s` is descending with `min(rows, cols)` entries, `v` is a full
/// orthogonal `cols x cols` matrix, and `u` holds the left vectors of the
/// nonzero singular values (zero columns elsewhere).
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<T>,
    pub v: DMatrix<T>,
}

const MAX_SWEEPS: usize = 80;

impl<T: Scalar> Svd<T> {
    pub fn new(a: &DMatrix<T>) -> Self {
        let (rows, cols) = a.shape();
        // work on at least as many rows as columns so V comes out complete
        let mut w = if rows < cols {
            let mut padded = DMatrix::zeros(cols, cols);
            padded.view_mut((0, 0), (rows, cols)).copy_from(a);
            padded
        } else {
            a.clone()
        };
        let mut v = DMatrix::<T>::identity(cols, cols);
        let eps = T::machine_epsilon();
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..cols {
                for j in i + 1..cols {
                    let alpha = w.column(i).norm_squared();
                    let beta = w.column(j).norm_squared();
                    let gamma = w.column(i).dot(&w.column(j));
                    if gamma.is_zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let sign = if zeta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, i, j, c, s);
                    rotate(&mut v, i, j, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let mut order: Vec<(T, usize)> = (0..cols).map(|k| (w.column(k).norm(), k)).collect();
        order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
        let k = rows.min(cols);
        let mut u = DMatrix::zeros(rows, k);
        let mut vs = DMatrix::zeros(cols, cols);
        let mut s = Vec::with_capacity(k);
        for (slot, (sigma, col)) in order.iter().enumerate() {
            vs.set_column(slot, &v.column(*col));
            if slot < k {
                s.push(*sigma);
                if *sigma > T::zero() {
                    let uc = w.column(*col).rows(0, rows) / *sigma;
                    u.set_column(slot, &uc);
                }
            }
        }
        Svd { u, s, v: vs }
    }

    /// Minimum-norm least-squares solution ignoring singular values `<= tol`.
    pub fn solve(&self, b: &DVector<T>, tol: T) -> DVector<T> {
        let mut x = DVector::zeros(self.v.nrows());
        for (k, sigma) in self.s.iter().enumerate() {
            if *sigma > tol {
                let coef = self.u.column(k).dot(b) / *sigma;
                x += self.v.column(k) * coef;
            }
        }
        x
    }
}

fn rotate<T: Scalar>(m: &mut DMatrix<T>, i: usize, j: usize, c: T, s: T) {
    for r in 0..m.nrows() {
        let a = m[(r, i)];
        let b = m[(r, j)];
        m[(r, i)] = c * a - s * b;
        m[(r, j)] = s * a + c * b;
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<T> {
    Svd::new(a).s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_is_sorted() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert_eq!(Svd::new(&a).s, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn defective_similarity_is_reconstructed() {
        // a matrix on which a bidiagonal QR SVD loses four digits
        let s = [
            -0.21858782086489204,
            0.0,
            -0.4416280578114747,
            0.5427431920052277,
            -0.5821949998584282,
            0.9396222697640336,
            -0.49284542753644245,
            0.0,
            0.008138152172779271,
            0.31837669504050914,
            0.610341144790363,
            -0.6296092446906706,
            0.0,
            0.17818917466209183,
            0.7858557250890363,
            -0.03473304071330987,
        ];
        let mut j = DMatrix::<f64>::zeros(4, 4);
        j[(0, 1)] = 1.0;
        j[(2, 2)] = 0.771670483799508;
        j[(3, 3)] = 0.6308983120297593;
        let p = DMatrix::from_row_slice(4, 4, &s) + DMatrix::identity(4, 4) * 2.0;
        let a = &p * j * p.clone().try_inverse().unwrap();
        let d = Svd::new(&a);
        let recon =
            &d.u * DMatrix::from_diagonal(&DVector::from_vec(d.s.clone())) * d.v.transpose();
        assert!((recon - &a).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthogonality(
            rows in 1usize..7,
            cols in 1usize..7,
            seed in proptest::collection::vec(-1.0f64..1.0, 36),
        ) {
            let a = DMatrix::from_fn(rows, cols, |i, j| seed[i * 6 + j]);
            let d = Svd::new(&a);
            prop_assert_eq!(d.s.len(), rows.min(cols));
            prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
            let vtv = d.v.transpose() * &d.v;
            prop_assert!((vtv - DMatrix::identity(cols, cols)).norm() < 1e-13);
            let mut sigma = DMatrix::zeros(rows.min(cols), cols);
            for (k, s) in d.s.iter().enumerate() {
                sigma[(k, k)] = *s;
            }
            let recon = &d.u * sigma * d.v.transpose();
            prop_assert!((recon - &a).norm() < 1e-13);
        }
    }
}
