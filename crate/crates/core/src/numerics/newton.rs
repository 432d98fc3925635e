use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::Svd;
use crate::{Error, Result, Scalar};

/// Converged Newton iterate.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonResult<T: Scalar> {
    pub x: DVector<T>,
    /// Max-norm of the residual at `x`.
    pub residual: T,
    pub iterations: usize,
}

const MAX_CONDITION: f64 = 1e14;

fn inf_norm<T: Scalar>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |m, c| m.max(c.abs()))
}

/// Newton iteration with a least-squares step, so overdetermined systems
/// with full column rank are solved in the Gauss-Newton sense.
///
/// `f` returns the residual and its Jacobian at the current iterate.
pub fn newton_solve<T, F>(
    f: F,
    guess: &DVector<T>,
    tol: T,
    max_iter: usize,
) -> Result<NewtonResult<T>>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> Result<(DVector<T>, DMatrix<T>)>,
{
    let mut x = guess.clone();
    let (mut r, mut j) = f(&x)?;
    for iteration in 0..=max_iter {
        let residual = inf_norm(&r);
        if residual <= tol {
            return Ok(NewtonResult {
                x,
                residual,
                iterations: iteration,
            });
        }
        if iteration == max_iter || !residual.is_finite() {
            break;
        }
        if j.nrows() != r.len() || j.ncols() != x.len() {
            return Err(Error::Dimension(format!(
                "jacobian is {}x{} for {} residuals in {} unknowns",
                j.nrows(),
                j.ncols(),
                r.len(),
                x.len()
            )));
        }
        let svd = Svd::new(&j);
        let smax = svd.s.first().copied().unwrap_or_else(T::zero);
        let smin = svd.s.last().copied().unwrap_or_else(T::zero);
        let condition = if smin > T::zero() {
            (smax / smin).as_f64()
        } else {
            f64::INFINITY
        };
        if condition > MAX_CONDITION || j.nrows() < j.ncols() {
            return Err(Error::SingularJacobian { condition });
        }
        let step = svd.solve(&r, T::zero());
        x -= step;
        (r, j) = f(&x)?;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: inf_norm(&r).as_f64(),
    })
}
