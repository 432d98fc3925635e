use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::rank_info;
use crate::{Result, Scalar};

/// Step for first-derivative central differences: `eps^(1/3) (1 + ||x||)`.
pub fn first_derivative_step<T: Scalar>(x: &DVector<T>) -> T {
    T::machine_epsilon().powf(T::lit(1.0 / 3.0)) * (T::one() + x.norm())
}

/// Step for the mixed second-derivative stencil: `eps^(1/4) (1 + ||x||)`.
pub fn second_derivative_step<T: Scalar>(x: &DVector<T>) -> T {
    T::machine_epsilon().powf(T::lit(0.25)) * (T::one() + x.norm())
}

/// Central-difference approximation of the bilinear form `F''(x) p q`.
pub fn second_directional_derivative<T, F>(
    f: F,
    x: &DVector<T>,
    p: &DVector<T>,
    q: &DVector<T>,
) -> Result<DVector<T>>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    let h = second_derivative_step(x);
    let hp = p * h;
    let hq = q * h;
    let pp = f(&(x + &hp + &hq))?;
    let pm = f(&(x + &hp - &hq))?;
    let mp = f(&(x - &hp + &hq))?;
    let mm = f(&(x - &hp - &hq))?;
    Ok((pp - pm - mp + mm) / (T::lit(4.0) * h * h))
}

/// Directional derivative of `det J` with its conditioning scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetDerivative<T> {
    /// `(det J)'(x) q` by central differences.
    pub value: T,
    /// Product of the `n - 1` largest singular values of `J(x)`.
    pub scale: T,
    pub step: T,
}

impl<T: Scalar> DetDerivative<T> {
    /// `value / scale`, or the raw value when the scale vanishes.
    pub fn normalized(&self) -> T {
        if self.scale > T::zero() {
            self.value / self.scale
        } else {
            self.value
        }
    }
}

pub fn det_jacobian_derivative<T, J>(
    j: J,
    x: &DVector<T>,
    q: &DVector<T>,
) -> Result<DetDerivative<T>>
where
    T: Scalar,
    J: Fn(&DVector<T>) -> Result<DMatrix<T>>,
{
    let h = first_derivative_step(x);
    let plus = j(&(x + q * h))?.determinant();
    let minus = j(&(x - q * h))?.determinant();
    let at = j(x)?;
    let n = at.nrows();
    let scale = rank_info(&at, None).leading_product(n.saturating_sub(1));
    Ok(DetDerivative {
        value: (plus - minus) / (T::lit(2.0) * h),
        scale,
        step: h,
    })
}

/// Jacobian by central differences, column by column.
pub fn fd_jacobian<T, F>(f: F, x: &DVector<T>) -> Result<DMatrix<T>>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    let h = first_derivative_step(x);
    let mut columns = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        columns.push((f(&xp)? - f(&xm)?) / (T::lit(2.0) * h));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, x.len(), |i, k| columns[k][i]))
}
