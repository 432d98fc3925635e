use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::{stack, Dae, DaeJacobian};
use crate::numerics::fd_jacobian;
use crate::{Error, Result, Scalar};

type Eval<T> = Box<dyn Fn(&DVector<T>, &DVector<T>) -> Result<DVector<T>> + Send + Sync>;
type Jac<T> = Box<dyn Fn(&DVector<T>, &DVector<T>) -> Result<DaeJacobian<T>> + Send + Sync>;

/// A DAE given by closures. Without an explicit Jacobian, partials are
/// taken by central differences.
pub struct FnDae<T: Scalar> {
    r: usize,
    p: usize,
    h: Eval<T>,
    g: Eval<T>,
    jacobian: Option<Jac<T>>,
}

impl<T: Scalar> fmt::Debug for FnDae<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnDae")
            .field("r", &self.r)
            .field("p", &self.p)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl<T: Scalar> FnDae<T> {
    pub fn new<H, G>(r: usize, p: usize, h: H, g: G) -> Self
    where
        H: Fn(&DVector<T>, &DVector<T>) -> Result<DVector<T>> + Send + Sync + 'static,
        G: Fn(&DVector<T>, &DVector<T>) -> Result<DVector<T>> + Send + Sync + 'static,
    {
        Self {
            r,
            p,
            h: Box::new(h),
            g: Box::new(g),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<T>, &DVector<T>) -> Result<DaeJacobian<T>> + Send + Sync + 'static,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }
}

impl<T: Scalar> Dae<T> for FnDae<T> {
    fn dims(&self) -> (usize, usize) {
        (self.r, self.p)
    }

    fn h(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        let out = (self.h)(y, z)?;
        if out.len() != self.r {
            return Err(Error::Dimension(format!(
                "h returned {} components, expected {}",
                out.len(),
                self.r
            )));
        }
        Ok(out)
    }

    fn g(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
        let out = (self.g)(y, z)?;
        if out.len() != self.p {
            return Err(Error::Dimension(format!(
                "g returned {} components, expected {}",
                out.len(),
                self.p
            )));
        }
        Ok(out)
    }

    fn jacobian(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DaeJacobian<T>> {
        if let Some(j) = &self.jacobian {
            return j(y, z);
        }
        let (r, p) = (self.r, self.p);
        let x = stack(y, z);
        let full = fd_jacobian(|x| self.full_residual(x), &x)?;
        let block = |r0, c0, nr, nc| full.view((r0, c0), (nr, nc)).into_owned();
        Ok(DaeJacobian {
            hy: block(0, 0, r, r),
            hz: block(0, r, r, p),
            gy: block(r, 0, p, r),
            gz: block(r, r, p, p),
        })
    }
}

/// `y1' = z`, `y2' = y2 y1`, `0 = z - y2`: eliminating `z` gives the normal
/// form `x' = y, y' = xy` with a line of equilibria along `y1`.
pub fn normal_form_dae<T: Scalar>() -> FnDae<T> {
    FnDae::new(
        2,
        1,
        |y, z| Ok(DVector::from_vec(vec![z[0], y[1] * y[0]])),
        |y, z| Ok(DVector::from_vec(vec![z[0] - y[1]])),
    )
    .with_jacobian(|y, _z| {
        Ok(DaeJacobian {
            hy: DMatrix::from_row_slice(2, 2, &[T::zero(), T::zero(), y[1], y[0]]),
            hz: DMatrix::from_row_slice(2, 1, &[T::one(), T::zero()]),
            gy: DMatrix::from_row_slice(1, 2, &[T::zero(), -T::one()]),
            gz: DMatrix::from_element(1, 1, T::one()),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::schur_reduce;
    use crate::numerics::Tolerances;

    #[test]
    fn normal_form_reduces_to_normal_form() {
        let dae = normal_form_dae::<f64>();
        let y = DVector::from_vec(vec![0.4, 0.0]);
        let jac = dae.jacobian(&y, &DVector::zeros(1)).unwrap();
        let red = schur_reduce(&jac, &Tolerances::default()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.4]);
        assert!((red.f_prime - expected).norm() < 1e-15);
    }

    #[test]
    fn difference_jacobian_fallback() {
        let dae = FnDae::<f64>::new(
            2,
            1,
            |y, z| Ok(DVector::from_vec(vec![z[0], y[1] * y[0]])),
            |y, z| Ok(DVector::from_vec(vec![z[0] - y[1]])),
        );
        let y = DVector::from_vec(vec![0.3, 0.2]);
        let z = DVector::from_vec(vec![0.1]);
        let fd = dae.jacobian(&y, &z).unwrap().full();
        let exact = normal_form_dae::<f64>().jacobian(&y, &z).unwrap().full();
        assert!((fd - exact).norm() < 1e-9);
    }

    #[test]
    fn wrong_output_length_is_reported() {
        let dae = FnDae::<f64>::new(
            1,
            1,
            |_, _| Ok(DVector::zeros(2)),
            |_, _| Ok(DVector::zeros(1)),
        );
        assert!(matches!(
            dae.h(&DVector::zeros(1), &DVector::zeros(1)),
            Err(Error::Dimension(_))
        ));
    }
}
