use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde_json::json;

use super::core::{line_condition, spectral_checks, transversality, transversality_condition};
use super::{vec_f64, Condition, Outcome, TbwpReport};
use crate::numerics::{fd_jacobian, Tolerances};
use crate::{Error, Result, Scalar};

/// An explicit vector field `x' = f(x)` with its Jacobian.
pub trait VectorField<T: Scalar> {
    fn dim(&self) -> usize;
    fn eval(&self, x: &DVector<T>) -> Result<DVector<T>>;
    fn jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>>;
}

type FieldFn<T> = Box<dyn Fn(&DVector<T>) -> Result<DVector<T>> + Send + Sync>;
type JacFn<T> = Box<dyn Fn(&DVector<T>) -> Result<DMatrix<T>> + Send + Sync>;

/// A vector field given by closures; the Jacobian defaults to central differences.
pub struct FnField<T: Scalar> {
    dim: usize,
    f: FieldFn<T>,
    jacobian: Option<JacFn<T>>,
}

impl<T: Scalar> fmt::Debug for FnField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> FnField<T> {
    pub fn new(
        dim: usize,
        f: impl Fn(&DVector<T>) -> Result<DVector<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f: Box::new(f),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        j: impl Fn(&DVector<T>) -> Result<DMatrix<T>> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Box::new(j));
        self
    }
}

impl<T: Scalar> VectorField<T> for FnField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &DVector<T>) -> Result<DVector<T>> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        match &self.jacobian {
            Some(j) => j(x),
            None => fd_jacobian(|x| (self.f)(x), x),
        }
    }
}

pub(crate) fn unit_direction<T: Scalar>(d: &DVector<T>, dim: usize) -> Result<DVector<T>> {
    if d.len() != dim {
        return Err(Error::Dimension(format!(
            "line direction has {} entries, expected {dim}",
            d.len()
        )));
    }
    let n = d.norm();
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::Evaluation(
            "line direction must be a nonzero finite vector".into(),
        ));
    }
    Ok(d / n)
}

/// Checks the hypotheses for a transcritical bifurcation without parameters
/// of `x' = f(x)` at the equilibrium `x_star` on a line of equilibria with
/// direction `line_direction`.
///
/// Condition ids: `ode.equilibrium-line`, `ode.double-zero`,
/// `ode.geometric-simple`, `ode.index-two`, `ode.normal-hyperbolicity`,
/// `ode.transversality`. The line may be oblique: all tests are stated in
/// terms of the kernel and image of `f'`, which is invariant under the
/// orthogonal change of coordinates taking the line to the first axis.
pub fn check_ode_tbwp<T, F>(
    field: &F,
    x_star: &DVector<T>,
    line_direction: &DVector<T>,
    tol: &Tolerances,
) -> Result<TbwpReport>
where
    T: Scalar,
    F: VectorField<T> + ?Sized,
{
    let n = field.dim();
    if x_star.len() != n {
        return Err(Error::Dimension(format!(
            "point has {} entries, expected {n}",
            x_star.len()
        )));
    }
    let d = unit_direction(line_direction, n)?;
    let mut report = TbwpReport::new("ode", tol);
    report.line_direction = vec_f64(d.iter().copied());
    report.line_direction_source = "caller".into();

    report.push(line_condition(
        "ode.equilibrium-line",
        |x| field.eval(x),
        x_star,
        &d,
        tol,
    )?);

    let a = field.jacobian(x_star)?;
    let checks = spectral_checks("ode", &a, Some(&d), tol)?;
    report.conditions.extend(checks.conditions);
    report.spectra.push(checks.summary);

    let cond = match (&checks.kernel, &checks.generalized) {
        (Some(p), Some(q)) => {
            let t = transversality(|x| field.eval(x), |x| field.jacobian(x), x_star, p, q, tol)?;
            transversality_condition("ode.transversality", &t, tol)
        }
        _ => Condition::new(
            "ode.transversality",
            Outcome::Inconclusive,
            "not evaluated: no kernel vector with a generalized eigenvector",
        )
        .with_certificate(json!(null)),
    };
    report.push(cond);
    report.conclude();
    Ok(report)
}
