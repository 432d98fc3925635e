use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Real polynomial stored low degree first. The zero polynomial is `[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T> Polynomial<T> {
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Index of the highest stored coefficient (trailing zeros count).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

impl<T: Scalar> Polynomial<T> {
    /// Returns `None` for an empty coefficient list.
    pub fn new(coeffs: Vec<T>) -> Option<Self> {
        if coeffs.is_empty() {
            None
        } else {
            Some(Self { coeffs })
        }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.is_zero())
    }

    pub fn eval(&self, x: T) -> T {
        eval_poly(self, x)
    }

    pub fn derivative(&self) -> Self {
        deriv_poly(self)
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(T::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            out.push(*c / T::from_usize_lossy(k + 1));
        }
        Self { coeffs: out }
    }
}

/// Horner evaluation.
pub fn eval_poly<T: Scalar>(p: &Polynomial<T>, x: T) -> T {
    p.coeffs.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
}

/// Formal derivative; the derivative of a constant is `[0]`.
pub fn deriv_poly<T: Scalar>(p: &Polynomial<T>) -> Polynomial<T> {
    if p.coeffs.len() == 1 {
        return Polynomial::zero();
    }
    let coeffs = p
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| *c * T::from_usize_lossy(k))
        .collect();
    Polynomial { coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> Polynomial<f64> {
        Polynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn affine_evaluation() {
        assert_eq!(eval_poly(&p(&[-1.0, 1.0]), 0.25), -0.75);
    }

    #[test]
    fn constant_rule() {
        assert_eq!(deriv_poly(&p(&[3.0])).coeffs(), &[0.0]);
    }

    #[test]
    fn memristance_from_cubic_flux() {
        // phi(q) = q^3/6 gives M(q) = q^2/2 and M'(q) = q.
        let m = p(&[0.0, 0.0, 0.5]);
        assert_eq!(eval_poly(&deriv_poly(&m), 2.0), 2.0);
        assert_eq!(m.eval(2.0), 2.0);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(Polynomial::<f64>::new(vec![]).is_none());
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let r = p(&[2.0, 0.0, 3.0]);
        let g = r.antiderivative();
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(g.derivative(), r);
    }

    #[test]
    fn single_precision() {
        let m = Polynomial::new(vec![-1.0f32, 1.0]).unwrap();
        assert_eq!(m.eval(0.25), -0.75);
    }

    // Compensated Horner (error-free transforms): accurate to about one ulp.
    fn compensated_horner(coeffs: &[f64], x: f64) -> f64 {
        let mut s = *coeffs.last().unwrap();
        let mut c = 0.0;
        for a in coeffs.iter().rev().skip(1) {
            let prod = s * x;
            let prod_err = s.mul_add(x, -prod);
            let sum = prod + a;
            let bb = sum - prod;
            let sum_err = (prod - (sum - bb)) + (a - bb);
            c = c * x + (prod_err + sum_err);
            s = sum;
        }
        s + c
    }

    proptest! {
        #[test]
        fn horner_matches_power_sum(
            coeffs in proptest::collection::vec(-10.0f64..10.0, 1..6),
            x in -3.0f64..3.0,
        ) {
            let poly = p(&coeffs);
            let magnitude: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| (c * x.powi(k as i32)).abs())
                .sum();
            let reference = compensated_horner(&coeffs, x);
            let err = (eval_poly(&poly, x) - reference).abs();
            prop_assert!(err <= 8.0 * f64::EPSILON * magnitude.max(f64::MIN_POSITIVE));
        }
    }
}
