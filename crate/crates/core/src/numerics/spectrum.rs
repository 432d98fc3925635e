use nalgebra::{DMatrix, Schur};
use num_complex::Complex;
use serde::Serialize;

use super::{singular_values, Band, Tolerances};
use crate::{Error, Result, Scalar};

/// Eigenvalues of a real matrix partitioned by modulus and sign of real part.
///
/// Indices split into the zero cluster (`|λ| <= zero_tol·||A||`) and, among
/// the rest, stable / unstable / critical by the sign of `Re λ` against
/// `realpart_tol·||A||`. `ambiguous` lists eigenvalues inside a margin band.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum<T: Scalar> {
    pub eigenvalues: Vec<Complex<T>>,
    pub zero_cluster: Vec<usize>,
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
    pub critical: Vec<usize>,
    pub ambiguous: Vec<usize>,
    /// Spectral norm used to scale the thresholds.
    pub scale: T,
    pub zero_threshold: T,
    pub realpart_threshold: T,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues outside the zero cluster.
    pub fn nonzero(&self) -> impl Iterator<Item = &Complex<T>> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.zero_cluster.contains(k))
            .map(|(_, l)| l)
    }
}

pub fn eigenvalues<T: Scalar>(a: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), T::machine_epsilon(), 1000 * a.nrows())
        .ok_or(Error::EigenFailure)?;
    let mut ev: Vec<Complex<T>> = schur.complex_eigenvalues().iter().copied().collect();
    // deterministic order: by real part, then imaginary part
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(ev)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm<T: Scalar>(a: &DMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    singular_values(a).first().copied().unwrap_or_else(T::zero)
}

pub fn spectrum<T: Scalar>(a: &DMatrix<T>, tol: &Tolerances) -> Result<Spectrum<T>> {
    let eigenvalues = eigenvalues(a)?;
    let scale = spectral_norm(a);
    let zero_threshold = T::lit(tol.zero_tol) * scale;
    let realpart_threshold = T::lit(tol.realpart_tol) * scale;
    let mut s = Spectrum {
        eigenvalues,
        zero_cluster: Vec::new(),
        stable: Vec::new(),
        unstable: Vec::new(),
        critical: Vec::new(),
        ambiguous: Vec::new(),
        scale,
        zero_threshold,
        realpart_threshold,
    };
    let z = zero_threshold.as_f64();
    let r = realpart_threshold.as_f64();
    for (k, l) in s.eigenvalues.iter().enumerate() {
        let modulus = l.re.hypot(l.im).as_f64();
        let zero_band = tol.band(modulus, z);
        if zero_band == Band::Marginal {
            s.ambiguous.push(k);
        }
        if modulus <= z {
            s.zero_cluster.push(k);
            continue;
        }
        let re = l.re.as_f64();
        if tol.band(re.abs(), r) == Band::Marginal && zero_band != Band::Marginal {
            s.ambiguous.push(k);
        }
        if re < -r {
            s.stable.push(k);
        } else if re > r {
            s.unstable.push(k);
        } else {
            s.critical.push(k);
        }
    }
    Ok(s)
}
