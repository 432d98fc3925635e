//! Semiexplicit DAEs `y' = h(y, z)`, `0 = g(y, z)`: the trait, equilibria
//! with one pinned coordinate, Schur reduction `f' = A - B D^-1 C` and the
//! spectrum of the associated pencil.

mod circuit;
mod func;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use circuit::{assemble_dae, assemble_dae_with, CircuitDae, Devices, Layout, NetlistDevices};
pub use func::{normal_form_dae, FnDae};

use crate::numerics::{newton_solve, rank_info, spectrum, Spectrum, Svd, Tolerances};
use crate::{Error, Result, Scalar};

/// First partial derivatives of `h` and `g`.
#[derive(Debug, Clone)]
pub struct DaeJacobian<T: Scalar> {
    pub hy: DMatrix<T>,
    pub hz: DMatrix<T>,
    pub gy: DMatrix<T>,
    pub gz: DMatrix<T>,
}

impl<T: Scalar> DaeJacobian<T> {
    /// `F' = [[h_y, h_z], [g_y, g_z]]`.
    pub fn full(&self) -> DMatrix<T> {
        let (r, p) = (self.hy.nrows(), self.gz.nrows());
        let mut m = DMatrix::zeros(r + p, r + p);
        m.view_mut((0, 0), (r, r)).copy_from(&self.hy);
        m.view_mut((0, r), (r, p)).copy_from(&self.hz);
        m.view_mut((r, 0), (p, r)).copy_from(&self.gy);
        m.view_mut((r, r), (p, p)).copy_from(&self.gz);
        m
    }
}

/// A semiexplicit DAE with `r` differential and `p` algebraic variables.
pub trait Dae<T: Scalar> {
    /// `(r, p)`.
    fn dims(&self) -> (usize, usize);
    fn h(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>>;
    fn g(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>>;
    fn jacobian(&self, y: &DVector<T>, z: &DVector<T>) -> Result<DaeJacobian<T>>;

    /// `F(x) = (h, g)` on the stacked vector `x = (y, z)`.
    fn full_residual(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let (y, z) = split(self, x)?;
        let h = self.h(&y, &z)?;
        let g = self.g(&y, &z)?;
        Ok(stack(&h, &g))
    }

    /// `F'(x)` on the stacked vector.
    fn full_jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        let (y, z) = split(self, x)?;
        Ok(self.jacobian(&y, &z)?.full())
    }
}

fn split<T: Scalar, D: Dae<T> + ?Sized>(
    dae: &D,
    x: &DVector<T>,
) -> Result<(DVector<T>, DVector<T>)> {
    let (r, p) = dae.dims();
    if x.len() != r + p {
        return Err(Error::Dimension(format!(
            "expected {} stacked unknowns, got {}",
            r + p,
            x.len()
        )));
    }
    Ok((x.rows(0, r).into_owned(), x.rows(r, p).into_owned()))
}

pub(crate) fn stack<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// An equilibrium `(y*, z*)` with its residual norms.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumPoint<T: Scalar> {
    pub y: DVector<T>,
    pub z: DVector<T>,
    pub residual_h: T,
    pub residual_g: T,
    pub iterations: usize,
}

impl<T: Scalar> EquilibriumPoint<T> {
    /// Wraps a known point, evaluating its residuals.
    pub fn at<D: Dae<T> + ?Sized>(dae: &D, y: DVector<T>, z: DVector<T>) -> Result<Self> {
        let residual_h = inf_norm(&dae.h(&y, &z)?);
        let residual_g = inf_norm(&dae.g(&y, &z)?);
        Ok(Self {
            y,
            z,
            residual_h,
            residual_g,
            iterations: 0,
        })
    }

    pub fn stacked(&self) -> DVector<T> {
        stack(&self.y, &self.z)
    }
}

pub(crate) fn inf_norm<T: Scalar>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |m, c| m.max(c.abs()))
}

/// Solves `h = 0, g = 0` by Newton with the `y` coordinate `pin.0` held at
/// `pin.1`. Because equilibria of interest form a line along that
/// coordinate, the remaining unknowns are generically determined; the
/// system may be overdetermined and is solved in the least-squares sense.
pub fn find_equilibrium<T, D>(
    dae: &D,
    pin: Option<(usize, T)>,
    seed: Option<&DVector<T>>,
    tol: &Tolerances,
) -> Result<EquilibriumPoint<T>>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    let (r, p) = dae.dims();
    let n = r + p;
    let mut x0 = match seed {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => {
            return Err(Error::Dimension(format!(
                "seed has {} entries, expected {n}",
                s.len()
            )))
        }
        None => DVector::zeros(n),
    };
    if let Some((k, value)) = pin {
        if k >= r {
            return Err(Error::Dimension(format!(
                "pinned index {k} outside y of length {r}"
            )));
        }
        x0[k] = value;
    }
    let free: Vec<usize> = (0..n)
        .filter(|k| pin.is_none_or(|(pk, _)| pk != *k))
        .collect();
    let embed = |u: &DVector<T>| {
        let mut x = x0.clone();
        for (slot, &k) in free.iter().enumerate() {
            x[k] = u[slot];
        }
        x
    };
    let system = |u: &DVector<T>| {
        let x = embed(u);
        let f = dae.full_residual(&x)?;
        let j = dae.full_jacobian(&x)?.select_columns(&free);
        Ok((f, j))
    };
    let guess = DVector::from_iterator(free.len(), free.iter().map(|&k| x0[k]));
    let sol = newton_solve(system, &guess, T::lit(tol.newton_tol), tol.newton_max_iter)?;
    let x = embed(&sol.x);
    let mut eq = EquilibriumPoint::at(dae, x.rows(0, r).into_owned(), x.rows(r, p).into_owned())?;
    eq.iterations = sol.iterations;
    Ok(eq)
}

/// Blocks of `F'` at a point and the reduced Jacobian `f' = A - B D^-1 C`.
#[derive(Debug, Clone)]
pub struct SchurReduction<T: Scalar> {
    pub f_prime: DMatrix<T>,
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    /// `sigma_max / sigma_min` of `D`.
    pub d_condition: T,
}

impl<T: Scalar> SchurReduction<T> {
    /// `u -> (u, -D^-1 C u)`: carries kernel vectors (and generalized
    /// kernel vectors) of the reduced Jacobian to those of `F'`.
    pub fn lift(&self, u: &DVector<T>) -> DVector<T> {
        let cu = &self.c * u;
        let z = if self.d.is_empty() {
            DVector::zeros(0)
        } else {
            -Svd::new(&self.d).solve(&cu, T::zero())
        };
        stack(u, &z)
    }
}

/// Eliminates the algebraic block. `D` is singular when its smallest
/// singular value is at most `zero_tol * sigma_max`.
pub fn schur_reduce<T: Scalar>(
    jac: &DaeJacobian<T>,
    tol: &Tolerances,
) -> Result<SchurReduction<T>> {
    let d = jac.gz.clone();
    let d_condition = if d.is_empty() {
        T::one()
    } else {
        let info = gz_rank(&d, tol);
        if info.corank > 0 {
            return Err(Error::IndexAboveOne {
                sigma_min: info.sigma_min().as_f64(),
            });
        }
        info.sigma_max() / info.sigma_min()
    };
    let f_prime = if d.is_empty() {
        jac.hy.clone()
    } else {
        let svd = Svd::new(&d);
        let mut dinv_c = DMatrix::zeros(d.ncols(), jac.gy.ncols());
        for (k, col) in jac.gy.column_iter().enumerate() {
            dinv_c.set_column(k, &svd.solve(&col.into_owned(), T::zero()));
        }
        &jac.hy - &jac.hz * dinv_c
    };
    Ok(SchurReduction {
        f_prime,
        a: jac.hy.clone(),
        b: jac.hz.clone(),
        c: jac.gy.clone(),
        d,
        d_condition,
    })
}

fn gz_rank<T: Scalar>(gz: &DMatrix<T>, tol: &Tolerances) -> crate::numerics::RankInfo<T> {
    let smax = rank_info(gz, None).sigma_max();
    rank_info(gz, Some(T::lit(tol.zero_tol) * smax))
}

/// Spectrum of the reduced Jacobian with the coranks of `F'` and `g_z`.
#[derive(Debug, Clone, Serialize)]
pub struct PencilSpectrum<T: Scalar> {
    pub spectrum: Spectrum<T>,
    pub f_prime: DMatrix<T>,
    pub full_corank: usize,
    pub gz_corank: usize,
    pub gz_condition: T,
}

pub fn pencil_spectrum<T, D>(
    dae: &D,
    eq: &EquilibriumPoint<T>,
    tol: &Tolerances,
) -> Result<PencilSpectrum<T>>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    let jac = dae.jacobian(&eq.y, &eq.z)?;
    let gz_corank = gz_rank(&jac.gz, tol).corank;
    let reduction = schur_reduce(&jac, tol)?;
    let full = jac.full();
    let full_info = rank_info(&full, None);
    let full_info = rank_info(&full, Some(T::lit(tol.zero_tol) * full_info.sigma_max()));
    let spectrum = spectrum(&reduction.f_prime, tol)?;
    Ok(PencilSpectrum {
        spectrum,
        f_prime: reduction.f_prime,
        full_corank: full_info.corank,
        gz_corank,
        gz_condition: reduction.d_condition,
    })
}

/// The reduced vector field `y' = h(y, psi(y))` where `psi` solves
/// `g(y, z) = 0` by Newton from `z_seed`. Returns `(y', z, ||g||_inf)`.
pub fn reduced_field<T, D>(
    dae: &D,
    y: &DVector<T>,
    z_seed: &DVector<T>,
    tol: &Tolerances,
) -> Result<(DVector<T>, DVector<T>, T)>
where
    T: Scalar,
    D: Dae<T> + ?Sized,
{
    let system = |z: &DVector<T>| Ok((dae.g(y, z)?, dae.jacobian(y, z)?.gz));
    let sol = newton_solve(system, z_seed, T::lit(tol.newton_tol), tol.newton_max_iter)?;
    let dy = dae.h(y, &sol.x)?;
    Ok((dy, sol.x, sol.residual))
}
