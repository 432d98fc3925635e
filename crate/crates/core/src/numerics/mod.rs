//! Dense numerical kernels: rank and kernels by SVD, eigenvalue partitions,
//! finite-difference derivatives, Newton and RK4.

mod diff;
mod geneig;
mod newton;
mod ode;
mod rank;
mod spectrum;
mod svd;
mod tol;

pub use diff::{
    det_jacobian_derivative, fd_jacobian, first_derivative_step, second_derivative_step,
    second_directional_derivative, DetDerivative,
};
pub use geneig::{generalized_eigvec, GeneralizedEigvec};
pub use newton::{newton_solve, NewtonResult};
pub use ode::{integrate_rk4, Trajectory};
pub use rank::{rank_info, RankInfo};
pub use spectrum::{eigenvalues, spectral_norm, spectrum, Spectrum};
pub use svd::{singular_values, Svd};
pub use tol::{Band, Tolerances};
