//! Self-contained numerical kernel: dense complex matrices, a Hermitian
//! Jacobi eigensolver, an adaptive Dormand-Prince integrator and a
//! Levenberg-Marquardt least-squares fitter.

mod eigh;
mod lsq;
mod matrix;
mod ode;

pub use eigh::{eigh, EigenDecomposition};
pub use lsq::{fit_least_squares, solve_spd, FitOptions, FitResult};
pub use matrix::ComplexMatrix;
pub use ode::{integrate_ode, OdeOptions, Trajectory};

pub use num_complex::Complex64 as C64;
