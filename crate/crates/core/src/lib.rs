//! Numerical laboratory for decay estimates of dissipative symmetric
//! hyperbolic systems with non-symmetric relaxation: Fourier symbols and
//! Green matrices, frequency-split kernel bounds, a frequency-wise energy
//! method with Lyapunov parameter search, and a pseudo-spectral solver for
//! the two-fluid plasma (Euler-Maxwell) perturbation system.

pub mod config;
pub mod decay;
pub mod energy;
pub mod error;
pub mod grid;
pub mod hyp;
pub mod linalg;
pub mod report;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
