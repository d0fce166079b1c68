//! Solvers for ill-conditioned linear systems arising from convolution-type
//! integral equations.
//!
//! The operators module discretizes the problem family (Toeplitz and
//! block-Toeplitz systems with a truncated Gaussian kernel); classic
//! smoother-based and Krylov solvers, circulant preconditioning, a small
//! neural-operator stack trained from scratch, the hybrid
//! smoother-plus-corrector iteration, and spectral diagnostics build on it.

pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod hybrid;
pub(crate) mod la;
pub mod classic;
pub mod neural;
pub mod operators;
pub mod precond;

pub use error::{Result, SolverError};
