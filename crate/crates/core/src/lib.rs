//! Collective dynamics of two-level emitters coupled to a waveguide whose
//! modes are filled with broadband squeezed vacuum.
//!
//! The crate covers the whole chain from waveguide dispersion to observables:
//!
//! * [`geometry`]: TE10 dispersion, cutoffs and the guided decay rate.
//! * [`coefficients`]: squeezing moments and collective rate matrices.
//! * [`liouvillian`]: dense superoperator assembly, coherent drive and the
//!   Lindblad-form positivity check.
//! * [`dynamics`]: density matrices, time evolution and dephasing analysis.
//! * [`steady`]: steady states, concurrence and the entanglement phase map.
//! * [`spectrum`]: resonance fluorescence through quantum regression.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod liouvillian;
pub mod operators;
pub mod spectrum;
pub mod steady;

pub use error::{Error, ErrorKind, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;
