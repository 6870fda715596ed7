//! Numerical laboratory for the canonical Hamiltonian formalism of a scalar
//! field with polynomial self-interaction.
//!
//! The crate has three layers:
//!
//! * [`gfcalc`] and [`averaging`]: scalar generalized-function calculus at
//!   representative level (mollifiers, smoothed Heaviside experiments,
//!   infinitesimal checks) and association of oscillating generalized numbers
//!   by averaging over the regularization parameter.
//! * [`fock`] and [`field`]: a truncated bosonic Fock space over a periodic
//!   momentum grid, ladder operators, the regularized free field and its
//!   conjugate momentum.
//! * [`dynamics`] and [`scattering`]: Hamiltonian assembly, interacting field,
//!   S-matrix, the identity checks of the calculation chain, Dyson series and
//!   transition amplitudes.

// `!(x > 0.0)` style guards are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod fock;
pub mod gfcalc;
pub mod linalg;
pub mod quad;
pub mod scattering;

pub use error::{Error, Result};
pub use num_complex::Complex64;
