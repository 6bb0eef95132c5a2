//! High-order perturbation of envelopes (HOPE) for time-harmonic vector
//! Maxwell scattering by biperiodic inhomogeneous slabs.
//!
//! The permittivity inside `|z| < h` is `eps_bar * (1 - rho * E(x, y, z))`.
//! The field is expanded in powers of `delta = rho - rho0`, each order is a
//! constant-coefficient boundary-value problem with transparent boundary
//! conditions, and the series is summed by Taylor or Pade.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod capacity;
pub mod engine;
pub mod envelope;
pub mod error;
pub mod field;
pub mod gmres;
pub mod io;
pub mod norms;
pub mod oracle;
pub mod pade;
pub mod solver;
pub mod wave;
pub mod zgrid;

pub use error::{Face, HopeError, Result};
