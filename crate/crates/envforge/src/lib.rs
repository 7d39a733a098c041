//! Envelope equations for weakly nonlinear dispersive PDEs.
//!
//! A system is described by its Fourier multipliers (linear `J`, bilinear `H`,
//! optional trilinear `T`) and a weak dissipation symbol `V`. From these the
//! crate computes NLS and higher-order (A, B) envelope coefficients, integrates
//! the envelope equations spectrally, and checks them against a direct
//! pseudo-spectral simulation of the fifth-order toy PDE
//!
//! ```text
//! u_t + u_xxx + u_xxxxx + eps (u u_x + u u_xxx + u_x u_xx) = 0
//! ```
//!
//! Two systems ship built in: the toy above ([`system::toy_system`]) and
//! deep-water surface waves ([`system::deepwater_system`]).

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod direct;
pub mod envelope;
mod error;
pub mod etd;
pub mod mi;
pub mod recon;
pub mod snapshot;
pub mod spectral;
pub mod system;
pub mod water;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
