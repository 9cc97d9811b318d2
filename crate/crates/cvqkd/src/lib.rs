//! End-to-end desk-scale model of a continuous-variable QKD link with a
//! local local oscillator: Gaussian modulation and pulse shaping at the
//! transmitter, a lossy noisy channel with carrier offset and laser phase
//! noise, RF-heterodyne detection, digital phase tracking and symbol
//! recovery, noise-budget estimation with a trusted receiver, and
//! multidimensional reverse reconciliation.
//!
//! Conventions: shot-noise units with vacuum variance 1 per quadrature and
//! modulation variance quoted per quadrature.

pub mod channel;
pub mod core;
pub mod error;
pub mod estimation;
pub mod pipeline;
pub mod reconciliation;
pub mod rxdsp;
pub mod spectral;
pub mod txdsp;

pub use error::{CvqkdError, Result};
