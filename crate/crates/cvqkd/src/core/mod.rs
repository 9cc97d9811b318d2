//! Shared physical conventions: shot-noise units, traces, frames, and the
//! deterministic stream RNG everything draws from.

mod calib;
mod link;
mod rng;
mod trace;

pub use calib::{calibrate_snu, trusted_noise_from_traces};
pub use link::LinkParams;
pub use rng::{gaussian_draw, RngStream, StreamPurpose};
pub use trace::{mean, variance, SampledTrace, SymbolFrame, TraceData, TraceKind};
