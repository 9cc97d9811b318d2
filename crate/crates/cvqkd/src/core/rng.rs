use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CvqkdError, Result};

/// What a named random stream is consumed for.
///
/// Every stochastic draw in the pipeline comes from a `(seed, frame, purpose)`
/// triple, so frames can be simulated in any order, on any number of threads,
/// with bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    TxSymbols,
    ChannelNoise,
    ChannelPhase,
    Shot,
    Electronic,
    VacuumShot,
    VacuumElectronic,
    ElectronicTrace,
    ReconciliationBits,
}

impl StreamPurpose {
    fn index(self) -> u64 {
        match self {
            StreamPurpose::TxSymbols => 0,
            StreamPurpose::ChannelNoise => 1,
            StreamPurpose::ChannelPhase => 2,
            StreamPurpose::Shot => 3,
            StreamPurpose::Electronic => 4,
            StreamPurpose::VacuumShot => 5,
            StreamPurpose::VacuumElectronic => 6,
            StreamPurpose::ElectronicTrace => 7,
            StreamPurpose::ReconciliationBits => 8,
        }
    }
}

/// Counter-based random stream: ChaCha12 keyed by the run seed, with the
/// stream counter splitting frames and purposes.
pub struct RngStream {
    rng: ChaCha12Rng,
}

const PURPOSE_SPACE: u64 = 16;

impl RngStream {
    pub fn new(seed: u64, frame_id: u64, purpose: StreamPurpose) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(frame_id.wrapping_mul(PURPOSE_SPACE) + purpose.index());
        RngStream { rng }
    }

    /// Stream not tied to a frame (run-level draws).
    pub fn run_level(seed: u64, purpose: StreamPurpose) -> Self {
        Self::new(seed, u64::MAX / PURPOSE_SPACE, purpose)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 53 random bits into the mantissa.
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self, mean: f64, variance: f64) -> Result<f64> {
        if !(variance >= 0.0) {
            return Err(CvqkdError::invalid(format!(
                "gaussian variance must be nonnegative, got {variance}"
            )));
        }
        let normal = Normal::new(mean, variance.sqrt())
            .map_err(|e| CvqkdError::invalid(format!("gaussian parameters: {e}")))?;
        Ok(normal.sample(&mut self.rng))
    }
}

/// Draw `n` i.i.d. zero-mean Gaussians of the given variance.
pub fn gaussian_draw(rng: &mut RngStream, n: usize, variance: f64) -> Result<Vec<f64>> {
    if !(variance >= 0.0) {
        return Err(CvqkdError::invalid(format!(
            "gaussian variance must be nonnegative, got {variance}"
        )));
    }
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|e| CvqkdError::invalid(format!("gaussian parameters: {e}")))?;
    Ok((0..n).map(|_| normal.sample(&mut rng.rng)).collect())
}
