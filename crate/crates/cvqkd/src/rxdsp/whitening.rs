//! Receiver noise whitening. The detector's Butterworth response colors
//! every noise source identically; flattening the spectrum before any
//! band-selective processing keeps the SNU calibration and the pilot noise
//! floor consistent across bands.

use num_complex::Complex64;

use crate::core::SampledTrace;
use crate::error::{CvqkdError, Result};
use crate::spectral;

/// Zero-phase gain curve on a coarse spectral grid, designed from a vacuum
/// trace and interpolated onto whatever trace it is applied to.
#[derive(Debug, Clone)]
pub struct WhiteningFilter {
    /// Gains over the design FFT bins (two-sided, natural bin order).
    pub gains: Vec<f64>,
    pub sample_rate_hz: f64,
    pub regularization: f64,
}

pub const DESIGN_SEGMENT: usize = 8192;
pub const PSD_SMOOTH_BINS: usize = 201;
const MIN_DESIGN_SAMPLES: usize = 1 << 16;

/// Design the whitening gains from a vacuum trace: Welch PSD, a circular
/// moving-average smoothing (raw Welch ripple in the gain acts as a random
/// comb filter and biases downstream symbol estimates), then
/// `1/sqrt(max(PSD, regularization * max PSD))`.
pub fn design_whitening(vacuum: &SampledTrace, regularization: f64) -> Result<WhiteningFilter> {
    design_whitening_with(vacuum, regularization, DESIGN_SEGMENT, PSD_SMOOTH_BINS)
}

pub fn design_whitening_with(
    vacuum: &SampledTrace,
    regularization: f64,
    segment: usize,
    smooth_bins: usize,
) -> Result<WhiteningFilter> {
    let x = vacuum.as_real()?;
    if x.len() < MIN_DESIGN_SAMPLES {
        return Err(CvqkdError::invalid(format!(
            "whitening design needs at least {MIN_DESIGN_SAMPLES} vacuum samples, got {}",
            x.len()
        )));
    }
    if !(regularization > 0.0 && regularization < 1.0) {
        return Err(CvqkdError::invalid(format!(
            "whitening regularization must lie in (0, 1), got {regularization}"
        )));
    }
    let psd = spectral::welch_psd_real(x, segment);
    let psd = spectral::smooth_circular(&psd, smooth_bins);
    let max = psd.iter().cloned().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(CvqkdError::Calibration(
            "vacuum trace has no spectral content to whiten against".to_string(),
        ));
    }
    let floor = regularization * max;
    let gains: Vec<f64> = psd.iter().map(|&p| 1.0 / p.max(floor).sqrt()).collect();
    Ok(WhiteningFilter { gains, sample_rate_hz: vacuum.sample_rate_hz, regularization })
}

impl WhiteningFilter {
    /// Gain at a signed frequency, geometrically interpolated on the design
    /// grid. Geometric (log-domain) interpolation makes gain products
    /// commute with interpolation, so cascading two whitening passes is
    /// exactly one pass of the squared gains.
    pub fn gain_at(&self, f_hz: f64) -> f64 {
        let nseg = self.gains.len() as f64;
        let mut u = f_hz / self.sample_rate_hz * nseg;
        u = u.rem_euclid(nseg);
        let i0 = u.floor() as usize % self.gains.len();
        let i1 = (i0 + 1) % self.gains.len();
        let w = u - u.floor();
        if w == 0.0 {
            return self.gains[i0];
        }
        let g0 = self.gains[i0];
        let g1 = self.gains[i1];
        g0 * (g1 / g0).powf(w)
    }
}

/// Apply the whitening gains zero-phase. Real traces stay real (the gain
/// curve of a real design is even in frequency).
pub fn apply_whitening(filter: &WhiteningFilter, trace: &SampledTrace) -> Result<SampledTrace> {
    trace.check_nonempty("apply_whitening")?;
    if (trace.sample_rate_hz - filter.sample_rate_hz).abs() > 1e-6 * filter.sample_rate_hz {
        return Err(CvqkdError::invalid(format!(
            "whitening designed at {:.3e} Hz applied to a {:.3e} Hz trace",
            filter.sample_rate_hz, trace.sample_rate_hz
        )));
    }
    match &trace.data {
        crate::core::TraceData::Real(x) => {
            let y = spectral::fft_filter_real(x, trace.sample_rate_hz, |f| filter.gain_at(f));
            Ok(SampledTrace::real(y, trace.sample_rate_hz, trace.kind))
        }
        crate::core::TraceData::Complex(x) => {
            let y = spectral::fft_filter_complex(x, trace.sample_rate_hz, |f| {
                Complex64::new(filter.gain_at(f), 0.0)
            });
            Ok(SampledTrace::complex(y, trace.sample_rate_hz, trace.kind))
        }
    }
}
