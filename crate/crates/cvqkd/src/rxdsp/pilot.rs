//! Pilot tone extraction: bring the pilot beat to complex baseband, isolate
//! it with a delay-compensated FIR low-pass, and decimate for the phase
//! tracker.

use num_complex::Complex64;

use crate::core::SampledTrace;
use crate::error::{CvqkdError, Result};
use crate::spectral;

/// Complex baseband pilot stream after demodulation, filtering, and
/// decimation.
#[derive(Debug, Clone)]
pub struct PilotBaseband {
    pub samples: Vec<Complex64>,
    /// Rate of `samples` (trace rate divided by the decimation).
    pub rate_hz: f64,
    pub decimation: usize,
}

impl PilotBaseband {
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Tone amplitude assuming the in-band noise is small against the tone.
    pub fn amplitude_estimate(&self) -> f64 {
        self.mean_power().sqrt()
    }
}

fn lowpass_taps(fs: f64, cutoff_hz: f64) -> Vec<f64> {
    // Transition band ~ cutoff/4 sets the tap count (Hamming: ~3.3/N of fs).
    let n = ((13.2 * fs / cutoff_hz).ceil() as usize) | 1;
    spectral::windowed_sinc_lowpass(cutoff_hz, fs, n)
}

/// Demodulate the (real, whitened) detector trace at the pilot beat, apply
/// the low-pass, and keep every `decimation`-th sample. The filter's group
/// delay is compensated, so output sample `j` sits at trace sample
/// `j * decimation`.
pub fn extract_pilot(
    trace: &SampledTrace,
    pilot_beat_hz: f64,
    quantum_beat_hz: f64,
    quantum_bandwidth_hz: f64,
    lowpass_hz: f64,
    decimation: usize,
) -> Result<PilotBaseband> {
    trace.check_nonempty("extract_pilot")?;
    let x = trace.as_real()?;
    let fs = trace.sample_rate_hz;
    if decimation == 0 {
        return Err(CvqkdError::invalid("extract_pilot: zero decimation"));
    }
    if !(lowpass_hz > 0.0 && lowpass_hz < fs / 2.0) {
        return Err(CvqkdError::invalid(format!(
            "pilot low-pass {lowpass_hz:.3e} Hz must lie inside (0, fs/2)"
        )));
    }
    if !(pilot_beat_hz > 0.0 && pilot_beat_hz < fs / 2.0) {
        return Err(CvqkdError::BandPlan(format!(
            "pilot beat {pilot_beat_hz:.3e} Hz must lie inside (0, fs/2)"
        )));
    }
    // The demodulated negative-frequency image lands at -2 f_p; it must stay
    // outside the low-pass.
    if 2.0 * pilot_beat_hz <= lowpass_hz {
        return Err(CvqkdError::BandPlan(format!(
            "pilot image at {:.3e} Hz falls inside the {lowpass_hz:.3e} Hz low-pass",
            2.0 * pilot_beat_hz
        )));
    }
    if (pilot_beat_hz - quantum_beat_hz).abs() - quantum_bandwidth_hz / 2.0 < lowpass_hz {
        return Err(CvqkdError::BandPlan(format!(
            "quantum band ({quantum_beat_hz:.3e} +- {:.3e} Hz) reaches into the pilot low-pass \
             around {pilot_beat_hz:.3e} Hz",
            quantum_bandwidth_hz / 2.0
        )));
    }

    let w = 2.0 * std::f64::consts::PI * pilot_beat_hz / fs;
    let demod: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| Complex64::from_polar(v, -w * k as f64))
        .collect();
    let taps = lowpass_taps(fs, lowpass_hz);
    let filtered = spectral::fir_filter_same(&demod, &taps);
    let samples: Vec<Complex64> = filtered.iter().step_by(decimation).cloned().collect();
    Ok(PilotBaseband { samples, rate_hz: fs / decimation as f64, decimation })
}
