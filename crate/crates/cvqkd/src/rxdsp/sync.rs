//! Frame synchronization: locate the disclosed reference block inside a
//! recovered symbol stream by cross-correlation, and report the constant
//! phase offset at the lock point.

use num_complex::Complex64;

use crate::error::{CvqkdError, Result};
use crate::spectral;

pub const PSR_THRESHOLD: f64 = 3.0;
pub const MIN_REFERENCE: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct SyncResult {
    /// Index in the received stream where the reference block starts.
    pub offset: usize,
    /// Constant phase of the received block relative to the reference.
    pub peak_phase: f64,
    /// Peak magnitude over RMS sidelobe magnitude.
    pub psr: f64,
}

/// Cross-correlate `received` against `reference` and lock to the magnitude
/// peak. Errors when the peak does not dominate the sidelobes, which is what
/// an absent or desynchronized reference looks like.
pub fn synchronize(received: &[Complex64], reference: &[Complex64]) -> Result<SyncResult> {
    if reference.len() < MIN_REFERENCE {
        return Err(CvqkdError::invalid(format!(
            "synchronize: reference of {} symbols, need at least {MIN_REFERENCE}",
            reference.len()
        )));
    }
    if received.len() < reference.len() {
        return Err(CvqkdError::invalid(format!(
            "synchronize: received stream of {} symbols shorter than the {}-symbol reference",
            received.len(),
            reference.len()
        )));
    }
    let corr = cross_correlate(received, reference);
    let n_lags = received.len() - reference.len() + 1;

    let mut peak_idx = 0usize;
    let mut peak_mag = -1.0f64;
    for (i, c) in corr.iter().take(n_lags).enumerate() {
        let m = c.norm_sqr();
        if m > peak_mag {
            peak_mag = m;
            peak_idx = i;
        }
    }
    let peak_mag = peak_mag.sqrt();

    let mut side_sum = 0.0f64;
    let mut side_count = 0usize;
    for (i, c) in corr.iter().take(n_lags).enumerate() {
        if i + 1 >= peak_idx && i <= peak_idx + 1 {
            continue;
        }
        side_sum += c.norm_sqr();
        side_count += 1;
    }
    let psr = if side_count == 0 {
        f64::INFINITY
    } else {
        peak_mag / (side_sum / side_count as f64).sqrt()
    };
    if psr < PSR_THRESHOLD {
        return Err(CvqkdError::SyncFailure { psr, threshold: PSR_THRESHOLD });
    }
    Ok(SyncResult { offset: peak_idx, peak_phase: corr[peak_idx].arg(), psr })
}

/// corr[k] = sum_j conj(reference[j]) * received[k + j], via FFT.
fn cross_correlate(received: &[Complex64], reference: &[Complex64]) -> Vec<Complex64> {
    let n = received.len();
    let nfft = (n + reference.len()).next_power_of_two();
    let mut rx = vec![Complex64::default(); nfft];
    rx[..n].copy_from_slice(received);
    let mut rf = vec![Complex64::default(); nfft];
    for (i, &v) in reference.iter().enumerate() {
        rf[i] = v;
    }
    spectral::fft_in_place(&mut rx);
    spectral::fft_in_place(&mut rf);
    for (a, b) in rx.iter_mut().zip(rf.iter()) {
        *a *= b.conj();
    }
    spectral::ifft_in_place(&mut rx);
    rx.truncate(n);
    rx
}

/// Quadratic fit through three points around a correlation peak; returns the
/// sub-sample offset in (-0.5, 0.5).
pub fn parabolic_refinement(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < 1e-300 {
        return 0.0;
    }
    let d = 0.5 * (left - right) / denom;
    d.clamp(-0.5, 0.5)
}
