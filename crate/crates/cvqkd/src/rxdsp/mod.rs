//! Receiver DSP: whitening, pilot phase tracking, matched filtering, timing
//! and phase synchronization, and SNU normalization, turning one frame's
//! detected traces back into symbol estimates.

mod pilot;
mod sync;
mod ukf;
mod whitening;

pub use pilot::{extract_pilot, PilotBaseband};
pub use sync::{parabolic_refinement, synchronize, SyncResult, PSR_THRESHOLD};
pub use ukf::{
    interpolate_phases, naive_phase_estimate, ukf_track, unwrap_phases, PhaseEstimate, UkfConfig,
};
pub use whitening::{apply_whitening, design_whitening, design_whitening_with, WhiteningFilter};

use num_complex::Complex64;

use crate::channel::{ChannelParams, DetectorParams, TraceSet};
use crate::core::{
    calibrate_snu, SampledTrace, SymbolFrame, TraceKind,
};
use crate::error::{CvqkdError, Result};
use crate::spectral;
use crate::txdsp::{rrc_taps, TxConfig};

/// Receiver-side switches. The defaults are the live configuration; the
/// disabled variants exist for calibration benches and loopback tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxConfig {
    pub whitening_enabled: bool,
    pub whitening_regularization: f64,
    pub ukf_enabled: bool,
    /// One-sided width of the pilot isolation low-pass.
    pub pilot_lowpass_hz: f64,
    /// Skip per-frame calibration and use this SNU scale (noiseless benches
    /// have no shot noise to calibrate against).
    pub snu_nominal: Option<f64>,
}

impl Default for RxConfig {
    fn default() -> Self {
        RxConfig {
            whitening_enabled: true,
            whitening_regularization: 1e-6,
            ukf_enabled: true,
            pilot_lowpass_hz: 10e6,
            snu_nominal: None,
        }
    }
}

/// Per-frame receiver diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct RxReport {
    /// Raw detector units per SNU at the symbol level.
    pub snu_scale: f64,
    /// Trusted electronic noise measured from the electronic trace, SNU.
    pub t_hat: f64,
    /// Deviation of the locked symbol timing from nominal, in samples.
    pub sync_offset_samples: f64,
    pub sync_psr: f64,
    /// Residual phase variance reported by the tracker, rad^2 (NaN with the
    /// tracker disabled).
    pub v_est: f64,
    pub ukf_converged: bool,
    pub pilot_power: f64,
    pub pilot_noise_floor: f64,
}

/// Matched filter in the frequency domain with a brick-wall band mask: the
/// mask passes the whole RRC band (5% margin) and is what keeps pilot
/// leakage out of the symbol estimates at any pilot power.
fn matched_filter_banded(
    y: &[Complex64],
    fs: f64,
    taps: &[f64],
    mask_half_width_hz: f64,
) -> Vec<Complex64> {
    let n = y.len();
    let mut hf = vec![Complex64::default(); n];
    for (i, &v) in taps.iter().enumerate() {
        hf[i] = Complex64::new(v, 0.0);
    }
    spectral::fft_in_place(&mut hf);
    let mut buf = y.to_vec();
    spectral::fft_in_place(&mut buf);
    for (i, v) in buf.iter_mut().enumerate() {
        let f = spectral::bin_freq(i, n, fs);
        if f.abs() <= mask_half_width_hz {
            *v *= hf[i];
        } else {
            *v = Complex64::default();
        }
    }
    spectral::ifft_in_place(&mut buf);
    buf
}

/// Demodulate a real trace at the quantum beat (optionally with a phase
/// track), matched-filter, and sample the symbol grid starting at `start`.
fn quantum_band_symbols(
    x: &[f64],
    fs: f64,
    f_beat_hz: f64,
    phases: Option<&[f64]>,
    taps: &[f64],
    mask_half_width_hz: f64,
    start: usize,
    sps: usize,
    count: usize,
) -> Vec<Complex64> {
    let w = 2.0 * std::f64::consts::PI * f_beat_hz / fs;
    let y: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let ph = w * k as f64 + phases.map_or(0.0, |p| p[k]);
            Complex64::from_polar(v, -ph)
        })
        .collect();
    let mf = matched_filter_banded(&y, fs, taps, mask_half_width_hz);
    (0..count).map(|j| mf[start + j * sps]).collect()
}

/// Pooled per-quadrature variance of a symbol block.
fn symbol_variance(symbols: &[Complex64]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let n = symbols.len() as f64;
    let mr = symbols.iter().map(|v| v.re).sum::<f64>() / n;
    let mi = symbols.iter().map(|v| v.im).sum::<f64>() / n;
    symbols.iter().map(|v| (v.re - mr).powi(2) + (v.im - mi).powi(2)).sum::<f64>() / (2.0 * n)
}

/// Noise symbols of a trace through the same demod + matched-filter path the
/// signal takes, edges excluded.
fn noise_symbols(
    x: &[f64],
    fs: f64,
    f_beat_hz: f64,
    taps: &[f64],
    mask_half_width_hz: f64,
    sps: usize,
) -> Vec<Complex64> {
    let guard = taps.len();
    if x.len() < 2 * guard + sps {
        return Vec::new();
    }
    let count = (x.len() - 2 * guard) / sps;
    quantum_band_symbols(x, fs, f_beat_hz, None, taps, mask_half_width_hz, guard, sps, count)
}

/// Recover one frame of symbols from its trace set.
///
/// Stages: whitening (designed on the first half of the vacuum trace), SNU
/// calibration (second half), pilot extraction and phase tracking, quantum
/// band downconversion, matched filter, timing recovery (cross-correlation
/// plus parabolic sub-sample refinement), reference-block synchronization
/// with constant phase correction, and SNU normalization.
///
/// `phase_override` substitutes a known phase trajectory (sample grid) for
/// the tracked one; the live path uses `None`.
#[allow(clippy::too_many_arguments)]
/// Whitening is designed on the first half of the vacuum trace and applied
/// to the others; the SNU scale is measured on the second half, since reusing
/// the design samples for calibration would bias the scale low (the filter
/// overfits its own realization). Returns (modulated, electronic, vacuum
/// tail), whitened when enabled.
fn whitened_front(traces: &TraceSet, rx: &RxConfig) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let fs = traces.modulated.sample_rate_hz;
    let modulated = traces.modulated.as_real()?;
    let vacuum = traces.vacuum.as_real()?;
    let electronic = traces.electronic.as_real()?;
    let half = vacuum.len() / 2;
    if !rx.whitening_enabled {
        return Ok((modulated.to_vec(), electronic.to_vec(), vacuum[half..].to_vec()));
    }
    let design_half = SampledTrace::real(vacuum[..half].to_vec(), fs, TraceKind::Vacuum);
    let filt = design_whitening(&design_half, rx.whitening_regularization)?;
    let apply = |x: &[f64], kind: TraceKind| -> Result<Vec<f64>> {
        let t = SampledTrace::real(x.to_vec(), fs, kind);
        Ok(apply_whitening(&filt, &t)?.as_real()?.to_vec())
    };
    Ok((
        apply(modulated, TraceKind::Modulated)?,
        apply(electronic, TraceKind::Electronic)?,
        apply(&vacuum[half..], TraceKind::Vacuum)?,
    ))
}

/// Pilot baseband from the whitened modulated trace plus the frame-adapted
/// tracker settings: process noise from the channel linewidth at the pilot
/// rate, measurement noise and amplitude from the measured pilot band.
#[allow(clippy::too_many_arguments)]
fn adapt_pilot(
    mod_w: &[f64],
    vac_tail: &[f64],
    fs: f64,
    f_pb: f64,
    f_qb: f64,
    qbw: f64,
    sps: usize,
    ch: &ChannelParams,
    rx: &RxConfig,
    ukf_template: &UkfConfig,
) -> Result<(PilotBaseband, UkfConfig, f64, f64)> {
    let mod_trace = SampledTrace::real(mod_w.to_vec(), fs, TraceKind::Modulated);
    let p = extract_pilot(&mod_trace, f_pb, f_qb, qbw, rx.pilot_lowpass_hz, sps)?;
    let vac_trace = SampledTrace::real(vac_tail.to_vec(), fs, TraceKind::Vacuum);
    let pv = extract_pilot(&vac_trace, f_pb, f_qb, qbw, rx.pilot_lowpass_hz, sps)?;
    let pilot_noise_floor = pv.mean_power();
    let pilot_power = p.mean_power();
    let amp_sq = pilot_power - pilot_noise_floor;
    if amp_sq <= 10.0 * pilot_noise_floor {
        return Err(CvqkdError::LowSnrPilot { pilot_power, noise_floor: pilot_noise_floor });
    }
    let cfg = UkfConfig {
        process_noise_phase: 2.0 * std::f64::consts::PI * ch.combined_linewidth_hz() / p.rate_hz,
        measurement_noise: pilot_noise_floor / 2.0,
        pilot_amplitude: amp_sq.sqrt(),
        initial_state: [p.samples[0].arg(), 0.0],
        ..*ukf_template
    };
    Ok((p, cfg, pilot_power, pilot_noise_floor))
}

/// The pilot stream and adapted tracker settings exactly as `recover_symbols`
/// builds them internally, recomputed from the raw traces. Lets diagnostics
/// compare phase estimators on the pipeline's own pilot without running the
/// full receiver.
pub fn pilot_front_end(
    traces: &TraceSet,
    tx_cfg: &TxConfig,
    ch: &ChannelParams,
    rx: &RxConfig,
    ukf_template: &UkfConfig,
) -> Result<(PilotBaseband, UkfConfig)> {
    tx_cfg.validate()?;
    ch.validate()?;
    let fs = traces.modulated.sample_rate_hz;
    let (mod_w, _, vac_tail) = whitened_front(traces, rx)?;
    let beat = ch.beat_shift_hz();
    let (p, cfg, _, _) = adapt_pilot(
        &mod_w,
        &vac_tail,
        fs,
        tx_cfg.pilot_frequency_hz + beat,
        tx_cfg.frequency_shift_hz + beat,
        tx_cfg.quantum_bandwidth_hz(),
        tx_cfg.samples_per_symbol,
        ch,
        rx,
        ukf_template,
    )?;
    Ok((p, cfg))
}

pub fn recover_symbols(
    traces: &TraceSet,
    reference_symbols: &[Complex64],
    n_quantum: usize,
    tx_cfg: &TxConfig,
    ch: &ChannelParams,
    det: &DetectorParams,
    rx: &RxConfig,
    ukf_template: &UkfConfig,
    phase_override: Option<&[f64]>,
    frame_id: u64,
) -> Result<(SymbolFrame, RxReport)> {
    tx_cfg.validate()?;
    ch.validate()?;
    det.validate()?;
    let n = traces.modulated.len();
    let fs = traces.modulated.sample_rate_hz;
    let sps = tx_cfg.samples_per_symbol;
    let n_ref = reference_symbols.len();
    let n_total = n_ref + n_quantum;
    if n_ref < sync::MIN_REFERENCE {
        return Err(CvqkdError::invalid(format!(
            "recover_symbols: {n_ref} reference symbols, need at least {}",
            sync::MIN_REFERENCE
        )));
    }
    if traces.vacuum.len() != n || traces.electronic.len() != n {
        return Err(CvqkdError::invalid(
            "recover_symbols: trace set lengths differ".to_string(),
        ));
    }
    let d0 = tx_cfg.span_symbols * sps;
    if n < d0 + n_total * sps {
        return Err(CvqkdError::invalid(format!(
            "recover_symbols: trace of {n} samples cannot hold {n_total} symbols at {sps} sps"
        )));
    }

    let (mod_w, elec_w, vac_tail) = whitened_front(traces, rx)?;

    let beat = ch.beat_shift_hz();
    let f_qb = tx_cfg.frequency_shift_hz + beat;
    let f_pb = tx_cfg.pilot_frequency_hz + beat;
    let qbw = tx_cfg.quantum_bandwidth_hz();
    let mask_half = 1.05 * qbw / 2.0;
    let taps = rrc_taps(sps, tx_cfg.span_symbols, tx_cfg.rolloff)?;

    // Symbol-level calibration through the same band path the signal takes.
    let vac_syms = noise_symbols(&vac_tail, fs, f_qb, &taps, mask_half, sps);
    let elec_syms = noise_symbols(&elec_w, fs, f_qb, &taps, mask_half, sps);
    let vvac = symbol_variance(&vac_syms);
    let velec = symbol_variance(&elec_syms);
    let (snu, t_hat) = match rx.snu_nominal {
        Some(s) => {
            if !(s > 0.0) {
                return Err(CvqkdError::invalid("nominal SNU scale must be positive".to_string()));
            }
            (s, velec / s)
        }
        None => {
            let s = calibrate_snu(vvac, velec)?;
            (s, velec / s)
        }
    };

    // Phase trajectory on the sample grid.
    let mut v_est = f64::NAN;
    let mut ukf_converged = true;
    let mut pilot_power = 0.0;
    let mut pilot_noise_floor = 0.0;
    let phases: Option<Vec<f64>> = if let Some(ovr) = phase_override {
        if ovr.len() < n {
            return Err(CvqkdError::invalid(format!(
                "phase override has {} samples, trace needs {n}",
                ovr.len()
            )));
        }
        Some(ovr[..n].to_vec())
    } else if rx.ukf_enabled {
        let (p, cfg, power, floor) =
            adapt_pilot(&mod_w, &vac_tail, fs, f_pb, f_qb, qbw, sps, ch, rx, ukf_template)?;
        pilot_power = power;
        pilot_noise_floor = floor;
        let est = ukf_track(&p, &cfg)?;
        v_est = est.v_est;
        ukf_converged = est.converged;
        Some(interpolate_phases(&est.phases, sps, n))
    } else {
        None
    };

    // Quantum band to symbol candidates.
    let w_qb = 2.0 * std::f64::consts::PI * f_qb / fs;
    let y: Vec<Complex64> = mod_w
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let ph = w_qb * k as f64 + phases.as_ref().map_or(0.0, |p| p[k]);
            Complex64::from_polar(v, -ph)
        })
        .collect();
    let mf = matched_filter_banded(&y, fs, &taps, mask_half);

    // Coarse timing: correlate against the zero-stuffed reference train in a
    // window around the nominal group delay.
    let window = 4 * sps;
    let s_lo = d0.saturating_sub(window).max(1);
    let s_hi = (d0 + window).min(n - (n_ref - 1) * sps - 2);
    let corr_at = |s: usize| -> Complex64 {
        reference_symbols
            .iter()
            .enumerate()
            .map(|(j, r)| r.conj() * mf[s + j * sps])
            .sum()
    };
    let mut best_s = s_lo;
    let mut best_mag = -1.0;
    let mags: Vec<f64> = (s_lo..=s_hi)
        .map(|s| {
            let m = corr_at(s).norm_sqr();
            if m > best_mag {
                best_mag = m;
                best_s = s;
            }
            m
        })
        .collect();
    let frac = {
        let i = best_s - s_lo;
        if i == 0 || i + 1 >= mags.len() {
            0.0
        } else {
            parabolic_refinement(mags[i - 1].sqrt(), mags[i].sqrt(), mags[i + 1].sqrt())
        }
    };
    let mf_shifted =
        if frac.abs() > 1e-9 { spectral::fractional_delay(&mf, -frac) } else { mf };

    // Candidate symbol stream with a margin of whole symbols, then the
    // symbol-level lock that also yields the constant phase.
    let margin = 8usize;
    let base = best_s as isize - (margin * sps) as isize;
    let candidates: Vec<Complex64> = (0..n_total + 2 * margin)
        .map(|j| {
            let idx = base + (j * sps) as isize;
            if idx >= 0 && (idx as usize) < n {
                mf_shifted[idx as usize]
            } else {
                Complex64::default()
            }
        })
        .collect();
    let lock = synchronize(&candidates, reference_symbols)?;
    if lock.offset + n_total > candidates.len() {
        return Err(CvqkdError::SyncFailure { psr: lock.psr, threshold: PSR_THRESHOLD });
    }
    let rot = Complex64::from_polar(1.0 / snu.sqrt(), -lock.peak_phase);
    let aligned: Vec<Complex64> =
        candidates[lock.offset..lock.offset + n_total].iter().map(|&v| v * rot).collect();

    let start_sample = base + (lock.offset * sps) as isize;
    let report = RxReport {
        snu_scale: snu,
        t_hat,
        sync_offset_samples: start_sample as f64 + frac - d0 as f64,
        sync_psr: lock.psr,
        v_est,
        ukf_converged,
        pilot_power,
        pilot_noise_floor,
    };
    let frame = SymbolFrame {
        reference_symbols: aligned[..n_ref].to_vec(),
        quantum_symbols: aligned[n_ref..].to_vec(),
        frame_id,
    };
    Ok((frame, report))
}
