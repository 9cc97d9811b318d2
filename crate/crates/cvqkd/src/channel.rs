//! Fiber channel and RF-heterodyne receiver front end: loss, excess noise,
//! carrier offset between the two free-running lasers, laser phase noise,
//! and a band-limited detector with trusted electronic noise.

use num_complex::Complex64;

use crate::core::{gaussian_draw, RngStream, SampledTrace, StreamPurpose, TraceKind};
use crate::error::{CvqkdError, Result};
use crate::spectral::{self, Biquad};

/// Untrusted channel between Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Channel transmittance.
    pub eta: f64,
    /// Channel-output-referred excess noise, SNU (per quadrature, symbol
    /// level).
    pub u_snu: f64,
    /// Receiver LO frequency minus transmitter carrier frequency. Negative
    /// means the LO sits below the carrier, so the signal beats upward.
    pub lo_offset_hz: f64,
    pub linewidth_tx_hz: f64,
    pub linewidth_lo_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            eta: 0.049,
            u_snu: 1.3e-3,
            lo_offset_hz: -180e6,
            linewidth_tx_hz: 100.0,
            linewidth_lo_hz: 100.0,
        }
    }
}

impl ChannelParams {
    pub fn combined_linewidth_hz(&self) -> f64 {
        self.linewidth_tx_hz + self.linewidth_lo_hz
    }

    /// Frequency every transmitted band lands on after beating with the LO.
    pub fn beat_shift_hz(&self) -> f64 {
        -self.lo_offset_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(CvqkdError::invalid(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.u_snu >= 0.0) {
            return Err(CvqkdError::invalid(format!("u_snu must be nonnegative, got {}", self.u_snu)));
        }
        if !(self.linewidth_tx_hz >= 0.0 && self.linewidth_lo_hz >= 0.0) {
            return Err(CvqkdError::invalid("linewidths must be nonnegative".to_string()));
        }
        Ok(())
    }
}

/// Trusted detection stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Detection efficiency.
    pub tau: f64,
    /// Electronic noise at the measurement output, SNU per quadrature.
    pub t_snu: f64,
    pub bandwidth_3db_hz: f64,
    /// Butterworth order of the detector response (even).
    pub filter_order: usize,
    /// Shot noise on/off. Off models a noiseless calibration bench, not a
    /// physical detector; SNU calibration is impossible without it.
    pub shot_noise: bool,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            tau: 0.68,
            t_snu: 0.058,
            bandwidth_3db_hz: 365e6,
            filter_order: 2,
            shot_noise: true,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(CvqkdError::invalid(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.t_snu >= 0.0) {
            return Err(CvqkdError::invalid(format!("t_snu must be nonnegative, got {}", self.t_snu)));
        }
        if !(self.bandwidth_3db_hz > 0.0) {
            return Err(CvqkdError::invalid("detector bandwidth must be positive".to_string()));
        }
        if self.filter_order < 2 || self.filter_order % 2 != 0 {
            return Err(CvqkdError::invalid(format!(
                "detector filter order must be even and at least 2, got {}",
                self.filter_order
            )));
        }
        Ok(())
    }

    /// The bilinear-transform prewarp is meaningless at or beyond Nyquist;
    /// such corners model a detector much faster than the sampling and are
    /// treated as transparent.
    pub fn filter_bypassed(&self, fs: f64) -> bool {
        self.bandwidth_3db_hz >= 0.49 * fs
    }
}

/// Laser phase as a function of time (transmitter plus LO combined).
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    pub phases: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl PhaseTrajectory {
    /// No phase noise at all (both lasers ideal and phase-aligned).
    pub fn zeros(n: usize, sample_rate_hz: f64) -> Self {
        PhaseTrajectory { phases: vec![0.0; n], sample_rate_hz }
    }
}

/// Wiener phase walk: increments of variance `2 pi linewidth / fs`, initial
/// phase uniform on [0, 2 pi).
pub fn phase_walk(
    n_samples: usize,
    sample_rate_hz: f64,
    linewidth_hz: f64,
    rng: &mut RngStream,
) -> Result<PhaseTrajectory> {
    if n_samples == 0 {
        return Err(CvqkdError::invalid("phase_walk: zero samples"));
    }
    if !(linewidth_hz >= 0.0) {
        return Err(CvqkdError::invalid(format!(
            "linewidth must be nonnegative, got {linewidth_hz}"
        )));
    }
    if !(sample_rate_hz > 0.0) {
        return Err(CvqkdError::invalid("sample rate must be positive".to_string()));
    }
    let q = 2.0 * std::f64::consts::PI * linewidth_hz / sample_rate_hz;
    let mut phases = Vec::with_capacity(n_samples);
    let mut phi = rng.uniform() * 2.0 * std::f64::consts::PI;
    phases.push(phi);
    if n_samples > 1 {
        let steps = gaussian_draw(rng, n_samples - 1, q)?;
        for d in steps {
            phi += d;
            phases.push(phi);
        }
    }
    Ok(PhaseTrajectory { phases, sample_rate_hz })
}

/// Propagate a transmitted envelope through the channel: amplitude loss
/// sqrt(eta), excess noise of u/2 per quadrature confined to the quantum
/// band, then the beat against the offset LO with its phase noise.
pub fn apply_channel(
    trace: &SampledTrace,
    params: &ChannelParams,
    quantum_center_hz: f64,
    quantum_bandwidth_hz: f64,
    phase: &PhaseTrajectory,
    rng: &mut RngStream,
) -> Result<SampledTrace> {
    trace.check_nonempty("apply_channel")?;
    params.validate()?;
    let x = trace.as_complex()?;
    let n = x.len();
    let fs = trace.sample_rate_hz;
    if phase.phases.len() < n {
        return Err(CvqkdError::invalid(format!(
            "phase trajectory has {} samples, trace needs {n}",
            phase.phases.len()
        )));
    }
    if (phase.sample_rate_hz - fs).abs() > 1e-6 * fs {
        return Err(CvqkdError::invalid("phase trajectory sample rate mismatch".to_string()));
    }

    let amp = params.eta.sqrt();
    let mut out: Vec<Complex64> = x.iter().map(|&v| v * amp).collect();

    if params.u_snu > 0.0 {
        let re = gaussian_draw(rng, n, params.u_snu / 2.0)?;
        let im = gaussian_draw(rng, n, params.u_snu / 2.0)?;
        let white: Vec<Complex64> =
            re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
        // Confine to the occupied quantum band with a little margin; the
        // in-band spectral density is what the excess-noise budget sees.
        let half = 1.1 * quantum_bandwidth_hz / 2.0;
        let banded = spectral::fft_filter_complex(&white, fs, |f| {
            if (f - quantum_center_hz).abs() <= half {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        for (o, w) in out.iter_mut().zip(banded) {
            *o += w;
        }
    }

    let w_beat = 2.0 * std::f64::consts::PI * params.beat_shift_hz() / fs;
    for (k, o) in out.iter_mut().enumerate() {
        *o *= Complex64::from_polar(1.0, w_beat * k as f64 + phase.phases[k]);
    }
    Ok(SampledTrace::complex(out, fs, trace.kind))
}

fn detect_core(
    signal: Option<&[Complex64]>,
    n: usize,
    fs: f64,
    det: &DetectorParams,
    shot_rng: Option<&mut RngStream>,
    elec_rng: Option<&mut RngStream>,
    kind: TraceKind,
) -> Result<SampledTrace> {
    let amp = det.tau.sqrt();
    let mut p = vec![0.0; n];
    if let Some(z) = signal {
        for (o, v) in p.iter_mut().zip(z) {
            *o = 2.0 * (v * amp).re;
        }
    }
    // Shot noise has a fixed raw scale; SNU calibration downstream maps it
    // to exactly one unit per quadrature, independent of tau.
    if det.shot_noise {
        let rng = shot_rng
            .ok_or_else(|| CvqkdError::invalid("shot noise enabled but no stream supplied"))?;
        for (o, s) in p.iter_mut().zip(gaussian_draw(rng, n, 4.0)?) {
            *o += s;
        }
    }
    if det.t_snu > 0.0 {
        let rng = elec_rng
            .ok_or_else(|| CvqkdError::invalid("electronic noise enabled but no stream supplied"))?;
        for (o, e) in p.iter_mut().zip(gaussian_draw(rng, n, 4.0 * det.t_snu)?) {
            *o += e;
        }
    }
    let filtered = if det.filter_bypassed(fs) {
        p
    } else {
        let mut y = p;
        for bq in Biquad::butterworth_cascade(det.bandwidth_3db_hz, fs, det.filter_order) {
            y = bq.filter_real(&y);
        }
        y
    };
    Ok(SampledTrace::real(filtered, fs, kind))
}

/// RF-heterodyne detection: both quadratures ride on the beat carrier of the
/// real output. Detection efficiency attenuates the field before the noise
/// terms are added (vacuum topped back up, so shot noise stays one SNU), and
/// the detector low-pass applies last.
pub fn heterodyne_detect(
    trace: &SampledTrace,
    det: &DetectorParams,
    shot_rng: &mut RngStream,
    elec_rng: &mut RngStream,
) -> Result<SampledTrace> {
    trace.check_nonempty("heterodyne_detect")?;
    det.validate()?;
    let z = trace.as_complex()?;
    detect_core(
        Some(z),
        z.len(),
        trace.sample_rate_hz,
        det,
        Some(shot_rng),
        Some(elec_rng),
        TraceKind::Modulated,
    )
}

/// The three calibration-grade traces of one frame: identical length, rate,
/// and detector response; only the active sources differ.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub modulated: SampledTrace,
    pub vacuum: SampledTrace,
    pub electronic: SampledTrace,
}

/// Simulate one frame's detected traces from the transmitted envelope.
pub fn generate_trace_set(
    tx_trace: &SampledTrace,
    quantum_center_hz: f64,
    quantum_bandwidth_hz: f64,
    ch: &ChannelParams,
    det: &DetectorParams,
    phase: &PhaseTrajectory,
    seed: u64,
    frame_id: u64,
) -> Result<TraceSet> {
    det.validate()?;
    let n = tx_trace.len();
    let fs = tx_trace.sample_rate_hz;

    let mut ch_rng = RngStream::new(seed, frame_id, StreamPurpose::ChannelNoise);
    let received =
        apply_channel(tx_trace, ch, quantum_center_hz, quantum_bandwidth_hz, phase, &mut ch_rng)?;

    let mut shot = RngStream::new(seed, frame_id, StreamPurpose::Shot);
    let mut elec = RngStream::new(seed, frame_id, StreamPurpose::Electronic);
    let modulated = heterodyne_detect(&received, det, &mut shot, &mut elec)?;

    let mut vshot = RngStream::new(seed, frame_id, StreamPurpose::VacuumShot);
    let mut velec = RngStream::new(seed, frame_id, StreamPurpose::VacuumElectronic);
    let vacuum =
        detect_core(None, n, fs, det, Some(&mut vshot), Some(&mut velec), TraceKind::Vacuum)?;

    let mut eonly = RngStream::new(seed, frame_id, StreamPurpose::ElectronicTrace);
    let no_shot = DetectorParams { shot_noise: false, ..*det };
    let electronic =
        detect_core(None, n, fs, &no_shot, None, Some(&mut eonly), TraceKind::Electronic)?;

    Ok(TraceSet { modulated, vacuum, electronic })
}

/// Check that every band the transmitter occupies lands inside the usable
/// detector range after the beat.
pub fn validate_band_plan(
    quantum_center_hz: f64,
    quantum_bandwidth_hz: f64,
    pilot_hz: f64,
    ch: &ChannelParams,
    det: &DetectorParams,
) -> Result<()> {
    let beat = ch.beat_shift_hz();
    let top = det.bandwidth_3db_hz * 1.2;
    let q_lo = quantum_center_hz + beat - quantum_bandwidth_hz / 2.0;
    let q_hi = quantum_center_hz + beat + quantum_bandwidth_hz / 2.0;
    let p = pilot_hz + beat;
    if q_lo < 0.0 || q_hi > top {
        return Err(CvqkdError::BandPlan(format!(
            "quantum band [{q_lo:.3e}, {q_hi:.3e}] Hz outside detector range [0, {top:.3e}] Hz"
        )));
    }
    if p < 0.0 || p > top {
        return Err(CvqkdError::BandPlan(format!(
            "pilot beat {p:.3e} Hz outside detector range [0, {top:.3e}] Hz"
        )));
    }
    Ok(())
}
