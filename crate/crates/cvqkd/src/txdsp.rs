//! Transmitter DSP: Gaussian modulation, root-raised-cosine pulse shaping,
//! carrier placement, pilot injection, and DAC quantization.

use num_complex::Complex64;

use crate::core::{RngStream, SampledTrace, SymbolFrame, TraceKind};
use crate::error::{CvqkdError, Result};
use crate::spectral;

/// Transmit-side configuration. Frequencies are absolute (the digital
/// upconversion grid); amplitudes are relative to the shaped quantum band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxConfig {
    pub baud_rate_hz: f64,
    pub samples_per_symbol: usize,
    pub rolloff: f64,
    pub span_symbols: usize,
    /// Modulation variance per quadrature, SNU.
    pub v_mod_snu: f64,
    /// Digital upconversion of the quantum band.
    pub frequency_shift_hz: f64,
    pub pilot_frequency_hz: f64,
    /// Pilot amplitude relative to the RMS of the shaped quantum band
    /// (10.0 = 20 dB).
    pub pilot_amplitude: f64,
    /// Reference symbols at the head of every frame.
    pub n_reference: usize,
    /// DAC resolution; `None` models an ideal DAC.
    pub dac_bits: Option<u32>,
}

impl Default for TxConfig {
    fn default() -> Self {
        TxConfig {
            baud_rate_hz: 20e6,
            samples_per_symbol: 50,
            rolloff: 0.2,
            span_symbols: 32,
            v_mod_snu: 1.8,
            frequency_shift_hz: 80e6,
            pilot_frequency_hz: 150e6,
            pilot_amplitude: 10.0,
            n_reference: 1000,
            dac_bits: None,
        }
    }
}

impl TxConfig {
    pub fn sample_rate_hz(&self) -> f64 {
        self.baud_rate_hz * self.samples_per_symbol as f64
    }

    /// Full occupied width of the shaped quantum band.
    pub fn quantum_bandwidth_hz(&self) -> f64 {
        (1.0 + self.rolloff) * self.baud_rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CvqkdError::invalid(format!("TxConfig: {msg}")));
        if !(self.baud_rate_hz > 0.0) {
            return fail(format!("baud_rate_hz must be positive, got {}", self.baud_rate_hz));
        }
        if self.samples_per_symbol < 2 {
            return fail(format!(
                "samples_per_symbol must be at least 2, got {}",
                self.samples_per_symbol
            ));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return fail(format!("rolloff must lie in (0, 1], got {}", self.rolloff));
        }
        if self.span_symbols < 4 {
            return fail(format!("span_symbols must be at least 4, got {}", self.span_symbols));
        }
        if !(self.v_mod_snu > 0.0) {
            return fail(format!("v_mod_snu must be positive, got {}", self.v_mod_snu));
        }
        if !(self.pilot_amplitude > 0.0) {
            return fail(format!("pilot_amplitude must be positive, got {}", self.pilot_amplitude));
        }
        if self.n_reference < 64 {
            return fail(format!(
                "n_reference must be at least 64 for synchronization, got {}",
                self.n_reference
            ));
        }
        if let Some(bits) = self.dac_bits {
            if !(4..=24).contains(&bits) {
                return fail(format!("dac_bits must lie in [4, 24], got {bits}"));
            }
        }
        let fs = self.sample_rate_hz();
        let half_bw = self.quantum_bandwidth_hz() / 2.0;
        let quantum_top = self.frequency_shift_hz.abs() + half_bw;
        if quantum_top >= fs / 2.0 {
            return Err(CvqkdError::BandPlan(format!(
                "quantum band edge {quantum_top:.3e} Hz reaches Nyquist {:.3e} Hz",
                fs / 2.0
            )));
        }
        if self.pilot_frequency_hz.abs() >= fs / 2.0 {
            return Err(CvqkdError::BandPlan(format!(
                "pilot at {:.3e} Hz reaches Nyquist {:.3e} Hz",
                self.pilot_frequency_hz,
                fs / 2.0
            )));
        }
        if (self.pilot_frequency_hz - self.frequency_shift_hz).abs() <= half_bw {
            return Err(CvqkdError::BandPlan(format!(
                "pilot at {:.3e} Hz sits inside the quantum band around {:.3e} Hz",
                self.pilot_frequency_hz, self.frequency_shift_hz
            )));
        }
        Ok(())
    }
}

/// Draw `n` Gaussian-modulated coherent-state symbols: each quadrature i.i.d.
/// zero-mean Gaussian of variance `v_mod_snu`.
pub fn draw_gmcs_symbols(n: usize, v_mod_snu: f64, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    if !(v_mod_snu > 0.0) {
        return Err(CvqkdError::invalid(format!(
            "modulation variance must be positive, got {v_mod_snu}"
        )));
    }
    let re = crate::core::gaussian_draw(rng, n, v_mod_snu)?;
    let im = crate::core::gaussian_draw(rng, n, v_mod_snu)?;
    Ok(re.into_iter().zip(im).map(|(x, y)| Complex64::new(x, y)).collect())
}

/// Draw a full frame, reference prefix first.
pub fn draw_frame_symbols(
    cfg: &TxConfig,
    total_symbols: usize,
    frame_id: u64,
    rng: &mut RngStream,
) -> Result<SymbolFrame> {
    if total_symbols <= cfg.n_reference {
        return Err(CvqkdError::invalid(format!(
            "frame of {total_symbols} symbols cannot hold {} reference symbols plus key",
            cfg.n_reference
        )));
    }
    let mut all = draw_gmcs_symbols(total_symbols, cfg.v_mod_snu, rng)?;
    let quantum = all.split_off(cfg.n_reference);
    Ok(SymbolFrame { reference_symbols: all, quantum_symbols: quantum, frame_id })
}

/// Unit-energy root-raised-cosine taps, `span_symbols * sps + 1` of them,
/// symmetric about the center. The two removable singularities (t = 0 and
/// |t| = 1/(4 rolloff)) use their analytic limits.
pub fn rrc_taps(sps: usize, span_symbols: usize, rolloff: f64) -> Result<Vec<f64>> {
    if sps < 2 {
        return Err(CvqkdError::invalid(format!("sps must be at least 2, got {sps}")));
    }
    if span_symbols < 4 {
        return Err(CvqkdError::invalid(format!("span must be at least 4, got {span_symbols}")));
    }
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(CvqkdError::invalid(format!("rolloff must lie in (0, 1], got {rolloff}")));
    }
    let n = span_symbols * sps;
    let b = rolloff;
    let pi = std::f64::consts::PI;
    let mut taps: Vec<f64> = (0..=n)
        .map(|i| {
            let t = (i as f64 - n as f64 / 2.0) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / pi
            } else if (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
                (b / 2f64.sqrt())
                    * ((1.0 + 2.0 / pi) * (pi / (4.0 * b)).sin()
                        + (1.0 - 2.0 / pi) * (pi / (4.0 * b)).cos())
            } else {
                ((pi * t * (1.0 - b)).sin() + 4.0 * b * t * (pi * t * (1.0 + b)).cos())
                    / (pi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t)))
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|v| v * v).sum();
    let scale = 1.0 / energy.sqrt();
    for v in taps.iter_mut() {
        *v *= scale;
    }
    Ok(taps)
}

/// Pulse-shaped baseband trace plus the filter group delay the receiver must
/// account for.
#[derive(Debug, Clone)]
pub struct ShapedTrace {
    pub trace: SampledTrace,
    pub group_delay_samples: usize,
}

/// Zero-stuff to the sample grid and convolve with the RRC. Output length is
/// `n_symbols * sps + span * sps` (full convolution tails kept).
pub fn pulse_shape(symbols: &[Complex64], cfg: &TxConfig) -> Result<ShapedTrace> {
    if symbols.is_empty() {
        return Err(CvqkdError::invalid("pulse_shape: no symbols"));
    }
    let taps = rrc_taps(cfg.samples_per_symbol, cfg.span_symbols, cfg.rolloff)?;
    let sps = cfg.samples_per_symbol;
    let mut up = vec![Complex64::default(); symbols.len() * sps];
    for (k, &s) in symbols.iter().enumerate() {
        up[k * sps] = s;
    }
    let shaped = spectral::fir_filter_full(&up, &taps);
    Ok(ShapedTrace {
        trace: SampledTrace::complex(shaped, cfg.sample_rate_hz(), TraceKind::Modulated),
        group_delay_samples: (taps.len() - 1) / 2,
    })
}

/// Multiply by a complex exponential at `f_hz`. Errors if the shift itself
/// would alias; band-edge checks against the occupied spectrum live in
/// `TxConfig::validate`.
pub fn frequency_shift(trace: &SampledTrace, f_hz: f64) -> Result<SampledTrace> {
    trace.check_nonempty("frequency_shift")?;
    let fs = trace.sample_rate_hz;
    if f_hz.abs() >= fs / 2.0 {
        return Err(CvqkdError::BandPlan(format!(
            "frequency shift {f_hz:.3e} Hz reaches Nyquist {:.3e} Hz",
            fs / 2.0
        )));
    }
    let x = trace.as_complex()?;
    let w = 2.0 * std::f64::consts::PI * f_hz / fs;
    let shifted: Vec<Complex64> =
        x.iter().enumerate().map(|(k, &v)| v * Complex64::from_polar(1.0, w * k as f64)).collect();
    Ok(SampledTrace::complex(shifted, fs, trace.kind))
}

/// Add the pilot tone at `pilot_frequency_hz` with amplitude
/// `relative_amplitude` times the RMS of the incoming (quantum-band) trace.
/// The pilot must sit strictly outside the quantum band.
pub fn add_pilot(
    trace: &SampledTrace,
    pilot_frequency_hz: f64,
    relative_amplitude: f64,
    quantum_center_hz: f64,
    quantum_bandwidth_hz: f64,
) -> Result<SampledTrace> {
    trace.check_nonempty("add_pilot")?;
    if !(relative_amplitude > 0.0) {
        return Err(CvqkdError::invalid(format!(
            "pilot amplitude must be positive, got {relative_amplitude}"
        )));
    }
    let fs = trace.sample_rate_hz;
    if pilot_frequency_hz.abs() >= fs / 2.0 {
        return Err(CvqkdError::BandPlan(format!(
            "pilot at {pilot_frequency_hz:.3e} Hz reaches Nyquist {:.3e} Hz",
            fs / 2.0
        )));
    }
    if (pilot_frequency_hz - quantum_center_hz).abs() <= quantum_bandwidth_hz / 2.0 {
        return Err(CvqkdError::BandPlan(format!(
            "pilot at {pilot_frequency_hz:.3e} Hz overlaps the quantum band \
             ({quantum_center_hz:.3e} +- {:.3e} Hz)",
            quantum_bandwidth_hz / 2.0
        )));
    }
    let x = trace.as_complex()?;
    let rms = (x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64).sqrt();
    let amp = relative_amplitude * rms;
    let w = 2.0 * std::f64::consts::PI * pilot_frequency_hz / fs;
    let out: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| v + Complex64::from_polar(amp, w * k as f64))
        .collect();
    Ok(SampledTrace::complex(out, fs, trace.kind))
}

/// Uniform mid-tread quantization of each real component to `2^bits` levels
/// spanning [-max|x|, +max|x|] (max over both components). Idempotent, since
/// the extrema stay representable.
pub fn dac_quantize(trace: &SampledTrace, bits: u32) -> Result<SampledTrace> {
    trace.check_nonempty("dac_quantize")?;
    if !(4..=24).contains(&bits) {
        return Err(CvqkdError::invalid(format!("dac_bits must lie in [4, 24], got {bits}")));
    }
    let x = trace.as_complex()?;
    let max = x.iter().map(|v| v.re.abs().max(v.im.abs())).fold(0.0f64, f64::max);
    if max == 0.0 {
        return Ok(trace.clone());
    }
    let levels = (1u64 << bits) as f64;
    let step = 2.0 * max / (levels - 1.0);
    let q = |v: f64| ((v + max) / step).round() * step - max;
    let out: Vec<Complex64> = x.iter().map(|v| Complex64::new(q(v.re), q(v.im))).collect();
    Ok(SampledTrace::complex(out, trace.sample_rate_hz, trace.kind))
}

/// Everything the channel needs about a transmitted frame.
#[derive(Debug, Clone)]
pub struct TxFrameOutput {
    pub trace: SampledTrace,
    pub group_delay_samples: usize,
}

/// Full transmit chain for one frame: shape, upconvert, add pilot, quantize.
pub fn tx_frame(cfg: &TxConfig, frame: &SymbolFrame) -> Result<TxFrameOutput> {
    cfg.validate()?;
    let symbols = frame.interleaved();
    let shaped = pulse_shape(&symbols, cfg)?;
    let shifted = frequency_shift(&shaped.trace, cfg.frequency_shift_hz)?;
    let with_pilot = add_pilot(
        &shifted,
        cfg.pilot_frequency_hz,
        cfg.pilot_amplitude,
        cfg.frequency_shift_hz,
        cfg.quantum_bandwidth_hz(),
    )?;
    let out = match cfg.dac_bits {
        Some(bits) => dac_quantize(&with_pilot, bits)?,
        None => with_pilot,
    };
    Ok(TxFrameOutput { trace: out, group_delay_samples: shaped.group_delay_samples })
}
