//! JSON run configuration.
//!
//! Every simulation parameter lives here in serializable form; the sections
//! convert to and from the library's parameter structs, and the file format
//! rejects unknown keys so a typo can never silently fall back to a default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cvqkd::channel::{ChannelParams, DetectorParams};
use cvqkd::core::LinkParams;
use cvqkd::pipeline::PipelineConfig;
use cvqkd::rxdsp::{RxConfig, UkfConfig};
use cvqkd::txdsp::TxConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TxSection {
    pub baud_rate_hz: f64,
    pub samples_per_symbol: usize,
    pub rolloff: f64,
    pub span_symbols: usize,
    pub v_mod_snu: f64,
    pub frequency_shift_hz: f64,
    pub pilot_frequency_hz: f64,
    pub pilot_amplitude: f64,
    pub n_reference: usize,
    pub dac_bits: Option<u32>,
}

impl Default for TxSection {
    fn default() -> Self {
        TxConfig::default().into()
    }
}

impl From<TxConfig> for TxSection {
    fn from(c: TxConfig) -> Self {
        TxSection {
            baud_rate_hz: c.baud_rate_hz,
            samples_per_symbol: c.samples_per_symbol,
            rolloff: c.rolloff,
            span_symbols: c.span_symbols,
            v_mod_snu: c.v_mod_snu,
            frequency_shift_hz: c.frequency_shift_hz,
            pilot_frequency_hz: c.pilot_frequency_hz,
            pilot_amplitude: c.pilot_amplitude,
            n_reference: c.n_reference,
            dac_bits: c.dac_bits,
        }
    }
}

impl From<&TxSection> for TxConfig {
    fn from(s: &TxSection) -> Self {
        TxConfig {
            baud_rate_hz: s.baud_rate_hz,
            samples_per_symbol: s.samples_per_symbol,
            rolloff: s.rolloff,
            span_symbols: s.span_symbols,
            v_mod_snu: s.v_mod_snu,
            frequency_shift_hz: s.frequency_shift_hz,
            pilot_frequency_hz: s.pilot_frequency_hz,
            pilot_amplitude: s.pilot_amplitude,
            n_reference: s.n_reference,
            dac_bits: s.dac_bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub eta: f64,
    pub u_snu: f64,
    pub lo_offset_hz: f64,
    pub linewidth_tx_hz: f64,
    pub linewidth_lo_hz: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelParams::default().into()
    }
}

impl From<ChannelParams> for ChannelSection {
    fn from(c: ChannelParams) -> Self {
        ChannelSection {
            eta: c.eta,
            u_snu: c.u_snu,
            lo_offset_hz: c.lo_offset_hz,
            linewidth_tx_hz: c.linewidth_tx_hz,
            linewidth_lo_hz: c.linewidth_lo_hz,
        }
    }
}

impl From<&ChannelSection> for ChannelParams {
    fn from(s: &ChannelSection) -> Self {
        ChannelParams {
            eta: s.eta,
            u_snu: s.u_snu,
            lo_offset_hz: s.lo_offset_hz,
            linewidth_tx_hz: s.linewidth_tx_hz,
            linewidth_lo_hz: s.linewidth_lo_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub tau: f64,
    pub t_snu: f64,
    pub bandwidth_3db_hz: f64,
    pub filter_order: usize,
    pub shot_noise: bool,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorParams::default().into()
    }
}

impl From<DetectorParams> for DetectorSection {
    fn from(d: DetectorParams) -> Self {
        DetectorSection {
            tau: d.tau,
            t_snu: d.t_snu,
            bandwidth_3db_hz: d.bandwidth_3db_hz,
            filter_order: d.filter_order,
            shot_noise: d.shot_noise,
        }
    }
}

impl From<&DetectorSection> for DetectorParams {
    fn from(s: &DetectorSection) -> Self {
        DetectorParams {
            tau: s.tau,
            t_snu: s.t_snu,
            bandwidth_3db_hz: s.bandwidth_3db_hz,
            filter_order: s.filter_order,
            shot_noise: s.shot_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RxSection {
    pub whitening_enabled: bool,
    pub whitening_regularization: f64,
    pub ukf_enabled: bool,
    pub pilot_lowpass_hz: f64,
    pub snu_nominal: Option<f64>,
}

impl Default for RxSection {
    fn default() -> Self {
        RxConfig::default().into()
    }
}

impl From<RxConfig> for RxSection {
    fn from(r: RxConfig) -> Self {
        RxSection {
            whitening_enabled: r.whitening_enabled,
            whitening_regularization: r.whitening_regularization,
            ukf_enabled: r.ukf_enabled,
            pilot_lowpass_hz: r.pilot_lowpass_hz,
            snu_nominal: r.snu_nominal,
        }
    }
}

impl From<&RxSection> for RxConfig {
    fn from(s: &RxSection) -> Self {
        RxConfig {
            whitening_enabled: s.whitening_enabled,
            whitening_regularization: s.whitening_regularization,
            ukf_enabled: s.ukf_enabled,
            pilot_lowpass_hz: s.pilot_lowpass_hz,
            snu_nominal: s.snu_nominal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UkfSection {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub process_noise_phase: f64,
    pub process_noise_freq: f64,
    pub measurement_noise: f64,
    pub pilot_amplitude: f64,
    pub initial_state: [f64; 2],
    pub initial_covariance: [f64; 2],
}

impl Default for UkfSection {
    fn default() -> Self {
        UkfConfig::default().into()
    }
}

impl From<UkfConfig> for UkfSection {
    fn from(u: UkfConfig) -> Self {
        UkfSection {
            alpha: u.alpha,
            beta: u.beta,
            kappa: u.kappa,
            process_noise_phase: u.process_noise_phase,
            process_noise_freq: u.process_noise_freq,
            measurement_noise: u.measurement_noise,
            pilot_amplitude: u.pilot_amplitude,
            initial_state: u.initial_state,
            initial_covariance: u.initial_covariance,
        }
    }
}

impl From<&UkfSection> for UkfConfig {
    fn from(s: &UkfSection) -> Self {
        UkfConfig {
            alpha: s.alpha,
            beta: s.beta,
            kappa: s.kappa,
            process_noise_phase: s.process_noise_phase,
            process_noise_freq: s.process_noise_freq,
            measurement_noise: s.measurement_noise,
            pilot_amplitude: s.pilot_amplitude,
            initial_state: s.initial_state,
            initial_covariance: s.initial_covariance,
        }
    }
}

/// Security-evaluation operating point. The simulation sections above drive
/// the physics; this section is what the key-rate bound is evaluated
/// against, with `eta` and `u_snu` replaced by per-frame estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub baud_rate_hz: f64,
    pub v_mod_snu: f64,
    pub eta: f64,
    pub tau: f64,
    pub t_snu: f64,
    pub u_snu: f64,
    pub beta: f64,
    pub fer: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        LinkParams::reference_operating_point().into()
    }
}

impl From<LinkParams> for LinkSection {
    fn from(p: LinkParams) -> Self {
        LinkSection {
            baud_rate_hz: p.baud_rate_hz,
            v_mod_snu: p.v_mod_snu,
            eta: p.eta,
            tau: p.tau,
            t_snu: p.t_snu,
            u_snu: p.u_snu,
            beta: p.beta,
            fer: p.fer,
        }
    }
}

impl From<&LinkSection> for LinkParams {
    fn from(s: &LinkSection) -> Self {
        LinkParams {
            baud_rate_hz: s.baud_rate_hz,
            v_mod_snu: s.v_mod_snu,
            eta: s.eta,
            tau: s.tau,
            t_snu: s.t_snu,
            u_snu: s.u_snu,
            beta: s.beta,
            fer: s.fer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconciliationSection {
    pub enabled: bool,
    /// Rotation dimension: 1, 2, 4, or 8.
    pub dimension: usize,
    /// Path to an alist parity-check matrix; the embedded rate-1/2 code is
    /// used when absent.
    pub alist_path: Option<PathBuf>,
    pub max_iters: usize,
}

impl Default for ReconciliationSection {
    fn default() -> Self {
        ReconciliationSection {
            enabled: false,
            dimension: 8,
            alist_path: None,
            max_iters: cvqkd::reconciliation::DEFAULT_MAX_ITERS,
        }
    }
}

/// Complete run description: pipeline parameters plus execution controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub tx: TxSection,
    pub channel: ChannelSection,
    pub detector: DetectorSection,
    pub rx: RxSection,
    pub ukf: UkfSection,
    pub link: LinkSection,
    pub reconciliation: ReconciliationSection,
    pub symbols_per_frame: usize,
    pub disclosure_stride: usize,
    pub truth_phase_pass: bool,
    pub n_frames: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub write_traces: bool,
    /// Frames may fail synchronization or calibration; beyond this fraction
    /// the whole run is declared failed (exit code 4).
    pub max_drop_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        RunConfig {
            tx: p.tx.into(),
            channel: p.channel.into(),
            detector: p.detector.into(),
            rx: p.rx.into(),
            ukf: p.ukf.into(),
            link: LinkSection::default(),
            reconciliation: ReconciliationSection::default(),
            symbols_per_frame: p.symbols_per_frame,
            disclosure_stride: p.disclosure_stride,
            truth_phase_pass: p.truth_phase_pass,
            n_frames: 100,
            seed: 1,
            output_dir: PathBuf::from("cvqkd-out"),
            write_traces: false,
            max_drop_fraction: 0.1,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("malformed config {}: {e}", path.display())))
    }

    pub fn to_file(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::usage(format!("cannot serialize config: {e}")))?;
        fs::write(path, text + "\n")
            .map_err(|e| CliError::io(format!("cannot write config {}: {e}", path.display())))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            tx: (&self.tx).into(),
            channel: (&self.channel).into(),
            detector: (&self.detector).into(),
            rx: (&self.rx).into(),
            ukf: (&self.ukf).into(),
            symbols_per_frame: self.symbols_per_frame,
            disclosure_stride: self.disclosure_stride,
            truth_phase_pass: self.truth_phase_pass,
        }
    }

    pub fn link_params(&self) -> LinkParams {
        (&self.link).into()
    }
}
