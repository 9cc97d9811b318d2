//! Per-frame metrics CSV and the run summary JSON.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! files are byte-stable for identical inputs and still parse back to the
//! exact f64 values.

use serde::Serialize;

pub const METRICS_HEADER: &str =
    "frame_id,eta_hat,xi_I,xi_Q,v_est,sync_offset,ukf_converged,decode_converged,key_fraction_contribution";

/// One row of the metrics CSV.
#[derive(Debug, Clone)]
pub struct FrameMetrics {
    pub frame_id: u64,
    pub eta_hat: f64,
    pub xi_i_snu: f64,
    pub xi_q_snu: f64,
    pub v_est: f64,
    pub sync_offset_samples: f64,
    pub ukf_converged: bool,
    /// None when reconciliation is disabled for the run.
    pub decode_converged: Option<bool>,
    pub key_fraction_contribution: f64,
}

impl FrameMetrics {
    pub fn csv_row(&self) -> String {
        let decode = match self.decode_converged {
            Some(b) => b.to_string(),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.frame_id,
            self.eta_hat,
            self.xi_i_snu,
            self.xi_q_snu,
            self.v_est,
            self.sync_offset_samples,
            self.ukf_converged,
            decode,
            self.key_fraction_contribution
        )
    }
}

pub fn render_metrics_csv(rows: &[FrameMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Aggregated results for the whole run, serialized as the summary JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub n_frames: u64,
    pub frames_processed: u64,
    pub frames_dropped: u64,
    pub seed: u64,
    pub mean_eta_hat: f64,
    pub mean_xi_i_snu: f64,
    pub mean_xi_q_snu: f64,
    pub mean_key_fraction_bits: f64,
    pub mean_key_rate_bps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconciliation: Option<ReconciliationSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconciliationSummary {
    pub codewords_attempted: usize,
    pub codewords_converged: usize,
    pub net_bits: u64,
    pub fer_measured: f64,
    pub beta_measured: f64,
    pub code_rate: f64,
}

pub fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}
