//! The `reconcile` subcommand: run reverse reconciliation over symbol pairs
//! stored as CSV and print the report as JSON.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use cvqkd::core::{RngStream, StreamPurpose};
use cvqkd::reconciliation::{run_reconciliation, CorrelatedFrame};

use crate::commands::load_code;
use crate::config::RunConfig;
use crate::{CliError, ReconcileArgs};

const CSV_HEADER: &str = "tx_re,tx_im,rx_re,rx_im";

fn parse_pairs(path: &Path) -> Result<(Vec<Complex64>, Vec<Complex64>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(CliError::usage(format!(
                "{}: first line must be the header '{CSV_HEADER}'",
                path.display()
            )))
        }
    }
    let mut tx = Vec::new();
    let mut rx = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::usage(format!(
                "{} line {}: expected 4 fields, got {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let mut vals = [0.0f64; 4];
        for (j, f) in fields.iter().enumerate() {
            vals[j] = f.trim().parse().map_err(|_| {
                CliError::usage(format!(
                    "{} line {}: '{}' is not a number",
                    path.display(),
                    i + 2,
                    f
                ))
            })?;
        }
        tx.push(Complex64::new(vals[0], vals[1]));
        rx.push(Complex64::new(vals[2], vals[3]));
    }
    if tx.is_empty() {
        return Err(CliError::usage(format!("{}: no symbol pairs", path.display())));
    }
    Ok((tx, rx))
}

#[derive(Debug, Serialize)]
struct ReconcileOutput {
    pairs: usize,
    code_n: usize,
    code_rate: f64,
    dimension: usize,
    codewords_attempted: usize,
    codewords_converged: usize,
    net_bits: u64,
    fer_measured: f64,
    beta_measured: f64,
    snr_measured: f64,
}

pub fn cmd_reconcile(cfg: &RunConfig, args: &ReconcileArgs) -> Result<(), CliError> {
    let (tx, rx) = parse_pairs(&args.input)?;
    let code = load_code(args.alist.as_deref().or(cfg.reconciliation.alist_path.as_deref()))?;
    let dimension = args.dimension.unwrap_or(cfg.reconciliation.dimension);

    let frame = CorrelatedFrame { alice: &tx, bob: &rx };
    let mut rng = RngStream::new(cfg.seed, 0, StreamPurpose::ReconciliationBits);
    let report = run_reconciliation(&[frame], &code, dimension, &mut rng)
        .map_err(|e| CliError::usage(format!("reconcile: {e}")))?;

    let out = ReconcileOutput {
        pairs: tx.len(),
        code_n: code.n,
        code_rate: report.code_rate,
        dimension,
        codewords_attempted: report.codewords_attempted,
        codewords_converged: report.codewords_converged,
        net_bits: report.net_bits,
        fer_measured: report.fer_measured,
        beta_measured: report.beta_measured,
        snr_measured: report.snr_measured,
    };
    let text = serde_json::to_string_pretty(&out)
        .map_err(|e| CliError::io(format!("cannot serialize report: {e}")))?;
    println!("{text}");
    Ok(())
}
