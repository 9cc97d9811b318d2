//! Flooding sum-product LDPC decoder.

use super::alist::ParityCheckMatrix;
use super::md::LLR_CAP;
use crate::error::{CvqkdError, Result};

/// Default iteration budget.
pub const DEFAULT_MAX_ITERS: usize = 200;

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iters: usize,
}

/// Sum-product decoding with a flooding schedule.
///
/// Each iteration runs a full check pass and variable pass, then tests the
/// syndrome of the hard decisions; a clean input therefore reports
/// convergence after one iteration. Messages are capped at +-50.
pub fn ldpc_decode(
    llr: &[f64],
    h: &ParityCheckMatrix,
    max_iters: usize,
) -> Result<DecodeResult> {
    if llr.len() != h.n {
        return Err(CvqkdError::invalid(format!(
            "ldpc_decode: {} LLRs for a code of length {}",
            llr.len(),
            h.n
        )));
    }
    if max_iters == 0 {
        return Err(CvqkdError::invalid("ldpc_decode: max_iters must be >= 1"));
    }
    if llr.iter().any(|x| !x.is_finite()) {
        return Err(CvqkdError::invalid("ldpc_decode: non-finite LLR"));
    }

    // Check-to-variable messages, one per edge, aligned with h.rows.
    let mut c2v: Vec<Vec<f64>> = h.rows.iter().map(|r| vec![0.0; r.len()]).collect();
    let mut totals: Vec<f64> = llr.to_vec();
    let mut bits = vec![0u8; h.n];

    for iter in 1..=max_iters {
        // Check pass. Exclude-self products via prefix/suffix arrays to
        // avoid dividing by tanh values near zero or one.
        for (r, row) in h.rows.iter().enumerate() {
            let deg = row.len();
            let tanhs: Vec<f64> = row
                .iter()
                .zip(&c2v[r])
                .map(|(&v, &old)| {
                    let v2c = (totals[v] - old).clamp(-LLR_CAP, LLR_CAP);
                    (v2c / 2.0).tanh()
                })
                .collect();
            let mut prefix = vec![1.0; deg + 1];
            for j in 0..deg {
                prefix[j + 1] = prefix[j] * tanhs[j];
            }
            let mut suffix = vec![1.0; deg + 1];
            for j in (0..deg).rev() {
                suffix[j] = suffix[j + 1] * tanhs[j];
            }
            for j in 0..deg {
                let prod = prefix[j] * suffix[j + 1];
                c2v[r][j] = if prod.abs() >= 1.0 {
                    prod.signum() * LLR_CAP
                } else {
                    (2.0 * prod.atanh()).clamp(-LLR_CAP, LLR_CAP)
                };
            }
        }

        // Variable pass: fold the fresh check messages into the totals.
        totals.copy_from_slice(llr);
        for (r, row) in h.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                totals[v] += c2v[r][j];
            }
        }
        for (v, t) in totals.iter().enumerate() {
            bits[v] = (*t < 0.0) as u8;
        }

        if h.syndrome_is_zero(&bits)? {
            return Ok(DecodeResult {
                bits,
                converged: true,
                iters: iter,
            });
        }
    }

    Ok(DecodeResult {
        bits,
        converged: false,
        iters: max_iters,
    })
}
