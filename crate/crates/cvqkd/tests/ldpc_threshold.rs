//! Waterfall behavior of the shipped rate-1/2 code on a BPSK-AWGN channel,
//! plus the end-to-end reconciliation failure path when the correlation is
//! hopeless. FER must collapse from ~1 to ~0 across a plausible SNR window
//! without non-monotone jumps.

use cvqkd::core::{gaussian_draw, RngStream, StreamPurpose};
use cvqkd::reconciliation::{
    default_code, ldpc_decode, run_reconciliation, CorrelatedFrame, SystematicEncoder,
    DEFAULT_MAX_ITERS,
};
use num_complex::Complex64;

/// Frame error rate of the default code at a given channel SNR (= 1/sigma^2
/// for unit-energy BPSK), averaged over `trials` random codewords.
fn fer_at_snr(snr: f64, trials: usize, seed: u64) -> f64 {
    let h = default_code();
    let enc = SystematicEncoder::from_parity_check(h).unwrap();
    let sigma2 = 1.0 / snr;
    let mut failures = 0usize;
    for trial in 0..trials {
        let mut rng = RngStream::new(seed, trial as u64, StreamPurpose::ReconciliationBits);
        let info: Vec<u8> = (0..enc.k()).map(|_| (rng.next_u64() & 1) as u8).collect();
        let cw = enc.encode(&info).unwrap();
        let noise = gaussian_draw(&mut rng, cw.len(), sigma2).unwrap();
        let llr: Vec<f64> = cw
            .iter()
            .zip(&noise)
            .map(|(&b, &w)| {
                let y = if b == 0 { 1.0 } else { -1.0 } + w;
                2.0 * y / sigma2
            })
            .collect();
        let out = ldpc_decode(&llr, h, DEFAULT_MAX_ITERS).unwrap();
        if !out.converged || out.bits != cw {
            failures += 1;
        }
    }
    failures as f64 / trials as f64
}

#[test]
fn default_code_has_a_waterfall() {
    let grid = [1.0, 1.4, 1.8, 2.2, 2.6, 3.0];
    let trials = 24;
    let fer: Vec<f64> = grid.iter().map(|&s| fer_at_snr(s, trials, 4242)).collect();

    assert!(fer[0] >= 0.9, "FER at snr {} is {}, expected near-certain failure", grid[0], fer[0]);
    assert!(
        *fer.last().unwrap() <= 0.1,
        "FER at snr {} is {}, expected near-certain success",
        grid.last().unwrap(),
        fer.last().unwrap()
    );
    assert!(
        fer.iter().any(|&f| f > 0.0 && f < 1.0),
        "no transition point observed: {fer:?}"
    );
    for w in fer.windows(2) {
        assert!(
            w[1] <= w[0] + 0.15,
            "FER rose with SNR beyond sampling noise: {fer:?}"
        );
    }
}

#[test]
fn hopeless_snr_fails_every_codeword() {
    let fer = fer_at_snr(0.15, 30, 7);
    assert_eq!(fer, 1.0, "decoder claimed success far below threshold");
}

#[test]
fn reconciliation_reports_total_failure_on_weak_correlation() {
    // Nearly uncorrelated quadratures: the measured SNR is far below the
    // code threshold so every codeword must fail and no key bits survive.
    let h = default_code();
    let n_sym = h.n;
    let mut owned: Vec<(Vec<Complex64>, Vec<Complex64>)> = Vec::new();
    for fid in 0..4u64 {
        let mut ra = RngStream::new(99, fid, StreamPurpose::TxSymbols);
        let mut rb = RngStream::new(99, fid, StreamPurpose::ChannelNoise);
        let ar = gaussian_draw(&mut ra, n_sym, 1.8).unwrap();
        let ai = gaussian_draw(&mut ra, n_sym, 1.8).unwrap();
        let alice: Vec<Complex64> = ar
            .iter()
            .zip(&ai)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        let bob: Vec<Complex64> = alice
            .iter()
            .map(|z| {
                let wr = rb.gaussian(0.0, 1.0).unwrap();
                let wi = rb.gaussian(0.0, 1.0).unwrap();
                0.01 * z + Complex64::new(wr, wi)
            })
            .collect();
        owned.push((alice, bob));
    }
    let frames: Vec<CorrelatedFrame> = owned
        .iter()
        .map(|(a, b)| CorrelatedFrame { alice: a, bob: b })
        .collect();
    let mut rng = RngStream::run_level(99, StreamPurpose::ReconciliationBits);
    let report = run_reconciliation(&frames, h, 8, &mut rng).unwrap();
    assert_eq!(report.fer_measured, 1.0, "expected every codeword to fail");
    assert_eq!(report.net_bits, 0, "no information should survive");
    assert!(report.codewords_attempted > 0);
}
