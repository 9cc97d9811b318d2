//! Unscented Kalman filter for carrier phase: state [phase, frequency
//! residual], random-walk dynamics, and the pilot baseband sample embedded
//! as a two-component measurement A [cos phi, sin phi]. The embedding keeps
//! the update free of angle wrapping, so the tracked phase is continuous
//! (unwrapped) by construction.

use nalgebra::{Matrix2, Vector2};

use super::pilot::PilotBaseband;
use crate::error::{CvqkdError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfConfig {
    /// Sigma-point spread.
    pub alpha: f64,
    /// Prior-distribution weighting (2 is optimal for Gaussians).
    pub beta: f64,
    /// Secondary scaling.
    pub kappa: f64,
    /// Phase random-walk variance per filter step, rad^2.
    pub process_noise_phase: f64,
    /// Frequency-residual random-walk variance per step.
    pub process_noise_freq: f64,
    /// Measurement noise per quadrature of the pilot baseband.
    pub measurement_noise: f64,
    /// Pilot tone amplitude in the baseband.
    pub pilot_amplitude: f64,
    /// [phase, frequency residual per step].
    pub initial_state: [f64; 2],
    /// Diagonal of the initial covariance.
    pub initial_covariance: [f64; 2],
}

impl Default for UkfConfig {
    fn default() -> Self {
        UkfConfig {
            alpha: 1e-3,
            beta: 2.0,
            kappa: 0.0,
            // 200 Hz combined linewidth stepped at 20 MBaud.
            process_noise_phase: 2.0 * std::f64::consts::PI * 200.0 / 20e6,
            process_noise_freq: 1e-12,
            measurement_noise: 1.0,
            pilot_amplitude: 1.0,
            initial_state: [0.0, 0.0],
            initial_covariance: [10.0, 1e-6],
        }
    }
}

impl UkfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(CvqkdError::invalid(format!("ukf alpha must be positive, got {}", self.alpha)));
        }
        if !(self.process_noise_phase >= 0.0 && self.process_noise_freq >= 0.0) {
            return Err(CvqkdError::invalid("ukf process noises must be nonnegative".to_string()));
        }
        if !(self.measurement_noise >= 0.0) {
            return Err(CvqkdError::invalid("ukf measurement noise must be nonnegative".to_string()));
        }
        if !(self.pilot_amplitude > 0.0) {
            return Err(CvqkdError::invalid("ukf pilot amplitude must be positive".to_string()));
        }
        if self.initial_covariance.iter().any(|&v| v < 0.0) {
            return Err(CvqkdError::invalid("ukf initial covariance must be nonnegative".to_string()));
        }
        Ok(())
    }
}

/// Tracked phase, one entry per input sample, plus the filter's own estimate
/// of its residual phase error variance.
#[derive(Debug, Clone)]
pub struct PhaseEstimate {
    pub phases: Vec<f64>,
    pub rate_hz: f64,
    /// Mean posterior phase variance over the settled part of the frame,
    /// rad^2. NaN when the estimator has no such notion (baseline).
    pub v_est: f64,
    pub converged: bool,
}

/// PSD-tolerant lower Cholesky of a symmetric 2x2. Semidefinite inputs (and
/// tiny negative eigenvalues from roundoff) succeed; real indefiniteness
/// fails.
pub(crate) fn chol2(p: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let a = p[(0, 0)];
    let b = p[(1, 0)];
    let c = p[(1, 1)];
    let scale = a.abs().max(c.abs()).max(1e-300);
    let tol = 1e-12 * scale;
    if a < -tol || c < -tol {
        return None;
    }
    let l00 = a.max(0.0).sqrt();
    let l10 = if l00 > 0.0 {
        b / l00
    } else if b.abs() <= tol.sqrt() {
        0.0
    } else {
        return None;
    };
    let d = c - l10 * l10;
    if d < -tol {
        return None;
    }
    let l11 = d.max(0.0).sqrt();
    Some(Matrix2::new(l00, 0.0, l10, l11))
}

/// Run the tracker over a pilot baseband stream.
pub fn ukf_track(pilot: &PilotBaseband, cfg: &UkfConfig) -> Result<PhaseEstimate> {
    cfg.validate()?;
    if pilot.samples.is_empty() {
        return Err(CvqkdError::invalid("ukf_track: empty pilot stream"));
    }
    let n_steps = pilot.samples.len();
    let nf = 2.0;
    let lambda = cfg.alpha * cfg.alpha * (nf + cfg.kappa) - nf;
    let gamma = (nf + lambda).sqrt();
    let wm0 = lambda / (nf + lambda);
    let wc0 = wm0 + 1.0 - cfg.alpha * cfg.alpha + cfg.beta;
    let wi = 0.5 / (nf + lambda);
    let amp = cfg.pilot_amplitude;
    let q = Matrix2::new(cfg.process_noise_phase, 0.0, 0.0, cfg.process_noise_freq);
    let r = cfg.measurement_noise;

    let mut x = Vector2::new(cfg.initial_state[0], cfg.initial_state[1]);
    let mut p = Matrix2::new(cfg.initial_covariance[0], 0.0, 0.0, cfg.initial_covariance[1]);
    let mut jittered = false;
    let mut phases = Vec::with_capacity(n_steps);
    let mut p_tail_sum = 0.0;
    let mut p_tail_count = 0usize;
    let tail_start = n_steps / 2;

    for (step, z) in pilot.samples.iter().enumerate() {
        if step > 0 {
            // Linear dynamics: exact prediction.
            x = Vector2::new(x[0] + x[1], x[1]);
            let f = Matrix2::new(1.0, 1.0, 0.0, 1.0);
            p = f * p * f.transpose() + q;
        }

        let l = match chol2(&p) {
            Some(l) => l,
            None => {
                if jittered {
                    return Err(CvqkdError::UkfDivergence(format!(
                        "covariance lost positive definiteness twice at step {step}"
                    )));
                }
                jittered = true;
                p += Matrix2::identity() * 1e-12;
                chol2(&p).ok_or_else(|| {
                    CvqkdError::UkfDivergence(format!(
                        "covariance not repairable by jitter at step {step}"
                    ))
                })?
            }
        };

        // Sigma points through the measurement embedding.
        let spread = [l.column(0).into_owned() * gamma, l.column(1).into_owned() * gamma];
        let chis = [
            x,
            x + spread[0],
            x - spread[0],
            x + spread[1],
            x - spread[1],
        ];
        let h = |v: &Vector2<f64>| Vector2::new(amp * v[0].cos(), amp * v[0].sin());
        let zs: Vec<Vector2<f64>> = chis.iter().map(h).collect();
        let mut z_hat = zs[0] * wm0;
        for zi in zs.iter().skip(1) {
            z_hat += zi * wi;
        }
        let mut s = Matrix2::identity() * r;
        let mut c = Matrix2::zeros();
        for (i, (chi, zi)) in chis.iter().zip(zs.iter()).enumerate() {
            let w = if i == 0 { wc0 } else { wi };
            let dz = zi - z_hat;
            let dx = chi - x;
            s += (dz * dz.transpose()) * w;
            c += (dx * dz.transpose()) * w;
        }

        let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        if det > 1e-280 {
            let s_inv = Matrix2::new(s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]) / det;
            let k = c * s_inv;
            let innov = Vector2::new(z.re, z.im) - z_hat;
            x += k * innov;
            p -= k * s * k.transpose();
            p = (p + p.transpose()) * 0.5;
        }
        // A singular innovation covariance only happens in the degenerate
        // noise-free configuration; prediction is already exact there.

        if !x[0].is_finite() {
            return Err(CvqkdError::UkfDivergence(format!("non-finite state at step {step}")));
        }
        phases.push(x[0]);
        if step >= tail_start {
            p_tail_sum += p[(0, 0)];
            p_tail_count += 1;
        }
    }

    let v_est = p_tail_sum / p_tail_count.max(1) as f64;
    let converged = v_est.is_finite() && v_est < 1.0;
    Ok(PhaseEstimate { phases, rate_hz: pilot.rate_hz, v_est, converged })
}

/// Baseline estimator: per-sample argument, unwrapped. Cycle-slips at low
/// pilot SNR, which is exactly why the tracker exists.
pub fn naive_phase_estimate(pilot: &PilotBaseband) -> Result<PhaseEstimate> {
    if pilot.samples.is_empty() {
        return Err(CvqkdError::invalid("naive_phase_estimate: empty pilot stream"));
    }
    let mut phases: Vec<f64> = pilot.samples.iter().map(|z| z.arg()).collect();
    unwrap_phases(&mut phases);
    Ok(PhaseEstimate { phases, rate_hz: pilot.rate_hz, v_est: f64::NAN, converged: true })
}

/// In-place phase unwrapping: successive differences folded into (-pi, pi].
pub fn unwrap_phases(phases: &mut [f64]) {
    let two_pi = 2.0 * std::f64::consts::PI;
    for i in 1..phases.len() {
        let mut d = phases[i] - phases[i - 1];
        d -= two_pi * (d / two_pi).round();
        phases[i] = phases[i - 1] + d;
    }
}

/// Linearly interpolate a symbol-rate phase track onto the sample grid
/// (factor `upsample`), holding the edges.
pub fn interpolate_phases(phases: &[f64], upsample: usize, out_len: usize) -> Vec<f64> {
    assert!(!phases.is_empty() && upsample >= 1);
    (0..out_len)
        .map(|k| {
            let pos = k as f64 / upsample as f64;
            let j = pos.floor() as usize;
            if j + 1 >= phases.len() {
                phases[phases.len() - 1]
            } else {
                let w = pos - j as f64;
                phases[j] * (1.0 - w) + phases[j + 1] * w
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{RngStream, StreamPurpose};
    use num_complex::Complex64;

    fn synthetic_pilot(
        n: usize,
        amp: f64,
        r_per_quad: f64,
        q_phase: f64,
        seed: u64,
    ) -> (PilotBaseband, Vec<f64>) {
        let mut rng = RngStream::new(seed, 0, StreamPurpose::ChannelPhase);
        let mut truth = Vec::with_capacity(n);
        let mut phi = 0.3;
        for _ in 0..n {
            truth.push(phi);
            phi += rng.gaussian(0.0, q_phase).unwrap();
        }
        let mut nrng = RngStream::new(seed, 1, StreamPurpose::Shot);
        let samples: Vec<Complex64> = truth
            .iter()
            .map(|&p| {
                Complex64::from_polar(amp, p)
                    + Complex64::new(
                        nrng.gaussian(0.0, r_per_quad).unwrap(),
                        nrng.gaussian(0.0, r_per_quad).unwrap(),
                    )
            })
            .collect();
        (PilotBaseband { samples, rate_hz: 20e6, decimation: 10 }, truth)
    }

    fn mse(a: &[f64], b: &[f64], skip: usize) -> f64 {
        let n = a.len() - skip;
        a.iter()
            .zip(b)
            .skip(skip)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn degenerate_filter_reproduces_truth_exactly() {
        let n = 500;
        let phi0 = 0.4;
        let omega = 0.01;
        let samples: Vec<Complex64> =
            (0..n).map(|k| Complex64::from_polar(2.0, phi0 + omega * k as f64)).collect();
        let pilot = PilotBaseband { samples, rate_hz: 1e6, decimation: 1 };
        let cfg = UkfConfig {
            process_noise_phase: 0.0,
            process_noise_freq: 0.0,
            measurement_noise: 0.0,
            pilot_amplitude: 2.0,
            initial_state: [phi0, omega],
            initial_covariance: [0.0, 0.0],
            ..UkfConfig::default()
        };
        let est = ukf_track(&pilot, &cfg).unwrap();
        for (k, &p) in est.phases.iter().enumerate() {
            let truth = phi0 + omega * k as f64;
            assert!((p - truth).abs() < 1e-12, "step {k}: {p} vs {truth}");
        }
    }

    #[test]
    fn tracks_wiener_phase_well_below_measurement_noise() {
        let q = 6.3e-5;
        let r = 0.0885;
        let (pilot, truth) = synthetic_pilot(20_000, 1.0, r, q, 5);
        let cfg = UkfConfig {
            process_noise_phase: q,
            process_noise_freq: 1e-12,
            measurement_noise: r,
            pilot_amplitude: 1.0,
            initial_state: [0.3, 0.0],
            initial_covariance: [0.1, 1e-8],
            ..UkfConfig::default()
        };
        let est = ukf_track(&pilot, &cfg).unwrap();
        assert!(est.converged);
        let ukf_mse = mse(&est.phases, &truth, 500);
        let naive = naive_phase_estimate(&pilot).unwrap();
        let naive_mse = mse(&naive.phases, &truth, 500);
        // Steady state ~ sqrt(q * r / amp^2), far below the per-sample noise.
        assert!(ukf_mse < naive_mse / 10.0, "ukf {ukf_mse:.3e} naive {naive_mse:.3e}");
        assert!(
            est.v_est / ukf_mse > 0.4 && est.v_est / ukf_mse < 2.5,
            "self-estimate {:.3e} vs empirical {ukf_mse:.3e}",
            est.v_est
        );
    }

    #[test]
    fn survives_and_beats_naive_at_low_snr() {
        // Per-sample phase noise ~ 0.7 rad: the naive estimator cycle-slips.
        let q = 1e-4;
        let r = 0.5;
        let (pilot, truth) = synthetic_pilot(30_000, 1.0, r, q, 9);
        let cfg = UkfConfig {
            process_noise_phase: q,
            process_noise_freq: 1e-12,
            measurement_noise: r,
            pilot_amplitude: 1.0,
            initial_state: [0.3, 0.0],
            initial_covariance: [0.1, 1e-8],
            ..UkfConfig::default()
        };
        let est = ukf_track(&pilot, &cfg).unwrap();
        let ukf_mse = mse(&est.phases, &truth, 1000);
        let naive = naive_phase_estimate(&pilot).unwrap();
        let naive_mse = mse(&naive.phases, &truth, 1000);
        assert!(ukf_mse < 0.1, "ukf mse {ukf_mse}");
        assert!(naive_mse > 5.0 * ukf_mse, "naive {naive_mse:.3e} ukf {ukf_mse:.3e}");
    }

    #[test]
    fn mismatched_process_noise_still_converges() {
        let q = 6.3e-5;
        let r = 0.0885;
        let (pilot, truth) = synthetic_pilot(20_000, 1.0, r, q, 13);
        let cfg = UkfConfig {
            process_noise_phase: 2.0 * q,
            process_noise_freq: 1e-12,
            measurement_noise: r,
            pilot_amplitude: 1.0,
            initial_state: [0.3, 0.0],
            initial_covariance: [0.1, 1e-8],
            ..UkfConfig::default()
        };
        let est = ukf_track(&pilot, &cfg).unwrap();
        assert!(est.converged);
        let ukf_mse = mse(&est.phases, &truth, 500);
        assert!(ukf_mse < 0.01, "mismatched-q mse {ukf_mse}");
    }

    #[test]
    fn cholesky_accepts_psd_rejects_indefinite() {
        assert!(chol2(&Matrix2::zeros()).is_some());
        assert!(chol2(&Matrix2::new(1.0, 0.5, 0.5, 1.0)).is_some());
        // Rank one.
        assert!(chol2(&Matrix2::new(1.0, 1.0, 1.0, 1.0)).is_some());
        // Indefinite.
        assert!(chol2(&Matrix2::new(1.0, 2.0, 2.0, 1.0)).is_none());
        assert!(chol2(&Matrix2::new(-1.0, 0.0, 0.0, 1.0)).is_none());
    }

    #[test]
    fn unwrap_handles_jumps() {
        let mut p = vec![3.0, -3.0, 3.0, -3.0];
        unwrap_phases(&mut p);
        for w in p.windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
    }

    #[test]
    fn interpolation_hits_knots_and_midpoints() {
        let phases = vec![0.0, 1.0, 3.0];
        let out = interpolate_phases(&phases, 2, 6);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 0.5);
        assert_eq!(out[2], 1.0);
        assert_eq!(out[3], 2.0);
        assert_eq!(out[4], 3.0);
        assert_eq!(out[5], 3.0);
    }
}
