//! Parameter estimation and secret key rate evaluation.
//!
//! Works entirely in shot-noise units with vacuum variance 1 per quadrature.
//! The channel estimators invert the measurement model
//! `V_meas = (tau*eta/2) V_mod + 1 + t + (tau/2) xi` per quadrature, so the
//! reported excess noise is referred to the channel output, before the
//! trusted detector. The Holevo bound treats detection efficiency and
//! electronic noise as trusted: the detector is modelled as a beamsplitter
//! mixing the signal with one arm of an EPR state whose variance reproduces
//! the electronic noise, and only the channel is attributed to Eve.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::core::LinkParams;
use crate::error::{CvqkdError, Result};

/// Minimum number of symbol pairs accepted by the channel estimator.
pub const MIN_ESTIMATION_PAIRS: usize = 1_000;

/// Transmittance estimates above this are treated as a calibration fault
/// rather than estimator noise.
pub const ETA_HAT_MAX: f64 = 1.05;

/// Symplectic eigenvalues below `1 - PHYSICALITY_TOL` mean the covariance
/// matrix does not describe a quantum state.
const PHYSICALITY_TOL: f64 = 1e-9;

/// Per-quadrature channel estimates from disclosed symbol pairs.
#[derive(Debug, Clone, Copy)]
pub struct NoiseBudget {
    /// Estimated channel transmittance, `2 g^2 / tau` with `g^2` averaged
    /// over quadratures.
    pub eta_hat: f64,
    /// Per-quadrature gain estimates (I = real part, Q = imaginary part).
    pub g_hat_i: f64,
    pub g_hat_q: f64,
    /// Channel-output-referred excess noise per quadrature, SNU. Kept signed:
    /// negative estimates are legitimate statistical fluctuations and
    /// averaging over frames must not fold them.
    pub xi_i_snu: f64,
    pub xi_q_snu: f64,
    /// Trusted electronic noise assumed during estimation, SNU.
    pub t_snu: f64,
    /// Number of disclosed pairs the estimate is based on.
    pub n_pairs: usize,
    /// Residual phase variance from carrier recovery, rad^2. NaN until a
    /// phase tracker fills it in.
    pub v_est: f64,
}

impl NoiseBudget {
    /// Excess noise averaged over the two quadratures, SNU.
    pub fn xi_mean_snu(&self) -> f64 {
        0.5 * (self.xi_i_snu + self.xi_q_snu)
    }
}

/// Estimate transmittance and excess noise from disclosed symbol pairs.
///
/// `tx` are Alice's modulation symbols (variance `V_mod` per quadrature),
/// `rx` the SNU-normalized received symbols. Each quadrature is fit
/// separately with the least-squares gain `cov(tx, rx) / var(tx)`; the
/// remaining variance beyond vacuum and trusted electronics is referred back
/// to the channel output through the detector factor `tau/2`.
pub fn estimate_channel(
    tx: &[Complex64],
    rx: &[Complex64],
    tau: f64,
    t_snu: f64,
) -> Result<NoiseBudget> {
    if tx.len() != rx.len() {
        return Err(CvqkdError::invalid(format!(
            "estimate_channel: {} tx pairs vs {} rx pairs",
            tx.len(),
            rx.len()
        )));
    }
    if tx.len() < MIN_ESTIMATION_PAIRS {
        return Err(CvqkdError::invalid(format!(
            "estimate_channel: {} pairs, need at least {MIN_ESTIMATION_PAIRS}",
            tx.len()
        )));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(CvqkdError::invalid(format!(
            "estimate_channel: tau {tau} outside (0, 1]"
        )));
    }
    if t_snu < 0.0 {
        return Err(CvqkdError::invalid(format!(
            "estimate_channel: negative trusted noise {t_snu}"
        )));
    }

    let quad = |pick: fn(&Complex64) -> f64| -> (f64, f64, f64) {
        let n = tx.len() as f64;
        let (mut ma, mut mb) = (0.0, 0.0);
        for (a, b) in tx.iter().zip(rx) {
            ma += pick(a);
            mb += pick(b);
        }
        ma /= n;
        mb /= n;
        let (mut va, mut vb, mut cab) = (0.0, 0.0, 0.0);
        for (a, b) in tx.iter().zip(rx) {
            let da = pick(a) - ma;
            let db = pick(b) - mb;
            va += da * da;
            vb += db * db;
            cab += da * db;
        }
        (va / n, vb / n, cab / n)
    };

    let (va_i, vb_i, c_i) = quad(|z| z.re);
    let (va_q, vb_q, c_q) = quad(|z| z.im);
    if va_i <= 0.0 || va_q <= 0.0 {
        return Err(CvqkdError::invalid(
            "estimate_channel: degenerate tx variance",
        ));
    }

    let g_i = c_i / va_i;
    let g_q = c_q / va_q;
    let g_sq = 0.5 * (g_i * g_i + g_q * g_q);
    let eta_hat = 2.0 * g_sq / tau;
    if eta_hat > ETA_HAT_MAX {
        return Err(CvqkdError::Unphysical(format!(
            "estimated transmittance {eta_hat:.4} exceeds {ETA_HAT_MAX}"
        )));
    }

    let xi_i = (vb_i - g_i * g_i * va_i - 1.0 - t_snu) / (tau / 2.0);
    let xi_q = (vb_q - g_q * g_q * va_q - 1.0 - t_snu) / (tau / 2.0);

    Ok(NoiseBudget {
        eta_hat,
        g_hat_i: g_i,
        g_hat_q: g_q,
        xi_i_snu: xi_i,
        xi_q_snu: xi_q,
        t_snu,
        n_pairs: tx.len(),
        v_est: f64::NAN,
    })
}

/// Excess noise induced by residual phase error of variance `v_est` rad^2 on
/// a Gaussian ensemble of variance `v_mod` per quadrature:
/// `2 v_mod (1 - exp(-v_est / 2))`.
///
/// Grows linearly as `v_mod * v_est` for small variance and saturates at
/// `2 v_mod` when the carrier is completely lost.
pub fn phase_excess_noise(v_mod_snu: f64, v_est: f64) -> Result<f64> {
    if v_mod_snu <= 0.0 {
        return Err(CvqkdError::invalid(format!(
            "phase_excess_noise: v_mod {v_mod_snu} must be positive"
        )));
    }
    if !(v_est >= 0.0) {
        return Err(CvqkdError::invalid(format!(
            "phase_excess_noise: phase variance {v_est} must be nonnegative"
        )));
    }
    Ok(2.0 * v_mod_snu * (1.0 - (-v_est / 2.0).exp()))
}

/// Operating point for a security evaluation. `xi_snu` is channel-output
/// referred, like the estimator output.
#[derive(Debug, Clone, Copy)]
pub struct SecurityInputs {
    pub v_mod_snu: f64,
    pub eta: f64,
    pub tau: f64,
    pub t_snu: f64,
    pub xi_snu: f64,
    pub beta: f64,
    pub fer: f64,
}

impl SecurityInputs {
    /// Design-point inputs: the configured excess noise budget stands in for
    /// a measurement.
    pub fn from_link(params: &LinkParams) -> Self {
        SecurityInputs {
            v_mod_snu: params.v_mod_snu,
            eta: params.eta,
            tau: params.tau,
            t_snu: params.t_snu,
            xi_snu: params.u_snu,
            beta: params.beta,
            fer: params.fer,
        }
    }

    /// Replace the design transmittance and excess noise with estimates.
    pub fn with_estimates(params: &LinkParams, eta_hat: f64, xi_hat_snu: f64) -> Self {
        SecurityInputs {
            eta: eta_hat,
            xi_snu: xi_hat_snu,
            ..Self::from_link(params)
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.v_mod_snu > 0.0
            && self.eta > 0.0
            && self.eta <= 1.0
            && self.tau > 0.0
            && self.tau <= 1.0
            && self.t_snu >= 0.0
            && self.beta > 0.0
            && self.beta <= 1.0
            && (0.0..1.0).contains(&self.fer)
            && self.xi_snu.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CvqkdError::invalid(format!(
                "SecurityInputs out of range: {self:?}"
            )))
        }
    }
}

/// Per-quadrature SNR of the heterodyne measurement:
/// `(tau eta / 2) V_mod / (1 + t + (tau/2) xi)`.
pub fn snr_per_quadrature(inputs: &SecurityInputs) -> f64 {
    (inputs.tau * inputs.eta / 2.0) * inputs.v_mod_snu
        / (1.0 + inputs.t_snu + (inputs.tau / 2.0) * inputs.xi_snu)
}

/// Shannon mutual information of the heterodyne link in bits per symbol.
/// Two quadratures at half a bit per use each: `log2(1 + SNR)`.
pub fn mutual_information(inputs: &SecurityInputs) -> f64 {
    (1.0 + snr_per_quadrature(inputs)).log2()
}

/// Von Neumann entropy contribution of one thermal mode with mean photon
/// number `nbar`: `(nbar+1) log2(nbar+1) - nbar log2(nbar)`.
pub fn entropy_g(nbar: f64) -> f64 {
    if nbar <= 1e-12 {
        return 0.0;
    }
    (nbar + 1.0) * (nbar + 1.0).log2() - nbar * nbar.log2()
}

/// Symplectic eigenvalues of a covariance matrix in SNU, largest first.
///
/// `Omega gamma` has purely imaginary eigenvalues, a case where unsymmetric
/// QR iterations are unreliable, so the computation goes through symmetric
/// eigenproblems only: with the Cholesky factor `gamma = L L^T`, the matrix
/// `K = L^T Omega L` is antisymmetric and similar to `Omega gamma`, and the
/// symplectic eigenvalues are the square roots of the (pairwise repeated)
/// eigenvalues of `K^T K`.
pub fn symplectic_eigenvalues(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = gamma.nrows();
    if dim == 0 || dim % 2 != 0 || gamma.ncols() != dim {
        return Err(CvqkdError::invalid(format!(
            "symplectic_eigenvalues: {}x{} matrix is not an even-dimensional square",
            gamma.nrows(),
            gamma.ncols()
        )));
    }
    if gamma.iter().any(|x| !x.is_finite()) {
        return Err(CvqkdError::invalid(
            "symplectic_eigenvalues: non-finite covariance entry",
        ));
    }
    let scale = gamma.amax().max(1.0);
    let asym = (gamma - gamma.transpose()).amax();
    if asym > 1e-6 * scale {
        return Err(CvqkdError::invalid(
            "symplectic_eigenvalues: covariance not symmetric",
        ));
    }
    let sym = (gamma + gamma.transpose()) * 0.5;

    let chol = match nalgebra::Cholesky::new(sym.clone()) {
        Some(c) => c,
        None => {
            // Conditioning can leave the matrix semidefinite to rounding.
            let mut bumped = sym;
            for i in 0..dim {
                bumped[(i, i)] += 1e-12 * scale;
            }
            nalgebra::Cholesky::new(bumped).ok_or_else(|| {
                CvqkdError::Unphysical(
                    "covariance matrix is not positive semidefinite".to_string(),
                )
            })?
        }
    };
    let l = chol.l();

    let n_modes = dim / 2;
    let mut omega = DMatrix::zeros(dim, dim);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    let k_mat = l.transpose() * omega * &l;
    let gram = k_mat.transpose() * &k_mat;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut nus: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(nus.into_iter().step_by(2).take(n_modes).collect())
}

/// Von Neumann entropy of a Gaussian state in bits. Fails if any symplectic
/// eigenvalue is below 1 beyond numerical tolerance. The tolerance scales
/// with the covariance magnitude: eigenvalues near 1 extracted from a matrix
/// with large entries carry proportionally large rounding error.
pub fn gaussian_entropy(gamma: &DMatrix<f64>) -> Result<f64> {
    let nus = symplectic_eigenvalues(gamma)?;
    let tol = PHYSICALITY_TOL * gamma.amax().max(1.0);
    let mut s = 0.0;
    for nu in &nus {
        if *nu < 1.0 - tol {
            return Err(CvqkdError::Unphysical(format!(
                "symplectic eigenvalue {nu} below 1: covariance is not a state"
            )));
        }
        s += entropy_g((nu.max(1.0) - 1.0) / 2.0);
    }
    Ok(s)
}

/// Breakdown of the Holevo bound evaluation.
#[derive(Debug, Clone)]
pub struct HolevoDetail {
    /// Entropy of Eve's state, bits.
    pub s_eve: f64,
    /// Entropy of Eve's state conditioned on Bob's outcome, bits.
    pub s_conditional: f64,
    /// Holevo bound `chi = S(E) - S(E|B)`, bits per symbol.
    pub chi: f64,
    pub nu_eve: Vec<f64>,
    pub nu_conditional: Vec<f64>,
}

fn diag2(s: f64) -> Matrix2<f64> {
    Matrix2::new(s, 0.0, 0.0, s)
}

fn sz2(s: f64) -> Matrix2<f64> {
    Matrix2::new(s, 0.0, 0.0, -s)
}

fn set_block(g: &mut DMatrix<f64>, mode_row: usize, mode_col: usize, block: &Matrix2<f64>) {
    for r in 0..2 {
        for c in 0..2 {
            g[(2 * mode_row + r, 2 * mode_col + c)] = block[(r, c)];
            g[(2 * mode_col + c, 2 * mode_row + r)] = block[(r, c)];
        }
    }
}

/// Condition a Gaussian state on a noisy heterodyne measurement of one mode:
/// `gamma_rest - C (gamma_m + sigma)^-1 C^T`.
fn condition_on_heterodyne(
    gamma_rest: &DMatrix<f64>,
    cross: &DMatrix<f64>,
    gamma_meas: &Matrix2<f64>,
    sigma: &Matrix2<f64>,
) -> Result<DMatrix<f64>> {
    let s = gamma_meas + sigma;
    let inv = s.try_inverse().ok_or_else(|| {
        CvqkdError::Unphysical("singular measured-mode covariance".to_string())
    })?;
    let inv_d = DMatrix::from_fn(2, 2, |r, c| inv[(r, c)]);
    Ok(gamma_rest - cross * inv_d * cross.transpose())
}

/// Holevo bound for collective attacks against Gaussian modulation with
/// heterodyne detection, trusted detection efficiency `tau` and trusted
/// electronic noise `t`.
///
/// Construction: Alice's modulation is purified by an EPR state of variance
/// `V_mod + 1`; the channel `(eta, xi)` acts on one arm; the detector is a
/// beamsplitter of transmittance `tau` mixing the signal with one arm of an
/// EPR pair whose variance `(1 + 2t - tau) / (1 - tau)` reproduces the
/// electronic noise at the output; Bob heterodynes the transmitted port. Eve
/// purifies the channel only, so `S(E) = S(AB)` before detection and
/// `S(E|B)` is the entropy of the undetected modes conditioned on the
/// heterodyne outcome.
pub fn holevo_detail(inputs: &SecurityInputs) -> Result<HolevoDetail> {
    inputs.validate()?;
    let v = inputs.v_mod_snu + 1.0;
    let t = inputs.t_snu;
    // The ancilla variance diverges as tau -> 1 while its coupling vanishes;
    // the product stays finite, so pull tau just inside 1 instead of
    // special-casing every consumer. 1e-6 keeps the ancilla variance around
    // 1e5, far from the f64 precision cliff in the conditioning step.
    let tau = if t > 1e-12 && inputs.tau > 1.0 - 1e-6 {
        1.0 - 1e-6
    } else {
        inputs.tau
    };

    let a = v;
    let b = inputs.eta * v + 1.0 - inputs.eta + inputs.xi_snu;
    let c_ab = (inputs.eta * (v * v - 1.0)).max(0.0).sqrt();

    let mut gamma_ab = DMatrix::zeros(4, 4);
    set_block(&mut gamma_ab, 0, 0, &diag2(a));
    set_block(&mut gamma_ab, 1, 1, &diag2(b));
    set_block(&mut gamma_ab, 0, 1, &sz2(c_ab));
    let nu_eve = symplectic_eigenvalues(&gamma_ab)?;
    let s_eve = gaussian_entropy(&gamma_ab)?;

    if t <= 1e-12 && tau >= 1.0 - 1e-12 {
        // Noiseless detector: heterodyne B directly.
        let g_cond = DMatrix::from_diagonal_element(2, 2, a - c_ab * c_ab / (b + 1.0));
        let nu_conditional = symplectic_eigenvalues(&g_cond)?;
        let s_conditional = gaussian_entropy(&g_cond)?;
        return Ok(HolevoDetail {
            s_eve,
            s_conditional,
            chi: s_eve - s_conditional,
            nu_eve,
            nu_conditional,
        });
    }

    let nu_det = (1.0 + 2.0 * t - tau) / (1.0 - tau);
    let c_det = (nu_det * nu_det - 1.0).max(0.0).sqrt();
    let st = tau.sqrt();
    let sr = (1.0 - tau).sqrt();

    // Modes after the detector beamsplitter: A, B2 (measured), F, G with
    // B2 = st*B + sr*F0 and F = -sr*B + st*F0.
    let g_b2 = diag2(tau * b + (1.0 - tau) * nu_det);
    let g_f = diag2((1.0 - tau) * b + tau * nu_det);
    let c_a_b2 = sz2(st * c_ab);
    let c_a_f = sz2(-sr * c_ab);
    let c_b2_f = diag2(st * sr * (nu_det - b));
    let c_b2_g = sz2(sr * c_det);
    let c_f_g = sz2(st * c_det);

    // Unmeasured block (A, F, G) and its cross-covariance with B2.
    let mut rest = DMatrix::zeros(6, 6);
    set_block(&mut rest, 0, 0, &diag2(a));
    set_block(&mut rest, 1, 1, &g_f);
    set_block(&mut rest, 2, 2, &diag2(nu_det));
    set_block(&mut rest, 0, 1, &c_a_f);
    set_block(&mut rest, 1, 2, &c_f_g);

    let mut cross = DMatrix::zeros(6, 2);
    for r in 0..2 {
        for c in 0..2 {
            cross[(r, c)] = c_a_b2[(r, c)];
            cross[(2 + r, c)] = c_b2_f[(c, r)];
            cross[(4 + r, c)] = c_b2_g[(c, r)];
        }
    }

    let g_cond = condition_on_heterodyne(&rest, &cross, &g_b2, &diag2(1.0))?;
    let nu_conditional = symplectic_eigenvalues(&g_cond)?;
    let s_conditional = gaussian_entropy(&g_cond)?;

    Ok(HolevoDetail {
        s_eve,
        s_conditional,
        chi: s_eve - s_conditional,
        nu_eve,
        nu_conditional,
    })
}

/// Holevo bound in bits per symbol. See [`holevo_detail`].
pub fn holevo_bound(inputs: &SecurityInputs) -> Result<f64> {
    Ok(holevo_detail(inputs)?.chi)
}

/// Independent evaluation of the same bound through an explicit entangling
/// cloner: Eve injects one arm of an EPR pair of variance
/// `W = 1 + xi / (1 - eta)` on a beamsplitter of transmittance `eta` and
/// keeps both her modes. Bob's trusted detector is folded into the
/// measurement as added Gaussian noise `(2 + 2t - tau) / tau` per
/// quadrature. Exists as a cross-check on [`holevo_detail`]; requires
/// `eta < 1` so the cloner variance is defined.
pub fn holevo_bound_via_cloner(inputs: &SecurityInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.eta >= 1.0 - 1e-9 {
        return Err(CvqkdError::invalid(
            "holevo_bound_via_cloner: cloner variance undefined at eta = 1",
        ));
    }
    let v = inputs.v_mod_snu + 1.0;
    let eta = inputs.eta;
    let w = 1.0 + inputs.xi_snu / (1.0 - eta);
    if w < 1.0 - PHYSICALITY_TOL {
        return Err(CvqkdError::Unphysical(format!(
            "cloner variance {w} below vacuum"
        )));
    }
    let c_w = (w * w - 1.0).max(0.0).sqrt();
    let se = eta.sqrt();
    let sre = (1.0 - eta).sqrt();

    // Eve keeps E1 and the reflected port E2' = se*E2 - sre*B; Bob receives
    // B' = se*B + sre*E2.
    let g_e1 = diag2(w);
    let g_e2 = diag2(eta * w + (1.0 - eta) * v);
    let c_e1_e2 = sz2(se * c_w);
    let c_e1_b = sz2(sre * c_w);
    let c_e2_b = diag2(se * sre * (w - v));
    let g_b = diag2(eta * v + (1.0 - eta) * w);

    let mut g_eve = DMatrix::zeros(4, 4);
    set_block(&mut g_eve, 0, 0, &g_e1);
    set_block(&mut g_eve, 1, 1, &g_e2);
    set_block(&mut g_eve, 0, 1, &c_e1_e2);
    let s_eve = gaussian_entropy(&g_eve)?;

    let mut cross = DMatrix::zeros(4, 2);
    for r in 0..2 {
        for c in 0..2 {
            cross[(r, c)] = c_e1_b[(r, c)];
            cross[(2 + r, c)] = c_e2_b[(r, c)];
        }
    }
    let tau = inputs.tau;
    let t = inputs.t_snu;
    let sigma_m = diag2((2.0 + 2.0 * t - tau) / tau);
    let g_cond = condition_on_heterodyne(&g_eve, &cross, &g_b, &sigma_m)?;
    let s_cond = gaussian_entropy(&g_cond)?;
    Ok(s_eve - s_cond)
}

/// Key rate evaluation at one operating point.
#[derive(Debug, Clone, Copy)]
pub struct KeyRateResult {
    pub snr: f64,
    pub mutual_information_bits: f64,
    pub holevo_bits: f64,
    /// `(1 - FER) * max(0, beta * I_AB - chi)`, bits per symbol.
    pub key_fraction_bits: f64,
    /// `key_fraction_bits * baud`, bits per second.
    pub key_rate_bps: f64,
}

/// Evaluate the asymptotic secret key rate
/// `(1 - FER) * max(0, beta * I_AB - chi)` and scale it by the symbol rate.
pub fn evaluate_key_rate(inputs: &SecurityInputs, baud_rate_hz: f64) -> Result<KeyRateResult> {
    if baud_rate_hz <= 0.0 {
        return Err(CvqkdError::invalid(format!(
            "evaluate_key_rate: baud rate {baud_rate_hz} must be positive"
        )));
    }
    let snr = snr_per_quadrature(inputs);
    let i_ab = mutual_information(inputs);
    let chi = holevo_bound(inputs)?;
    let key_fraction = (1.0 - inputs.fer) * (inputs.beta * i_ab - chi).max(0.0);
    Ok(KeyRateResult {
        snr,
        mutual_information_bits: i_ab,
        holevo_bits: chi,
        key_fraction_bits: key_fraction,
        key_rate_bps: key_fraction * baud_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{gaussian_draw, variance, RngStream, StreamPurpose};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn reference_inputs() -> SecurityInputs {
        SecurityInputs::from_link(&LinkParams::reference_operating_point())
    }

    #[test]
    fn entropy_g_known_values() {
        assert_eq!(entropy_g(0.0), 0.0);
        assert_abs_diff_eq!(entropy_g(1.0), 2.0, epsilon = 1e-12);
        assert!(entropy_g(2.0) > entropy_g(1.0));
        assert!(entropy_g(1e-9) >= 0.0);
    }

    #[test]
    fn symplectic_eigenvalues_of_simple_states() {
        let vacuum = DMatrix::<f64>::identity(4, 4);
        let nus = symplectic_eigenvalues(&vacuum).unwrap();
        assert_eq!(nus.len(), 2);
        for nu in nus {
            assert_abs_diff_eq!(nu, 1.0, epsilon = 1e-12);
        }

        let thermal = DMatrix::from_diagonal_element(2, 2, 3.0);
        let nus = symplectic_eigenvalues(&thermal).unwrap();
        assert_abs_diff_eq!(nus[0], 3.0, epsilon = 1e-12);

        // Two-mode squeezed state is pure: both eigenvalues 1.
        let v = 2.8;
        let c = (v * v - 1.0_f64).sqrt();
        let mut g = DMatrix::zeros(4, 4);
        set_block(&mut g, 0, 0, &diag2(v));
        set_block(&mut g, 1, 1, &diag2(v));
        set_block(&mut g, 0, 1, &sz2(c));
        for nu in symplectic_eigenvalues(&g).unwrap() {
            assert_abs_diff_eq!(nu, 1.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(gaussian_entropy(&g).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn symplectic_rejects_bad_shapes() {
        assert!(symplectic_eigenvalues(&DMatrix::zeros(3, 3)).is_err());
        assert!(symplectic_eigenvalues(&DMatrix::zeros(2, 4)).is_err());
        let mut g = DMatrix::identity(2, 2);
        g[(0, 0)] = f64::NAN;
        assert!(symplectic_eigenvalues(&g).is_err());
    }

    #[test]
    fn snr_and_mutual_information_at_reference_point() {
        let inputs = reference_inputs();
        assert_relative_eq!(
            snr_per_quadrature(&inputs),
            0.028332209039323836,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            mutual_information(&inputs),
            0.040306411330089394,
            max_relative = 1e-12
        );
    }

    #[test]
    fn holevo_bound_at_reference_point() {
        let detail = holevo_detail(&reference_inputs()).unwrap();
        assert_abs_diff_eq!(detail.chi, 0.031396635283059915, epsilon = 1e-9);
        assert_abs_diff_eq!(detail.s_eve, 1.8558212872906386, epsilon = 1e-9);
        assert_abs_diff_eq!(detail.s_conditional, 1.8244246520075786, epsilon = 1e-9);
        assert_eq!(detail.nu_eve.len(), 2);
        assert_abs_diff_eq!(detail.nu_eve[0], 2.71183088, epsilon = 1e-6);
        assert_abs_diff_eq!(detail.nu_eve[1], 1.00133088, epsilon = 1e-6);
        assert_eq!(detail.nu_conditional.len(), 3);
        assert_abs_diff_eq!(detail.nu_conditional[0], 2.66468964, epsilon = 1e-6);
        assert_abs_diff_eq!(detail.nu_conditional[1], 1.00046815, epsilon = 1e-6);
        assert_abs_diff_eq!(detail.nu_conditional[2], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn perfect_channel_leaks_nothing() {
        // Trusted detector noise alone must not contribute to Eve.
        let mut inputs = reference_inputs();
        inputs.eta = 1.0;
        inputs.xi_snu = 0.0;
        assert_abs_diff_eq!(holevo_bound(&inputs).unwrap(), 0.0, epsilon = 1e-8);

        inputs.tau = 1.0;
        inputs.t_snu = 0.0;
        assert_abs_diff_eq!(holevo_bound(&inputs).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn cloner_route_matches_ancilla_route() {
        let points = [
            reference_inputs(),
            SecurityInputs {
                v_mod_snu: 2.5,
                eta: 0.3,
                tau: 0.9,
                t_snu: 0.02,
                xi_snu: 0.01,
                beta: 0.95,
                fer: 0.1,
            },
            SecurityInputs {
                v_mod_snu: 1.2,
                eta: 0.7,
                tau: 0.75,
                t_snu: 0.1,
                xi_snu: 0.005,
                beta: 0.9,
                fer: 0.0,
            },
        ];
        for inputs in points {
            let chi_ancilla = holevo_bound(&inputs).unwrap();
            let chi_cloner = holevo_bound_via_cloner(&inputs).unwrap();
            assert_abs_diff_eq!(chi_ancilla, chi_cloner, epsilon = 1e-9);
        }
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let mut inputs = reference_inputs();
        inputs.xi_snu = -0.5;
        assert!(matches!(
            holevo_bound(&inputs),
            Err(CvqkdError::Unphysical(_))
        ));
    }

    #[test]
    fn ideal_detector_limit_is_continuous() {
        // tau -> 1 with electronic noise present: the clamped evaluation at
        // tau = 1 should sit on the smooth continuation from below.
        let mut at_one = reference_inputs();
        at_one.tau = 1.0;
        let chi_one = holevo_bound(&at_one).unwrap();
        assert!(chi_one.is_finite());
        let mut near = at_one;
        near.tau = 1.0 - 1e-5;
        let chi_a = holevo_bound(&near).unwrap();
        near.tau = 1.0 - 1e-4;
        let chi_b = holevo_bound(&near).unwrap();
        // chi(1) extrapolated linearly from the two points below. The
        // tolerance reflects the rounding floor of the conditioning step
        // with the near-divergent ancilla, about 1e-5 in this regime.
        let extrapolated = chi_a + (chi_a - chi_b) / 9.0;
        assert_abs_diff_eq!(chi_one, extrapolated, epsilon = 1e-4);
        assert!((0.04..0.05).contains(&chi_one));
    }

    #[test]
    fn key_rate_at_reference_point() {
        let params = LinkParams::reference_operating_point();
        let result =
            evaluate_key_rate(&SecurityInputs::from_link(&params), params.baud_rate_hz).unwrap();
        assert_abs_diff_eq!(result.key_fraction_bits, 0.0033081706211736985, epsilon = 1e-9);
        assert_relative_eq!(result.key_rate_bps, 66163.41242347397, max_relative = 1e-9);
        assert_eq!(
            result.key_rate_bps,
            result.key_fraction_bits * params.baud_rate_hz
        );
    }

    #[test]
    fn key_rate_clamps_at_zero() {
        let mut inputs = reference_inputs();
        inputs.beta = 0.5;
        let result = evaluate_key_rate(&inputs, 20e6).unwrap();
        assert_eq!(result.key_fraction_bits, 0.0);
        assert_eq!(result.key_rate_bps, 0.0);
    }

    #[test]
    fn key_rate_monotone_in_noise_and_transmittance() {
        // Strict decrease is checked on the unclamped margin beta*I - chi;
        // the clamped key fraction only needs to be non-increasing.
        let params = LinkParams::reference_operating_point();
        let mut last_margin = f64::INFINITY;
        let mut last_kf = f64::INFINITY;
        for xi in [0.0, 1e-3, 3e-3, 1e-2, 3e-2] {
            let inputs = SecurityInputs {
                xi_snu: xi,
                ..SecurityInputs::from_link(&params)
            };
            let r = evaluate_key_rate(&inputs, params.baud_rate_hz).unwrap();
            let margin = inputs.beta * r.mutual_information_bits - r.holevo_bits;
            assert!(margin < last_margin, "margin not decreasing at xi={xi}");
            assert!(r.key_fraction_bits <= last_kf);
            last_margin = margin;
            last_kf = r.key_fraction_bits;
        }
        let mut last = -1.0;
        for eta in [0.02, 0.049, 0.1, 0.3, 0.6] {
            let inputs = SecurityInputs {
                eta,
                ..SecurityInputs::from_link(&params)
            };
            let kf = evaluate_key_rate(&inputs, params.baud_rate_hz)
                .unwrap()
                .key_fraction_bits;
            assert!(kf > last, "key fraction not increasing at eta={eta}");
            last = kf;
        }
    }

    #[test]
    fn phase_excess_noise_profile() {
        assert_abs_diff_eq!(
            phase_excess_noise(1.8, 1e-3).unwrap(),
            0.0017995500749905524,
            epsilon = 1e-15
        );
        // Linear regime and saturation.
        let v_mod = 1.8;
        let small = phase_excess_noise(v_mod, 1e-6).unwrap();
        assert_relative_eq!(small, v_mod * 1e-6, max_relative = 1e-5);
        let huge = phase_excess_noise(v_mod, 50.0).unwrap();
        assert_relative_eq!(huge, 2.0 * v_mod, max_relative = 1e-9);
        let mut last = 0.0;
        for v in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let xi = phase_excess_noise(v_mod, v).unwrap();
            assert!(xi > last);
            last = xi;
        }
        assert!(phase_excess_noise(0.0, 1e-3).is_err());
        assert!(phase_excess_noise(1.8, -1e-3).is_err());
    }

    #[test]
    fn estimator_recovers_synthetic_channel() {
        let params = LinkParams::reference_operating_point();
        let n = 1_000_000;
        let mut rng = RngStream::new(7, 0, StreamPurpose::TxSymbols);
        let g_true = (params.tau * params.eta / 2.0).sqrt();
        let noise_var = 1.0 + params.t_snu + (params.tau / 2.0) * params.u_snu;
        let tx_i = gaussian_draw(&mut rng, n, params.v_mod_snu).unwrap();
        let tx_q = gaussian_draw(&mut rng, n, params.v_mod_snu).unwrap();
        let noise_i = gaussian_draw(&mut rng, n, noise_var).unwrap();
        let noise_q = gaussian_draw(&mut rng, n, noise_var).unwrap();
        let tx: Vec<Complex64> = tx_i
            .iter()
            .zip(&tx_q)
            .map(|(&i, &q)| Complex64::new(i, q))
            .collect();
        let rx: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(g_true * tx_i[k] + noise_i[k], g_true * tx_q[k] + noise_q[k]))
            .collect();

        let budget = estimate_channel(&tx, &rx, params.tau, params.t_snu).unwrap();
        assert_relative_eq!(budget.eta_hat, params.eta, max_relative = 0.01);
        // Standard error of the excess noise estimate is dominated by the
        // variance estimator: ~ V_rx * sqrt(2/n) / (tau/2) per quadrature.
        let se = noise_var * (2.0 / n as f64).sqrt() / (params.tau / 2.0);
        assert!((budget.xi_mean_snu() - params.u_snu).abs() < 4.0 * se / 2.0_f64.sqrt());
        assert_eq!(budget.n_pairs, n);
        assert!(budget.v_est.is_nan());
    }

    #[test]
    fn estimator_guards() {
        let tx = vec![Complex64::new(1.0, 1.0); 500];
        let rx = tx.clone();
        assert!(estimate_channel(&tx, &rx, 0.68, 0.058).is_err());
        let tx = vec![Complex64::new(1.0, 1.0); 2000];
        let rx = vec![Complex64::new(1.0, 1.0); 1999];
        assert!(estimate_channel(&tx, &rx, 0.68, 0.058).is_err());

        // Gain far above unity transmittance must be flagged.
        let mut rng = RngStream::new(3, 0, StreamPurpose::TxSymbols);
        let vals = gaussian_draw(&mut rng, 2000, 1.8).unwrap();
        let tx: Vec<Complex64> = vals.iter().map(|&x| Complex64::new(x, x)).collect();
        let rx: Vec<Complex64> = tx.iter().map(|z| z * 10.0).collect();
        assert!(matches!(
            estimate_channel(&tx, &rx, 0.68, 0.0),
            Err(CvqkdError::Unphysical(_))
        ));
    }

    #[test]
    fn estimator_sees_configured_noise_split() {
        // Same received data, different trusted-noise assumption: the
        // difference must fall entirely on xi, scaled by 2/tau.
        let params = LinkParams::reference_operating_point();
        let mut rng = RngStream::new(11, 0, StreamPurpose::TxSymbols);
        let n = 50_000;
        let g_true = (params.tau * params.eta / 2.0).sqrt();
        let tx_i = gaussian_draw(&mut rng, n, params.v_mod_snu).unwrap();
        let tx_q = gaussian_draw(&mut rng, n, params.v_mod_snu).unwrap();
        let noise = gaussian_draw(&mut rng, 2 * n, 1.06).unwrap();
        let tx: Vec<Complex64> = tx_i
            .iter()
            .zip(&tx_q)
            .map(|(&i, &q)| Complex64::new(i, q))
            .collect();
        let rx: Vec<Complex64> = (0..n)
            .map(|k| {
                Complex64::new(
                    g_true * tx_i[k] + noise[2 * k],
                    g_true * tx_q[k] + noise[2 * k + 1],
                )
            })
            .collect();
        let with_t = estimate_channel(&tx, &rx, params.tau, params.t_snu).unwrap();
        let without_t = estimate_channel(&tx, &rx, params.tau, 0.0).unwrap();
        let shift = params.t_snu / (params.tau / 2.0);
        assert_abs_diff_eq!(
            without_t.xi_mean_snu() - with_t.xi_mean_snu(),
            shift,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(with_t.eta_hat, without_t.eta_hat, epsilon = 1e-15);
    }

    #[test]
    fn variance_helper_population_convention() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(variance(&xs), 1.25, epsilon = 1e-12);
    }
}
