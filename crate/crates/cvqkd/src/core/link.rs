use crate::error::{CvqkdError, Result};

/// Security-relevant link parameters in shot-noise units (vacuum variance 1
/// per quadrature, modulation variance per quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub baud_rate_hz: f64,
    /// Modulation variance per quadrature, SNU.
    pub v_mod_snu: f64,
    /// Channel transmittance (untrusted).
    pub eta: f64,
    /// Detection efficiency (trusted).
    pub tau: f64,
    /// Trusted electronic noise at the measurement output, SNU.
    pub t_snu: f64,
    /// Channel-output-referred excess noise, SNU.
    pub u_snu: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    /// Frame error rate of reconciliation.
    pub fer: f64,
}

impl LinkParams {
    /// The published operating point this model is anchored to.
    pub fn reference_operating_point() -> Self {
        LinkParams {
            baud_rate_hz: 20e6,
            v_mod_snu: 1.8,
            eta: 0.049,
            tau: 0.68,
            t_snu: 0.058,
            u_snu: 1.3e-3,
            beta: 0.9431,
            fer: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(CvqkdError::invalid(format!("LinkParams: {msg} ({self:?})")))
            }
        };
        check(self.baud_rate_hz > 0.0, "baud_rate_hz must be positive")?;
        check(self.v_mod_snu > 0.0, "v_mod_snu must be positive")?;
        check(self.eta > 0.0 && self.eta <= 1.0, "eta must lie in (0, 1]")?;
        check(self.tau > 0.0 && self.tau <= 1.0, "tau must lie in (0, 1]")?;
        check(self.t_snu >= 0.0, "t_snu must be nonnegative")?;
        check(self.u_snu >= 0.0, "u_snu must be nonnegative")?;
        check(self.beta > 0.0 && self.beta <= 1.0, "beta must lie in (0, 1]")?;
        check((0.0..=1.0).contains(&self.fer), "fer must lie in [0, 1]")?;
        Ok(())
    }

    /// Expected measured variance per quadrature after SNU normalization:
    /// signal through channel and detector, vacuum, trusted electronics, and
    /// channel excess noise attenuated by the detector.
    pub fn expected_measured_variance(&self) -> f64 {
        (self.tau * self.eta / 2.0) * self.v_mod_snu
            + 1.0
            + self.t_snu
            + (self.tau / 2.0) * self.u_snu
    }
}
