use crate::error::{CvqkdError, Result};

/// Shot-noise unit scale from calibration trace variances, both measured at
/// the same point of the receive chain: the vacuum trace carries shot plus
/// electronic noise, the electronic trace only the latter, so the difference
/// is one shot-noise unit in raw detector units.
pub fn calibrate_snu(vacuum_variance: f64, electronic_variance: f64) -> Result<f64> {
    let snu = vacuum_variance - electronic_variance;
    if !(snu > 0.0) {
        return Err(CvqkdError::Calibration(format!(
            "vacuum variance {vacuum_variance:.6e} does not exceed electronic variance \
             {electronic_variance:.6e}; shot-noise scale undefined"
        )));
    }
    Ok(snu)
}

/// Trusted detector noise in SNU from the same pair of calibration variances.
pub fn trusted_noise_from_traces(vacuum_variance: f64, electronic_variance: f64) -> Result<f64> {
    if electronic_variance < 0.0 {
        return Err(CvqkdError::invalid(format!(
            "electronic variance must be nonnegative, got {electronic_variance:.6e}"
        )));
    }
    let snu = calibrate_snu(vacuum_variance, electronic_variance)?;
    Ok(electronic_variance / snu)
}
