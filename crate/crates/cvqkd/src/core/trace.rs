use num_complex::Complex64;

use crate::error::{CvqkdError, Result};

/// Which physical sources were active when a trace was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Signal plus all noise sources.
    Modulated,
    /// Shot and electronic noise only (signal blocked).
    Vacuum,
    /// Electronic noise only (local oscillator blocked).
    Electronic,
}

#[derive(Debug, Clone)]
pub enum TraceData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A uniformly sampled waveform at a known rate.
///
/// Optical-domain signals are complex envelopes; detector outputs are real.
#[derive(Debug, Clone)]
pub struct SampledTrace {
    pub data: TraceData,
    pub sample_rate_hz: f64,
    pub kind: TraceKind,
}

impl SampledTrace {
    pub fn real(samples: Vec<f64>, sample_rate_hz: f64, kind: TraceKind) -> Self {
        SampledTrace { data: TraceData::Real(samples), sample_rate_hz, kind }
    }

    pub fn complex(samples: Vec<Complex64>, sample_rate_hz: f64, kind: TraceKind) -> Self {
        SampledTrace { data: TraceData::Complex(samples), sample_rate_hz, kind }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            TraceData::Real(v) => v.len(),
            TraceData::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.data, TraceData::Complex(_))
    }

    pub fn as_real(&self) -> Result<&[f64]> {
        match &self.data {
            TraceData::Real(v) => Ok(v),
            TraceData::Complex(_) => {
                Err(CvqkdError::invalid("expected a real trace, got a complex one"))
            }
        }
    }

    pub fn as_complex(&self) -> Result<&[Complex64]> {
        match &self.data {
            TraceData::Complex(v) => Ok(v),
            TraceData::Real(_) => {
                Err(CvqkdError::invalid("expected a complex trace, got a real one"))
            }
        }
    }

    /// Real samples promoted to the complex plane (imaginary part zero);
    /// complex samples returned as-is.
    pub fn to_complex_vec(&self) -> Vec<Complex64> {
        match &self.data {
            TraceData::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            TraceData::Complex(v) => v.clone(),
        }
    }

    pub fn check_nonempty(&self, op: &str) -> Result<()> {
        if self.is_empty() {
            return Err(CvqkdError::invalid(format!("{op}: trace has no samples")));
        }
        Ok(())
    }
}

/// One frame's worth of symbols: a contiguous reference prefix used for
/// synchronization and parameter estimation, followed by key symbols.
#[derive(Debug, Clone)]
pub struct SymbolFrame {
    pub reference_symbols: Vec<Complex64>,
    pub quantum_symbols: Vec<Complex64>,
    pub frame_id: u64,
}

impl SymbolFrame {
    pub fn total_symbols(&self) -> usize {
        self.reference_symbols.len() + self.quantum_symbols.len()
    }

    /// The transmitted order: reference prefix, then key symbols.
    pub fn interleaved(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.total_symbols());
        out.extend_from_slice(&self.reference_symbols);
        out.extend_from_slice(&self.quantum_symbols);
        out
    }
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance about the sample mean.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_complex_accessors() {
        let r = SampledTrace::real(vec![1.0, -2.0], 10.0, TraceKind::Vacuum);
        assert_eq!(r.as_real().unwrap(), &[1.0, -2.0]);
        assert!(r.as_complex().is_err());
        assert_eq!(r.to_complex_vec()[1], Complex64::new(-2.0, 0.0));

        let c = SampledTrace::complex(vec![Complex64::new(0.0, 1.0)], 10.0, TraceKind::Modulated);
        assert!(c.as_real().is_err());
        assert_eq!(c.as_complex().unwrap().len(), 1);
    }

    #[test]
    fn frame_symbol_accounting() {
        let f = SymbolFrame {
            reference_symbols: vec![Complex64::new(1.0, 0.0); 3],
            quantum_symbols: vec![Complex64::new(0.0, 1.0); 5],
            frame_id: 2,
        };
        assert_eq!(f.total_symbols(), 8);
        let all = f.interleaved();
        assert_eq!(all.len(), 8);
        assert_eq!(all[2], Complex64::new(1.0, 0.0));
        assert_eq!(all[3], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(variance(&[3.0; 10]), 0.0);
    }
}
