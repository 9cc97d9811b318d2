//! Small spectral toolbox shared by the transmit, channel, and receive DSP:
//! cached-plan FFT filtering, Welch PSD estimation, FIR and biquad filters,
//! and fractional delay.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

pub fn fft_in_place(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// Inverse FFT scaled by 1/n, so `ifft(fft(x)) == x`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, false).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed frequency of FFT bin `i` for an `n`-point transform at `fs`.
pub fn bin_freq(i: usize, n: usize, fs: f64) -> f64 {
    let i = i as f64;
    let n = n as f64;
    if i < (n / 2.0).ceil() {
        i * fs / n
    } else {
        (i - n) * fs / n
    }
}

/// Multiply the spectrum of `x` by `gain(f)` evaluated at each signed bin
/// frequency. The workhorse behind band masks, whitening, and the frequency
/// domain matched filter.
pub fn fft_filter_complex(
    x: &[Complex64],
    fs: f64,
    gain: impl Fn(f64) -> Complex64,
) -> Vec<Complex64> {
    let n = x.len();
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= gain(bin_freq(i, n, fs));
    }
    ifft_in_place(&mut buf);
    buf
}

/// Zero-phase real filtering: the gain must be even in `f` for the output to
/// stay real; the imaginary residue is dropped.
pub fn fft_filter_real(x: &[f64], fs: f64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    let buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let out = fft_filter_complex(&buf, fs, |f| Complex64::new(gain(f), 0.0));
    out.into_iter().map(|v| v.re).collect()
}

/// Delay `x` by `delay` samples (fractional and negative allowed) via a
/// spectral phase ramp. Circular at the ends; callers keep edges out of the
/// region of interest.
pub fn fractional_delay(x: &[Complex64], delay: f64) -> Vec<Complex64> {
    let fs = 1.0;
    fft_filter_complex(x, fs, |f| {
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * delay)
    })
}

pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / n as f64;
            x.sin() * x.sin()
        })
        .collect()
}

pub fn hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n as f64 - 1.0)).cos()
        })
        .collect()
}

/// Welch PSD over all `nseg` FFT bins (two-sided, natural bin order), Hann
/// window, 50% overlap. Density normalization is arbitrary but consistent;
/// consumers use ratios or normalize themselves.
pub fn welch_psd(x: &[Complex64], nseg: usize) -> Vec<f64> {
    assert!(nseg > 1 && x.len() >= nseg, "welch_psd needs at least one full segment");
    let w = hann(nseg);
    let wnorm: f64 = w.iter().map(|v| v * v).sum();
    let hop = nseg / 2;
    let nwin = (x.len() - nseg) / hop + 1;
    let mut acc = vec![0.0; nseg];
    let mut buf = vec![Complex64::default(); nseg];
    for k in 0..nwin {
        for i in 0..nseg {
            buf[i] = x[k * hop + i] * w[i];
        }
        fft_in_place(&mut buf);
        for i in 0..nseg {
            acc[i] += buf[i].norm_sqr();
        }
    }
    let scale = 1.0 / (nwin as f64 * wnorm);
    for v in acc.iter_mut() {
        *v *= scale;
    }
    acc
}

pub fn welch_psd_real(x: &[f64], nseg: usize) -> Vec<f64> {
    let c: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    welch_psd(&c, nseg)
}

/// Zero-phase circular moving average of odd length `k`.
pub fn smooth_circular(x: &[f64], k: usize) -> Vec<f64> {
    assert!(k % 2 == 1, "smoothing kernel length must be odd");
    let n = x.len();
    if k <= 1 || n == 0 {
        return x.to_vec();
    }
    let h = k / 2;
    let mut out = Vec::with_capacity(n);
    // O(n) sliding window with wraparound.
    let idx = |i: isize| -> f64 { x[i.rem_euclid(n as isize) as usize] };
    let mut acc = 0.0;
    for j in -(h as isize)..=(h as isize) {
        acc += idx(j);
    }
    out.push(acc / k as f64);
    for i in 1..n {
        let i = i as isize;
        acc += idx(i + h as isize) - idx(i - 1 - h as isize);
        out.push(acc / k as f64);
    }
    out
}

/// Odd-length Hamming-windowed sinc low-pass with unity DC gain.
pub fn windowed_sinc_lowpass(cutoff_hz: f64, fs: f64, n_taps: usize) -> Vec<f64> {
    assert!(n_taps % 2 == 1, "windowed sinc needs an odd tap count");
    assert!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0, "cutoff must lie inside (0, fs/2)");
    let fc = cutoff_hz / fs;
    let mid = (n_taps / 2) as isize;
    let w = hamming(n_taps);
    let mut h: Vec<f64> = (0..n_taps as isize)
        .map(|i| {
            let m = (i - mid) as f64;
            let sinc = if m == 0.0 {
                2.0 * fc
            } else {
                (2.0 * std::f64::consts::PI * fc * m).sin() / (std::f64::consts::PI * m)
            };
            sinc * w[i as usize]
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in h.iter_mut() {
        *v /= sum;
    }
    h
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Full linear convolution of `x` with real taps `h` (length n + m - 1).
pub fn fir_filter_full(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let m = h.len();
    let full = n + m - 1;
    let nfft = next_pow2(full);
    let mut xf = vec![Complex64::default(); nfft];
    xf[..n].copy_from_slice(x);
    let mut hf = vec![Complex64::default(); nfft];
    for (i, &v) in h.iter().enumerate() {
        hf[i] = Complex64::new(v, 0.0);
    }
    fft_in_place(&mut xf);
    fft_in_place(&mut hf);
    for (a, b) in xf.iter_mut().zip(hf.iter()) {
        *a *= b;
    }
    ifft_in_place(&mut xf);
    xf.truncate(full);
    xf
}

/// Linear convolution of `x` with real taps `h`, returning the centered
/// "same"-length slice (group delay of an odd symmetric `h` removed).
pub fn fir_filter_same(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let full = fir_filter_full(x, h);
    let start = (h.len() - 1) / 2;
    full[start..start + x.len()].to_vec()
}

/// Second-order Butterworth low-pass via the bilinear transform with
/// frequency prewarp. Only valid meaningfully below Nyquist; callers bypass
/// the detector filter when the corner is at or beyond it.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub fn butterworth_lowpass(cutoff_hz: f64, fs: f64) -> Biquad {
        Self::butterworth_section(cutoff_hz, fs, std::f64::consts::FRAC_PI_4)
    }

    /// One second-order section of an even-order Butterworth cascade; `theta`
    /// is the analog pole angle from the imaginary axis.
    fn butterworth_section(cutoff_hz: f64, fs: f64, theta: f64) -> Biquad {
        assert!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0, "corner must lie inside (0, fs/2)");
        let wc = (std::f64::consts::PI * cutoff_hz / fs).tan();
        let k1 = 2.0 * theta.cos() * wc;
        let k2 = wc * wc;
        let a0 = 1.0 + k1 + k2;
        Biquad {
            b: [k2 / a0, 2.0 * k2 / a0, k2 / a0],
            a: [1.0, (2.0 * k2 - 2.0) / a0, (1.0 - k1 + k2) / a0],
        }
    }

    /// Even-order Butterworth low-pass as cascaded biquads.
    pub fn butterworth_cascade(cutoff_hz: f64, fs: f64, order: usize) -> Vec<Biquad> {
        assert!(order >= 2 && order % 2 == 0, "only even Butterworth orders are supported");
        (0..order / 2)
            .map(|k| {
                let theta =
                    (2.0 * k as f64 + 1.0) * std::f64::consts::PI / (2.0 * order as f64);
                Self::butterworth_section(cutoff_hz, fs, theta)
            })
            .collect()
    }

    /// Causal single-pass filtering (direct form II transposed).
    pub fn filter_real(&self, x: &[f64]) -> Vec<f64> {
        let mut z1 = 0.0;
        let mut z2 = 0.0;
        x.iter()
            .map(|&v| {
                let y = self.b[0] * v + z1;
                z1 = self.b[1] * v - self.a[1] * y + z2;
                z2 = self.b[2] * v - self.a[2] * y;
                y
            })
            .collect()
    }

    /// Magnitude of the frequency response at `f_hz`.
    pub fn magnitude_at(&self, f_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * f_hz / fs;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = Complex64::new(self.b[0], 0.0) + z1 * self.b[1] + z2 * self.b[2];
        let den = Complex64::new(self.a[0], 0.0) + z1 * self.a[1] + z2 * self.a[2];
        (num / den).norm()
    }
}
