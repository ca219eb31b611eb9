//! Small DSP building blocks: analysis windows, windowed-sinc FIR design,
//! ERB scale and the analytic signal.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Symmetric Tukey (tapered cosine) window. `alpha = 0` is rectangular,
/// `alpha = 1` is Hann.
pub fn tukey(len: usize, alpha: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let alpha = alpha.clamp(0.0, 1.0);
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let x = n as f64 / m;
            if alpha == 0.0 {
                1.0
            } else if x < alpha / 2.0 {
                0.5 * (1.0 + (PI * (2.0 * x / alpha - 1.0)).cos())
            } else if x <= 1.0 - alpha / 2.0 {
                1.0
            } else {
                0.5 * (1.0 + (PI * (2.0 * x / alpha - 2.0 / alpha + 1.0)).cos())
            }
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowpassWindow {
    /// Hann without zero end points: `0.5 - 0.5 cos(2 pi (n + 1) / (L + 1))`.
    RaisedCosine,
    Hamming,
}

/// Linear-phase windowed-sinc low-pass with unit DC gain.
///
/// `cutoff` is in cycles per sample (0 < cutoff <= 0.5).
pub fn windowed_sinc_lowpass(len: usize, cutoff: f64, window: LowpassWindow) -> Vec<f64> {
    assert!(len > 0, "filter length must be positive");
    let centre = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let w = match window {
                LowpassWindow::RaisedCosine => {
                    0.5 - 0.5 * (2.0 * PI * (n + 1) as f64 / (len + 1) as f64).cos()
                }
                LowpassWindow::Hamming if len == 1 => 1.0,
                LowpassWindow::Hamming => {
                    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
                }
            };
            2.0 * cutoff * sinc(2.0 * cutoff * (n as f64 - centre)) * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    if sum != 0.0 {
        taps.iter_mut().for_each(|t| *t /= sum);
    }
    taps
}

/// Glasberg & Moore equivalent rectangular bandwidth in Hz.
pub fn erb_hz(f_hz: f64) -> f64 {
    24.7 * (4.37 * f_hz / 1000.0 + 1.0)
}

pub fn hz_to_erb_rate(f_hz: f64) -> f64 {
    21.4 * (4.37 * f_hz / 1000.0 + 1.0).log10()
}

pub fn erb_rate_to_hz(erb: f64) -> f64 {
    (10f64.powf(erb / 21.4) - 1.0) * 1000.0 / 4.37
}

/// `count` frequencies uniformly spaced on the ERB-rate scale, both ends included.
pub fn erb_space(f_lo: f64, f_hi: f64, count: usize) -> Vec<f64> {
    let lo = hz_to_erb_rate(f_lo);
    let hi = hz_to_erb_rate(f_hi);
    if count == 1 {
        return vec![f_lo];
    }
    (0..count)
        .map(|i| {
            if i == 0 {
                f_lo
            } else if i == count - 1 {
                f_hi
            } else {
                erb_rate_to_hz(lo + (hi - lo) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// Magnitude of the analytic signal (FFT-based Hilbert transform).
pub fn analytic_envelope(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, z) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *z *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|z| z.norm() * scale).collect()
}
