//! One-sided periodogram shared by the frequency-domain features and the
//! filter report.

use rustfft::{num_complex::Complex, FftPlanner};

/// One-sided power spectrum of `samples` (rectangular window, no padding).
///
/// Returns `(freqs_hz, power)` with bins `k * fs / n` for `k = 0..=n/2`.
/// Power is Parseval-normalized: the sum over bins equals the mean square of
/// the signal (up to rounding), with interior bins carrying the double-sided
/// fold factor of two.
pub fn one_sided_periodogram(samples: &[f64], sample_rate_hz: f64) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    assert!(n >= 2, "periodogram needs at least two samples");
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let n_bins = n / 2 + 1;
    let norm = 1.0 / (n as f64 * n as f64);
    let mut freqs = Vec::with_capacity(n_bins);
    let mut power = Vec::with_capacity(n_bins);
    for (k, bin) in buf.iter().take(n_bins).enumerate() {
        let fold = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else {
            2.0
        };
        freqs.push(k as f64 * sample_rate_hz / n as f64);
        power.push(fold * bin.norm_sqr() * norm);
    }
    (freqs, power)
}
