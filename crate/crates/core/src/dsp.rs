//! Butterworth band-pass/band-stop design and zero-phase application.
//!
//! Filters are designed from the analog Butterworth prototype, transformed
//! to the target band, discretized by the bilinear transform with frequency
//! pre-warping, and realized as a cascade of second-order sections. Zero-phase
//! filtering runs each section forward then backward over an odd-reflected
//! extension of the signal.

use crate::error::{Error, Result};
use crate::types::Recording;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Orders above this make the pole cluster too tight for reliable f64 design.
pub const MAX_DESIGN_ORDER: usize = 16;

const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    Bandpass,
    Bandstop,
}

/// One second-order section with the denominator normalized to a0 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Complex response at normalized angular frequency `w` (rad/sample).
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (Complex64::new(1.0, 0.0) + self.a1 * z1 + self.a2 * z2)
    }

    /// Largest pole magnitude of this section.
    fn pole_radius(&self) -> f64 {
        // roots of z^2 + a1 z + a2
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        let r1 = (Complex64::new(-self.a1, 0.0) + disc) / 2.0;
        let r2 = (Complex64::new(-self.a1, 0.0) - disc) / 2.0;
        r1.norm().max(r2.norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMeta {
    pub kind: BandKind,
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub sample_rate_hz: f64,
}

/// Designed IIR filter as cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    pub sections: Vec<Biquad>,
    pub meta: DesignMeta,
}

impl IirFilter {
    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.meta.sample_rate_hz;
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
    }

    pub fn gain(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    /// Minimum signal length accepted by [`filtfilt`] (one more than the pad).
    pub fn min_signal_len(&self) -> usize {
        filtfilt_pad_len(self.sections.len()) + 1
    }
}

fn butterworth_prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI / 2.0 + PI * (2.0 * k as f64 + 1.0) / (2.0 * order as f64);
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

/// Design a Butterworth band filter of the given analog-prototype order.
///
/// The band edges are the -3 dB points; they are pre-warped individually so
/// the digital magnitude hits exactly 1/sqrt(2) there.
pub fn design_butterworth(
    kind: BandKind,
    order: usize,
    low_hz: f64,
    high_hz: f64,
    sample_rate_hz: f64,
) -> Result<IirFilter> {
    if order == 0 {
        return Err(Error::Parameter("filter order must be at least 1".into()));
    }
    if order > MAX_DESIGN_ORDER {
        return Err(Error::Parameter(format!(
            "order {order} exceeds the design limit {MAX_DESIGN_ORDER}"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Parameter(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let nyquist = sample_rate_hz / 2.0;
    if !(0.0 < low_hz && low_hz < high_hz && high_hz < nyquist) {
        return Err(Error::Parameter(format!(
            "band edges must satisfy 0 < low < high < {nyquist} Hz, got low={low_hz}, high={high_hz}"
        )));
    }

    // Pre-warp each edge, then build the analog band prototype in zpk form.
    let fs2 = 2.0 * sample_rate_hz;
    let w1 = fs2 * (PI * low_hz / sample_rate_hz).tan();
    let w2 = fs2 * (PI * high_hz / sample_rate_hz).tan();
    let w0 = (w1 * w2).sqrt();
    let bw = w2 - w1;

    let proto = butterworth_prototype_poles(order);
    let mut poles: Vec<Complex64> = Vec::with_capacity(2 * order);
    let mut zeros: Vec<Complex64> = Vec::with_capacity(2 * order);
    let mut gain: f64;
    match kind {
        BandKind::Bandpass => {
            for p in &proto {
                let ps = p * (bw / 2.0);
                let disc = (ps * ps - w0 * w0).sqrt();
                poles.push(ps + disc);
                poles.push(ps - disc);
            }
            zeros.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(order));
            gain = bw.powi(order as i32);
        }
        BandKind::Bandstop => {
            for p in &proto {
                let inv = (bw / 2.0) / p;
                let disc = (inv * inv - w0 * w0).sqrt();
                poles.push(inv + disc);
                poles.push(inv - disc);
            }
            for _ in 0..order {
                zeros.push(Complex64::new(0.0, w0));
                zeros.push(Complex64::new(0.0, -w0));
            }
            // Butterworth prototype has unit gain and no zeros; the band-stop
            // substitution leaves the overall constant at prod(-p)^-1 = 1.
            gain = 1.0;
        }
    }

    // Bilinear transform of poles, zeros, and gain.
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = Complex64::new(1.0, 0.0);
    for z in &zeros {
        num *= fs2 - z;
    }
    for p in &poles {
        den *= fs2 - p;
    }
    gain *= (num / den).re;
    let zpoles: Vec<Complex64> = poles.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();
    let zzeros: Vec<Complex64> = zeros.iter().map(|z| (fs2 + z) / (fs2 - z)).collect();
    // Degree surplus maps to zeros at z = -1.
    let extra = zpoles.len() - zzeros.len();

    let sections = group_sections(kind, order, &zpoles, &zzeros, extra, gain)?;
    let filter = IirFilter {
        sections,
        meta: DesignMeta { kind, order, low_hz, high_hz, sample_rate_hz },
    };
    for (i, s) in filter.sections.iter().enumerate() {
        let r = s.pole_radius();
        if !(r < 1.0 - STABILITY_MARGIN) {
            return Err(Error::Invariant(format!(
                "designed section {i} is not strictly stable (pole radius {r})"
            )));
        }
        let finite = [s.b0, s.b1, s.b2, s.a1, s.a2].iter().all(|c| c.is_finite());
        if !finite {
            return Err(Error::Invariant(format!("section {i} has non-finite coefficients")));
        }
    }
    Ok(filter)
}

/// Pair conjugate (or leftover real) poles into biquads and attach the
/// band-appropriate zero pair to each.
fn group_sections(
    kind: BandKind,
    order: usize,
    zpoles: &[Complex64],
    zzeros: &[Complex64],
    extra_zeros_at_minus_one: usize,
    gain: f64,
) -> Result<Vec<Biquad>> {
    let eps = 1e-10;
    let mut complex_pairs: Vec<Complex64> = Vec::new();
    let mut reals: Vec<f64> = Vec::new();
    for p in zpoles {
        if p.im > eps {
            complex_pairs.push(*p);
        } else if p.im.abs() <= eps {
            reals.push(p.re);
        }
    }
    if reals.len() % 2 != 0 || complex_pairs.len() * 2 + reals.len() != zpoles.len() {
        return Err(Error::Invariant(
            "pole set is not closed under conjugation".into(),
        ));
    }
    // Deterministic ordering: nearest the unit circle first.
    complex_pairs.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    reals.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());

    let mut denoms: Vec<(f64, f64)> = Vec::with_capacity(order);
    for p in &complex_pairs {
        denoms.push((-2.0 * p.re, p.norm_sqr()));
    }
    let mut it = reals.chunks_exact(2);
    for pair in &mut it {
        denoms.push((-(pair[0] + pair[1]), pair[0] * pair[1]));
    }
    debug_assert_eq!(denoms.len(), order);

    // Every section of a band-pass gets one zero at z=1 and one at z=-1;
    // every section of a band-stop gets the conjugate pair on the unit circle.
    let numer: (f64, f64, f64) = match kind {
        BandKind::Bandpass => {
            debug_assert_eq!(extra_zeros_at_minus_one, order);
            (1.0, 0.0, -1.0)
        }
        BandKind::Bandstop => {
            let z0 = zzeros[0];
            (1.0, -2.0 * z0.re, z0.norm_sqr())
        }
    };

    // Spread the overall gain evenly across sections; the sign goes on the first.
    let m = order as f64;
    let g = gain.abs().powf(1.0 / m);
    let mut sections = Vec::with_capacity(order);
    for (i, (a1, a2)) in denoms.into_iter().enumerate() {
        let s = if i == 0 { g * gain.signum() } else { g };
        sections.push(Biquad {
            b0: s * numer.0,
            b1: s * numer.1,
            b2: s * numer.2,
            a1,
            a2,
        });
    }
    Ok(sections)
}

/// Minimum reflective padding length used by [`filtfilt`].
pub fn filtfilt_pad_len(n_sections: usize) -> usize {
    3 * (2 * n_sections + 1)
}

/// Number of samples for the slowest pole to decay below `eps`.
fn settle_len(sections: &[Biquad], eps: f64) -> usize {
    let r_max = sections
        .iter()
        .map(Biquad::pole_radius)
        .fold(0.0f64, f64::max);
    if r_max <= 0.0 || r_max >= 1.0 {
        return usize::MAX;
    }
    (eps.ln() / r_max.ln()).ceil() as usize
}

/// Per-section steady-state (unit constant input) initial conditions for the
/// transposed direct-form-II realization, with the DC gain propagated through
/// the cascade.
fn steady_state_zi(sections: &[Biquad]) -> Vec<[f64; 2]> {
    let mut zi = Vec::with_capacity(sections.len());
    let mut scale = 1.0;
    for s in sections {
        let den = 1.0 + s.a1 + s.a2;
        let g = if den.abs() > 1e-12 {
            (s.b0 + s.b1 + s.b2) / den
        } else {
            0.0
        };
        zi.push([scale * (g - s.b0), scale * (s.b2 - s.a2 * g)]);
        scale *= g;
    }
    zi
}

fn sosfilt(sections: &[Biquad], zi_unit: &[[f64; 2]], x0: f64, x: &[f64]) -> Vec<f64> {
    let mut state: Vec<[f64; 2]> = zi_unit.iter().map(|z| [z[0] * x0, z[1] * x0]).collect();
    let mut y = Vec::with_capacity(x.len());
    for &sample in x {
        let mut v = sample;
        for (s, st) in sections.iter().zip(state.iter_mut()) {
            let out = s.b0 * v + st[0];
            st[0] = s.b1 * v - s.a1 * out + st[1];
            st[1] = s.b2 * v - s.a2 * out;
            v = out;
        }
        y.push(v);
    }
    y
}

/// Zero-phase filtering: forward pass, time-reversed pass, odd-reflected edge
/// padding stripped from the result. Output length equals input length.
///
/// The pad is at least `3 * (2 * n_sections + 1)` samples and is stretched up
/// to the filter's own settling length (capped at `len - 1`) so that narrow
/// sections (the 2 Hz hum notches ring for over a second at 2 kHz) do not
/// leak start-up transients into the retained region.
pub fn filtfilt(filter: &IirFilter, signal: &[f64]) -> Result<Vec<f64>> {
    let base_pad = filtfilt_pad_len(filter.sections.len());
    if signal.len() <= base_pad {
        return Err(Error::Length {
            what: "filtfilt input".into(),
            needed: base_pad + 1,
            got: signal.len(),
        });
    }
    let n = signal.len();
    let pad = base_pad
        .max(settle_len(&filter.sections, 1e-6))
        .min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let first = signal[0];
    let last = signal[n - 1];
    for i in 0..pad {
        ext.push(2.0 * first - signal[pad - i]);
    }
    ext.extend_from_slice(signal);
    for i in 0..pad {
        ext.push(2.0 * last - signal[n - 2 - i]);
    }

    let zi = steady_state_zi(&filter.sections);
    let forward = sosfilt(&filter.sections, &zi, ext[0], &ext);
    let mut rev: Vec<f64> = forward.into_iter().rev().collect();
    rev = sosfilt(&filter.sections, &zi, rev[0], &rev);
    rev.reverse();
    Ok(rev[pad..pad + n].to_vec())
}

/// Specification of one notch in the denoising chain.
#[derive(Debug, Clone, PartialEq)]
pub struct NotchSpec {
    pub center_hz: f64,
    pub half_width_hz: f64,
    pub order: usize,
}

/// The full denoising chain: band-stop notches (ascending centers) followed
/// by one band-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterChain {
    pub notches: Vec<IirFilter>,
    pub bandpass: IirFilter,
}

impl FilterChain {
    pub fn design(
        notch_specs: &[NotchSpec],
        bandpass_low_hz: f64,
        bandpass_high_hz: f64,
        bandpass_order: usize,
        sample_rate_hz: f64,
    ) -> Result<FilterChain> {
        let nyquist = sample_rate_hz / 2.0;
        for w in notch_specs.windows(2) {
            if w[1].center_hz <= w[0].center_hz {
                return Err(Error::Invariant(format!(
                    "notch centers must be strictly increasing: {} then {}",
                    w[0].center_hz, w[1].center_hz
                )));
            }
        }
        let mut notches = Vec::with_capacity(notch_specs.len());
        for spec in notch_specs {
            if spec.center_hz + spec.half_width_hz >= nyquist {
                return Err(Error::Invariant(format!(
                    "notch at {} Hz reaches past Nyquist ({nyquist} Hz)",
                    spec.center_hz
                )));
            }
            notches.push(design_butterworth(
                BandKind::Bandstop,
                spec.order,
                spec.center_hz - spec.half_width_hz,
                spec.center_hz + spec.half_width_hz,
                sample_rate_hz,
            )?);
        }
        let bandpass = design_butterworth(
            BandKind::Bandpass,
            bandpass_order,
            bandpass_low_hz,
            bandpass_high_hz,
            sample_rate_hz,
        )?;
        Ok(FilterChain { notches, bandpass })
    }

    /// The chain used throughout: nine order-3 notches at 50..450 Hz with
    /// +/-1 Hz half-width and an order-8 band-pass over 20-500 Hz.
    pub fn default_chain(sample_rate_hz: f64) -> Result<FilterChain> {
        let notches: Vec<NotchSpec> = (1..=9)
            .map(|k| NotchSpec {
                center_hz: 50.0 * k as f64,
                half_width_hz: 1.0,
                order: 3,
            })
            .collect();
        FilterChain::design(&notches, 20.0, 500.0, 8, sample_rate_hz)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.bandpass.meta.sample_rate_hz
    }

    /// Longest minimum-signal requirement of any member filter.
    pub fn min_signal_len(&self) -> usize {
        self.notches
            .iter()
            .map(|f| f.min_signal_len())
            .chain(std::iter::once(self.bandpass.min_signal_len()))
            .max()
            .unwrap_or(1)
    }

    /// Run one channel through every notch then the band-pass, all zero-phase.
    pub fn apply_channel(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let mut y = signal.to_vec();
        for notch in &self.notches {
            y = filtfilt(notch, &y)?;
        }
        filtfilt(&self.bandpass, &y)
    }
}

/// Filter every channel of a recording through the chain. Shape, sample rate,
/// channel labels, and trial label are preserved.
pub fn apply_chain(chain: &FilterChain, rec: &Recording) -> Result<Recording> {
    let fs = chain.sample_rate_hz();
    if (rec.sample_rate_hz - fs).abs() > 1e-9 * fs.max(1.0) {
        return Err(Error::Config(vec![format!(
            "recording sample rate {} Hz does not match the chain design rate {} Hz",
            rec.sample_rate_hz, fs
        )]));
    }
    let mut filtered = Vec::with_capacity(rec.n_channels());
    for ch in &rec.samples {
        filtered.push(chain.apply_channel(ch)?);
    }
    Ok(Recording {
        sample_rate_hz: rec.sample_rate_hz,
        channels: rec.channels.clone(),
        samples: filtered,
        trial_label: rec.trial_label,
    })
}
