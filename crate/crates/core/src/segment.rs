//! Multi-threshold short-time-energy activity-segment detection.
//!
//! The detector pools all channels into one average short-time energy per
//! frame, walks a two-threshold state machine over the frames (start when the
//! energy exceeds the start threshold, stop when it falls below the stop
//! threshold), and keeps only candidates whose sample length falls inside the
//! configured validity band; shorter or longer bursts are discarded as
//! fluctuation noise.

use crate::error::{Error, Result};
use crate::types::Recording;

/// Average short-time energy per frame, pooled over channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub window_len: usize,
    pub hop: usize,
    pub energies: Vec<f64>,
    /// Start sample of each frame; strictly increasing with stride `hop`.
    pub frame_starts: Vec<usize>,
}

/// Start/stop energy thresholds; `th1 >= th2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub th1: f64,
    pub th2: f64,
}

impl Thresholds {
    pub fn new(th1: f64, th2: f64) -> Result<Thresholds> {
        if !(th2 > 0.0 && th1 >= th2) {
            return Err(Error::Invariant(format!(
                "thresholds must satisfy th1 >= th2 > 0, got th1={th1}, th2={th2}"
            )));
        }
        Ok(Thresholds { th1, th2 })
    }
}

/// Validated activity interval `[start_sample, end_sample)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start_sample: usize,
    pub end_sample: usize,
}

impl Segment {
    pub fn new(start_sample: usize, end_sample: usize) -> Result<Segment> {
        if end_sample <= start_sample {
            return Err(Error::Invariant(format!(
                "segment end {end_sample} must exceed start {start_sample}"
            )));
        }
        Ok(Segment { start_sample, end_sample })
    }

    pub fn len(&self) -> usize {
        self.end_sample - self.start_sample
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees end > start
    }
}

/// Default window of 32 samples (16 ms at 2000 Hz), non-overlapping.
pub const DEFAULT_WINDOW_LEN: usize = 32;

/// Average short-time energy: for frame k over `n` channels,
/// `E_k = (1 / (window_len * n)) * sum_i sum_j x[k,i,j]^2`.
/// Frames tile the signal with the given hop; a trailing partial window is
/// dropped.
pub fn short_time_energy(rec: &Recording, window_len: usize, hop: usize) -> Result<EnergySeries> {
    if window_len < 1 || hop < 1 {
        return Err(Error::Parameter(format!(
            "window_len and hop must be >= 1, got {window_len} and {hop}"
        )));
    }
    let n_samples = rec.n_samples();
    if n_samples < window_len {
        return Err(Error::Length {
            what: "short-time energy input".into(),
            needed: window_len,
            got: n_samples,
        });
    }
    let n_channels = rec.n_channels() as f64;
    let norm = 1.0 / (window_len as f64 * n_channels);
    let mut energies = Vec::new();
    let mut frame_starts = Vec::new();
    let mut start = 0;
    while start + window_len <= n_samples {
        let mut acc = 0.0;
        for ch in &rec.samples {
            for &x in &ch[start..start + window_len] {
                acc += x * x;
            }
        }
        energies.push(acc * norm);
        frame_starts.push(start);
        start += hop;
    }
    Ok(EnergySeries { window_len, hop, energies, frame_starts })
}

/// Start/stop thresholds derived from a leading calibration interval assumed
/// to be rest: `th1 = mean + 5 sd`, `th2 = mean + 2 sd` of the baseline frame
/// energies. Floored so the `th > 0` invariant holds on silent baselines.
pub fn baseline_thresholds(energy: &EnergySeries, calibration_samples: usize) -> Result<Thresholds> {
    let baseline: Vec<f64> = energy
        .frame_starts
        .iter()
        .zip(&energy.energies)
        .take_while(|(start, _)| **start + energy.window_len <= calibration_samples)
        .map(|(_, e)| *e)
        .collect();
    if baseline.len() < 2 {
        return Err(Error::Length {
            what: "threshold calibration interval".into(),
            needed: 2 * energy.window_len,
            got: calibration_samples,
        });
    }
    let n = baseline.len() as f64;
    let mean = baseline.iter().sum::<f64>() / n;
    let var = baseline.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let floor = 1e-12;
    Thresholds::new((mean + 5.0 * sd).max(floor), (mean + 2.0 * sd).max(floor))
}

/// Two-threshold state machine over the energy frames.
///
/// IDLE -> ACTIVE when `E_k > th1`, marking the start at that frame's start
/// sample; ACTIVE -> IDLE when `E_k < th2`, marking the end at that frame's
/// start sample. A candidate is kept iff `min_len < L < max_len`. A segment
/// still ACTIVE at the end of the signal is closed at the last frame's start
/// and gated the same way.
pub fn detect_segments(
    energy: &EnergySeries,
    th: Thresholds,
    min_len: usize,
    max_len: usize,
) -> Result<Vec<Segment>> {
    if min_len >= max_len {
        return Err(Error::Parameter(format!(
            "min_len {min_len} must be below max_len {max_len}"
        )));
    }
    let mut segments = Vec::new();
    let mut active_start: Option<usize> = None;
    let gate = |s: usize, e: usize, out: &mut Vec<Segment>| {
        if e > s {
            let len = e - s;
            if len > min_len && len < max_len {
                out.push(Segment { start_sample: s, end_sample: e });
            }
        }
    };
    for (k, &e_k) in energy.energies.iter().enumerate() {
        match active_start {
            None => {
                if e_k > th.th1 {
                    active_start = Some(energy.frame_starts[k]);
                }
            }
            Some(s) => {
                if e_k < th.th2 {
                    gate(s, energy.frame_starts[k], &mut segments);
                    active_start = None;
                }
            }
        }
    }
    if let (Some(s), Some(&last)) = (active_start, energy.frame_starts.last()) {
        gate(s, last, &mut segments);
    }
    Ok(segments)
}

/// Per-channel slice `[start, end)` of a recording; metadata preserved.
pub fn extract_segment(rec: &Recording, seg: &Segment) -> Result<Recording> {
    if seg.end_sample > rec.n_samples() {
        return Err(Error::Bounds(format!(
            "segment [{}, {}) exceeds recording length {}",
            seg.start_sample,
            seg.end_sample,
            rec.n_samples()
        )));
    }
    Ok(Recording {
        sample_rate_hz: rec.sample_rate_hz,
        channels: rec.channels.clone(),
        samples: rec
            .samples
            .iter()
            .map(|ch| ch[seg.start_sample..seg.end_sample].to_vec())
            .collect(),
        trial_label: rec.trial_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(channels: Vec<Vec<f64>>) -> Recording {
        let names = (1..=channels.len()).map(|i| format!("ch{i}")).collect();
        Recording::new(2000.0, names, channels).unwrap()
    }

    /// Straightforward reference for the windowed double sum.
    fn naive_energy(channels: &[Vec<f64>], window: usize, hop: usize) -> Vec<f64> {
        let n = channels[0].len();
        let mut out = Vec::new();
        let mut start = 0;
        while start + window <= n {
            let mut total = 0.0;
            for i in 0..window {
                for ch in channels {
                    total += ch[start + i] * ch[start + i];
                }
            }
            out.push(total / (window as f64 * channels.len() as f64));
            start += hop;
        }
        out
    }

    #[test]
    fn constant_signal_energy_is_c_squared() {
        let c = 0.35;
        let r = rec(vec![vec![c; 256], vec![c; 256], vec![c; 256]]);
        let e = short_time_energy(&r, 32, 32).unwrap();
        assert_eq!(e.energies.len(), 8);
        for v in &e.energies {
            assert!((v - c * c).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_signal_has_zero_energy() {
        let r = rec(vec![vec![0.0; 100]]);
        let e = short_time_energy(&r, 32, 32).unwrap();
        assert!(e.energies.iter().all(|&v| v == 0.0));
        assert_eq!(e.frame_starts, vec![0, 32, 64]);
    }

    #[test]
    fn random_three_channel_matches_naive_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let channels: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..1000).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let r = rec(channels.clone());
        let e = short_time_energy(&r, 32, 32).unwrap();
        let expect = naive_energy(&channels, 32, 32);
        assert_eq!(e.energies.len(), expect.len());
        for (a, b) in e.energies.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn too_short_signal_is_a_length_error() {
        let r = rec(vec![vec![0.0; 10]]);
        assert!(matches!(
            short_time_energy(&r, 32, 32).unwrap_err(),
            Error::Length { .. }
        ));
    }

    fn energy_of(vals: Vec<f64>) -> EnergySeries {
        let frame_starts = (0..vals.len()).map(|k| k * 32).collect();
        EnergySeries { window_len: 32, hop: 32, energies: vals, frame_starts }
    }

    #[test]
    fn burst_inside_gate_is_accepted_and_short_burst_rejected() {
        let th = Thresholds::new(1.0, 0.5).unwrap();
        // 94 active frames -> L = 94*32 = 3008 samples
        let mut vals = vec![0.1; 10];
        vals.extend(vec![2.0; 94]);
        vals.extend(vec![0.1; 10]);
        let segs = detect_segments(&energy_of(vals), th, 2000, 4000).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].len(), 3008);

        // 47 active frames -> L = 1504 < 2000: fluctuation noise
        let mut vals = vec![0.1; 10];
        vals.extend(vec![2.0; 47]);
        vals.extend(vec![0.1; 10]);
        let segs = detect_segments(&energy_of(vals), th, 2000, 4000).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn flat_zero_signal_detects_nothing() {
        let th = Thresholds::new(1.0, 0.5).unwrap();
        let segs = detect_segments(&energy_of(vec![0.0; 200]), th, 2000, 4000).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn active_at_end_of_signal_is_closed_and_gated() {
        let th = Thresholds::new(1.0, 0.5).unwrap();
        let mut vals = vec![0.1; 5];
        vals.extend(vec![2.0; 90]); // runs to the end; closes at last frame start
        let segs = detect_segments(&energy_of(vals), th, 2000, 4000).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].start_sample, 5 * 32);
        assert_eq!(segs[0].end_sample, 94 * 32);
    }

    /// Synthetic trial with known envelope edges: silence, band-limited burst,
    /// silence. Thresholds derived from the leading rest interval.
    #[test]
    fn synthetic_burst_recovered_within_one_window() {
        let fs = 2000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 6000;
        let s_true = 1000; // 0.5 s
        let e_true = 4000; // + 1.5 s burst, then 1 s silence
        let mut chans = Vec::new();
        for _ in 0..3 {
            let mut x: Vec<f64> = (0..n).map(|_| 0.01 * rng.gen_range(-1.0..1.0)).collect();
            for (i, v) in x.iter_mut().enumerate().take(e_true).skip(s_true) {
                let carrier = (2.0 * std::f64::consts::PI * 97.0 * i as f64 / fs).sin();
                *v += 0.8 * carrier * rng.gen_range(0.5..1.0);
            }
            chans.push(x);
        }
        let r = rec(chans);
        let e = short_time_energy(&r, 32, 32).unwrap();
        let th = baseline_thresholds(&e, 500).unwrap();
        let segs = detect_segments(&e, th, 2000, 4000).unwrap();
        assert_eq!(segs.len(), 1, "thresholds {th:?}");
        assert!(
            (segs[0].start_sample as i64 - s_true as i64).unsigned_abs() <= 32,
            "start {}",
            segs[0].start_sample
        );
        assert!(
            (segs[0].end_sample as i64 - e_true as i64).unsigned_abs() <= 32,
            "end {}",
            segs[0].end_sample
        );
    }

    #[test]
    fn extract_segment_slices_and_preserves_metadata() {
        let ramp: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut r = rec(vec![ramp]);
        r.trial_label = Some(crate::types::ClassLabel::A4);
        let whole = extract_segment(&r, &Segment::new(0, 100).unwrap()).unwrap();
        assert_eq!(whole.samples[0], r.samples[0]);
        let seg = extract_segment(&r, &Segment::new(10, 20).unwrap()).unwrap();
        assert_eq!(seg.samples[0], (10..20).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(seg.trial_label, Some(crate::types::ClassLabel::A4));
        assert!(extract_segment(&r, &Segment::new(50, 200).unwrap()).is_err());
    }

    #[test]
    fn degenerate_segment_is_refused_at_construction() {
        assert!(Segment::new(5, 5).is_err());
        assert!(Segment::new(6, 5).is_err());
    }

    /// End-to-end oracle: a direct transcription of the three detection steps
    /// run against the production path on short random signals.
    #[test]
    fn oracle_equivalence_on_short_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(500..10_000);
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let base = rng.gen_range(-0.05..0.05);
                    if (i / 700) % 2 == 1 {
                        base + rng.gen_range(-1.0..1.0)
                    } else {
                        base
                    }
                })
                .collect();
            let r = rec(vec![x.clone()]);
            let e = short_time_energy(&r, 32, 32).unwrap();
            let th = Thresholds::new(0.05, 0.01).unwrap();
            let got = detect_segments(&e, th, 500, 2500).unwrap();

            // reference: recompute energies and walk the state machine inline
            let energies = naive_energy(&[x], 32, 32);
            let mut expect: Vec<(usize, usize)> = Vec::new();
            let mut active: Option<usize> = None;
            for (k, &ek) in energies.iter().enumerate() {
                match active {
                    None if ek > th.th1 => active = Some(k * 32),
                    Some(s) if ek < th.th2 => {
                        let l = k * 32 - s;
                        if l > 500 && l < 2500 {
                            expect.push((s, k * 32));
                        }
                        active = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = active {
                let last = (energies.len() - 1) * 32;
                let l = last.saturating_sub(s);
                if l > 500 && l < 2500 {
                    expect.push((s, last));
                }
            }
            let got_pairs: Vec<(usize, usize)> =
                got.iter().map(|s| (s.start_sample, s.end_sample)).collect();
            assert_eq!(got_pairs, expect);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Raising th1 never increases the number of detected segments.
        #[test]
        fn raising_th1_never_adds_segments(
            vals in proptest::collection::vec(0.0f64..4.0, 40..200),
            th1 in 0.5f64..2.0,
            bump in 0.0f64..2.0,
        ) {
            let th2 = 0.25;
            let e = energy_of(vals);
            let lo = detect_segments(&e, Thresholds::new(th1, th2).unwrap(), 100, 3000).unwrap();
            let hi = detect_segments(&e, Thresholds::new(th1 + bump, th2).unwrap(), 100, 3000).unwrap();
            prop_assert!(hi.len() <= lo.len());
        }

        /// Scaling samples by a power of two scales every energy by alpha^2
        /// exactly, so detection with scaled thresholds is identical.
        #[test]
        fn power_of_two_scale_equivariance(
            raw in proptest::collection::vec(-1.0f64..1.0, 256..800),
            exp in -2i32..3,
        ) {
            let alpha = 2.0f64.powi(exp);
            let r1 = rec(vec![raw.clone()]);
            let r2 = rec(vec![raw.iter().map(|v| alpha * v).collect()]);
            let e1 = short_time_energy(&r1, 32, 32).unwrap();
            let e2 = short_time_energy(&r2, 32, 32).unwrap();
            for (a, b) in e1.energies.iter().zip(&e2.energies) {
                prop_assert_eq!(alpha * alpha * a, *b);
            }
            let th = Thresholds::new(0.09, 0.03).unwrap();
            let th_scaled = Thresholds::new(0.09 * alpha * alpha, 0.03 * alpha * alpha).unwrap();
            let s1 = detect_segments(&e1, th, 100, 700).unwrap();
            let s2 = detect_segments(&e2, th_scaled, 100, 700).unwrap();
            prop_assert_eq!(s1, s2);
        }
    }
}
