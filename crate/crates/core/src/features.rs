//! Time- and frequency-domain feature extraction from segmented recordings.
//!
//! The default catalogue is 22 features per channel: 17 time-domain (MAV,
//! RMS, VAR, SD, WL, ZC, SSC, WAMP, IEMG, LOG, DASDV, SSI, MYOP, AAC,
//! skewness, kurtosis, TM3) and 5 frequency-domain (MNF, MDF, PKF, MNP, TTP)
//! computed from the one-sided periodogram of the mean-removed segment.
//! Extracting from the first two channels yields the 44-dimensional vector.
//!
//! The amplitude thresholds used by ZC/SSC/WAMP/MYOP are expressed as a
//! fraction of the channel segment's RMS, so counting features are invariant
//! under positive rescaling of the input.

use crate::error::{Error, Result};
use crate::spectrum::one_sided_periodogram;
use crate::types::{FeatureMatrix, Recording};

/// Minimum segment length accepted by [`extract_features`].
pub const MIN_SEGMENT_LEN: usize = 64;

/// Default channels used for feature extraction (first two).
pub const DEFAULT_CHANNELS: [usize; 2] = [0, 1];

/// Default amplitude threshold, as a fraction of the segment RMS.
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureDomain {
    Time,
    Frequency,
}

/// How a feature responds to `x -> alpha * x` for `alpha > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleBehavior {
    /// value(alpha x) = alpha * value(x)
    Linear,
    /// value(alpha x) = alpha^2 * value(x)
    Quadratic,
    /// value(alpha x) = alpha^3 * value(x)
    Cubic,
    /// unchanged under positive rescaling
    Invariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    MeanAbsoluteValue,
    RootMeanSquare,
    Variance,
    StandardDeviation,
    WaveformLength,
    ZeroCrossings,
    SlopeSignChanges,
    WillisonAmplitude,
    IntegratedEmg,
    LogDetector,
    DiffAbsStdDev,
    SimpleSquareIntegral,
    MyopulsePercentage,
    AverageAmplitudeChange,
    Skewness,
    Kurtosis,
    ThirdTemporalMoment,
    MeanFrequency,
    MedianFrequency,
    PeakFrequency,
    MeanPower,
    TotalPower,
}

impl FeatureKind {
    pub fn short_name(self) -> &'static str {
        use FeatureKind::*;
        match self {
            MeanAbsoluteValue => "mav",
            RootMeanSquare => "rms",
            Variance => "var",
            StandardDeviation => "sd",
            WaveformLength => "wl",
            ZeroCrossings => "zc",
            SlopeSignChanges => "ssc",
            WillisonAmplitude => "wamp",
            IntegratedEmg => "iemg",
            LogDetector => "log",
            DiffAbsStdDev => "dasdv",
            SimpleSquareIntegral => "ssi",
            MyopulsePercentage => "myop",
            AverageAmplitudeChange => "aac",
            Skewness => "skw",
            Kurtosis => "kurt",
            ThirdTemporalMoment => "tm3",
            MeanFrequency => "mnf",
            MedianFrequency => "mdf",
            PeakFrequency => "pkf",
            MeanPower => "mnp",
            TotalPower => "ttp",
        }
    }

    pub fn domain(self) -> FeatureDomain {
        use FeatureKind::*;
        match self {
            MeanFrequency | MedianFrequency | PeakFrequency | MeanPower | TotalPower => {
                FeatureDomain::Frequency
            }
            _ => FeatureDomain::Time,
        }
    }

    pub fn scale_behavior(self) -> ScaleBehavior {
        use FeatureKind::*;
        match self {
            MeanAbsoluteValue | RootMeanSquare | StandardDeviation | WaveformLength
            | IntegratedEmg | LogDetector | DiffAbsStdDev | AverageAmplitudeChange => {
                ScaleBehavior::Linear
            }
            Variance | SimpleSquareIntegral | MeanPower | TotalPower => ScaleBehavior::Quadratic,
            ThirdTemporalMoment => ScaleBehavior::Cubic,
            ZeroCrossings | SlopeSignChanges | WillisonAmplitude | MyopulsePercentage
            | Skewness | Kurtosis | MeanFrequency | MedianFrequency | PeakFrequency => {
                ScaleBehavior::Invariant
            }
        }
    }

    pub const ALL: [FeatureKind; 22] = [
        FeatureKind::MeanAbsoluteValue,
        FeatureKind::RootMeanSquare,
        FeatureKind::Variance,
        FeatureKind::StandardDeviation,
        FeatureKind::WaveformLength,
        FeatureKind::ZeroCrossings,
        FeatureKind::SlopeSignChanges,
        FeatureKind::WillisonAmplitude,
        FeatureKind::IntegratedEmg,
        FeatureKind::LogDetector,
        FeatureKind::DiffAbsStdDev,
        FeatureKind::SimpleSquareIntegral,
        FeatureKind::MyopulsePercentage,
        FeatureKind::AverageAmplitudeChange,
        FeatureKind::Skewness,
        FeatureKind::Kurtosis,
        FeatureKind::ThirdTemporalMoment,
        FeatureKind::MeanFrequency,
        FeatureKind::MedianFrequency,
        FeatureKind::PeakFrequency,
        FeatureKind::MeanPower,
        FeatureKind::TotalPower,
    ];

    pub fn parse(name: &str) -> Result<FeatureKind> {
        FeatureKind::ALL
            .iter()
            .copied()
            .find(|k| k.short_name() == name)
            .ok_or_else(|| Error::Config(vec![format!("unknown feature name {name:?}")]))
    }
}

/// One named feature plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDefinition {
    pub kind: FeatureKind,
    /// Fraction of the channel RMS used as the amplitude threshold by
    /// ZC/SSC/WAMP/MYOP; ignored by the other kinds.
    pub threshold_factor: f64,
}

impl FeatureDefinition {
    pub fn name(&self) -> &'static str {
        self.kind.short_name()
    }
}

/// The full 22-feature catalogue with the default threshold factor.
pub fn default_definitions() -> Vec<FeatureDefinition> {
    FeatureKind::ALL
        .iter()
        .map(|&kind| FeatureDefinition { kind, threshold_factor: DEFAULT_THRESHOLD_FACTOR })
        .collect()
}

/// Names of the output columns for the given channels and definitions:
/// channels-major, definitions-minor, rendered `ch{j}_{feature}`.
pub fn feature_names(channels: &[usize], defs: &[FeatureDefinition]) -> Vec<String> {
    let mut names = Vec::with_capacity(channels.len() * defs.len());
    for &ch in channels {
        for def in defs {
            names.push(format!("ch{}_{}", ch + 1, def.name()));
        }
    }
    names
}

/// Computed feature vector with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Everything the time-domain formulas need, computed in one pass set.
struct ChannelStats {
    threshold: f64,
    rms: f64,
}

fn channel_stats(x: &[f64], threshold_factor: f64) -> ChannelStats {
    let n = x.len() as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    ChannelStats { threshold: threshold_factor * rms, rms }
}

fn central_moment(x: &[f64], mean: f64, p: i32) -> f64 {
    x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / x.len() as f64
}

fn time_domain_value(kind: FeatureKind, x: &[f64], stats: &ChannelStats) -> f64 {
    use FeatureKind::*;
    let n = x.len() as f64;
    let t = stats.threshold;
    match kind {
        MeanAbsoluteValue => x.iter().map(|v| v.abs()).sum::<f64>() / n,
        RootMeanSquare => stats.rms,
        Variance => {
            let mean = x.iter().sum::<f64>() / n;
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        }
        StandardDeviation => time_domain_value(Variance, x, stats).sqrt(),
        WaveformLength => x.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
        ZeroCrossings => x
            .windows(2)
            .filter(|w| {
                let sign_change = (w[0] > 0.0 && w[1] < 0.0) || (w[0] < 0.0 && w[1] > 0.0);
                sign_change && (w[0] - w[1]).abs() >= t
            })
            .count() as f64,
        // The slope product has squared-amplitude units, so it is gated by t^2.
        SlopeSignChanges => x
            .windows(3)
            .filter(|w| (w[1] - w[0]) * (w[1] - w[2]) >= t * t)
            .count() as f64,
        WillisonAmplitude => x.windows(2).filter(|w| (w[0] - w[1]).abs() >= t).count() as f64,
        IntegratedEmg => x.iter().map(|v| v.abs()).sum(),
        LogDetector => (x.iter().map(|v| v.abs().max(1e-30).ln()).sum::<f64>() / n).exp(),
        DiffAbsStdDev => {
            (x.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / (n - 1.0)).sqrt()
        }
        SimpleSquareIntegral => x.iter().map(|v| v * v).sum(),
        MyopulsePercentage => x.iter().filter(|v| v.abs() >= t).count() as f64 / n,
        AverageAmplitudeChange => time_domain_value(WaveformLength, x, stats) / (n - 1.0),
        Skewness => {
            let mean = x.iter().sum::<f64>() / n;
            let m2 = central_moment(x, mean, 2);
            if m2 <= 0.0 {
                0.0
            } else {
                central_moment(x, mean, 3) / m2.powf(1.5)
            }
        }
        Kurtosis => {
            let mean = x.iter().sum::<f64>() / n;
            let m2 = central_moment(x, mean, 2);
            if m2 <= 0.0 {
                0.0
            } else {
                central_moment(x, mean, 4) / (m2 * m2) - 3.0
            }
        }
        ThirdTemporalMoment => (x.iter().map(|v| v * v * v).sum::<f64>() / n).abs(),
        _ => unreachable!("frequency-domain kind in time-domain dispatch"),
    }
}

fn frequency_domain_value(kind: FeatureKind, freqs: &[f64], power: &[f64]) -> f64 {
    use FeatureKind::*;
    let total: f64 = power.iter().sum();
    match kind {
        MeanFrequency => {
            if total <= 0.0 {
                0.0
            } else {
                freqs.iter().zip(power).map(|(f, p)| f * p).sum::<f64>() / total
            }
        }
        MedianFrequency => {
            if total <= 0.0 {
                return 0.0;
            }
            let half = total / 2.0;
            let mut acc = 0.0;
            for (f, p) in freqs.iter().zip(power) {
                acc += p;
                if acc >= half {
                    return *f;
                }
            }
            *freqs.last().unwrap()
        }
        PeakFrequency => {
            let mut best = 0usize;
            for (i, p) in power.iter().enumerate() {
                if *p > power[best] {
                    best = i;
                }
            }
            freqs[best]
        }
        MeanPower => total / power.len() as f64,
        TotalPower => total,
        _ => unreachable!("time-domain kind in frequency-domain dispatch"),
    }
}

/// Extract every definition from the selected channels of a segment.
///
/// Output ordering is channels-major, definitions-minor; frequency-domain
/// values come from the one-sided periodogram of the mean-removed channel.
pub fn extract_features(
    seg: &Recording,
    channels: &[usize],
    defs: &[FeatureDefinition],
) -> Result<FeatureVector> {
    let n = seg.n_samples();
    if n < MIN_SEGMENT_LEN {
        return Err(Error::Length {
            what: "feature extraction segment".into(),
            needed: MIN_SEGMENT_LEN,
            got: n,
        });
    }
    for &ch in channels {
        if ch >= seg.n_channels() {
            return Err(Error::Bounds(format!(
                "channel index {ch} out of range (recording has {})",
                seg.n_channels()
            )));
        }
    }
    {
        let mut seen = std::collections::HashSet::new();
        for def in defs {
            if !seen.insert(def.name()) {
                return Err(Error::Config(vec![format!(
                    "duplicate feature name {:?} in feature set",
                    def.name()
                )]));
            }
        }
    }

    let needs_spectrum = defs.iter().any(|d| d.kind.domain() == FeatureDomain::Frequency);
    let mut values = Vec::with_capacity(channels.len() * defs.len());
    for &ch in channels {
        let x = &seg.samples[ch];
        let spectrum = if needs_spectrum {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
            Some(one_sided_periodogram(&centered, seg.sample_rate_hz))
        } else {
            None
        };
        for def in defs {
            let v = match def.kind.domain() {
                FeatureDomain::Time => {
                    let stats = channel_stats(x, def.threshold_factor);
                    time_domain_value(def.kind, x, &stats)
                }
                FeatureDomain::Frequency => {
                    let (freqs, power) = spectrum.as_ref().unwrap();
                    frequency_domain_value(def.kind, freqs, power)
                }
            };
            values.push(v);
        }
    }
    Ok(FeatureVector { names: feature_names(channels, defs), values })
}

/// Assemble a feature matrix from segmented, labeled recordings in order.
pub fn build_feature_matrix(
    segments: &[Recording],
    channels: &[usize],
    defs: &[FeatureDefinition],
) -> Result<FeatureMatrix> {
    let mut values = Vec::with_capacity(segments.len());
    let mut labels = Vec::with_capacity(segments.len());
    for (i, seg) in segments.iter().enumerate() {
        let label = seg.trial_label.ok_or_else(|| {
            Error::Invariant(format!("segment {i} has no trial label"))
        })?;
        values.push(extract_features(seg, channels, defs)?.values);
        labels.push(label);
    }
    FeatureMatrix::new(feature_names(channels, defs), values, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn segment(channels: Vec<Vec<f64>>) -> Recording {
        let names = (1..=channels.len()).map(|i| format!("ch{i}")).collect();
        Recording::new(2000.0, names, channels).unwrap()
    }

    // ---------------------------------------------------------------
    // Independent naive oracle: every formula retyped from scratch in
    // index-loop style with its own O(n^2) DFT.
    // ---------------------------------------------------------------

    fn oracle(kind: FeatureKind, x: &[f64], threshold_factor: f64, fs: f64) -> f64 {
        use FeatureKind::*;
        let n = x.len();
        let nf = n as f64;
        let mut sum_sq = 0.0;
        for i in 0..n {
            sum_sq += x[i] * x[i];
        }
        let rms = (sum_sq / nf).sqrt();
        let thr = threshold_factor * rms;
        let mut mean = 0.0;
        for i in 0..n {
            mean += x[i];
        }
        mean /= nf;

        match kind {
            MeanAbsoluteValue => {
                let mut s = 0.0;
                for i in 0..n {
                    s += x[i].abs();
                }
                s / nf
            }
            RootMeanSquare => rms,
            Variance => {
                let mut s = 0.0;
                for i in 0..n {
                    s += (x[i] - mean) * (x[i] - mean);
                }
                s / (nf - 1.0)
            }
            StandardDeviation => oracle(Variance, x, threshold_factor, fs).sqrt(),
            WaveformLength => {
                let mut s = 0.0;
                for i in 1..n {
                    s += (x[i] - x[i - 1]).abs();
                }
                s
            }
            ZeroCrossings => {
                let mut c = 0.0;
                for i in 0..n - 1 {
                    let opposite = (x[i] > 0.0 && x[i + 1] < 0.0) || (x[i] < 0.0 && x[i + 1] > 0.0);
                    if opposite && (x[i] - x[i + 1]).abs() >= thr {
                        c += 1.0;
                    }
                }
                c
            }
            SlopeSignChanges => {
                let mut c = 0.0;
                for i in 1..n - 1 {
                    if (x[i] - x[i - 1]) * (x[i] - x[i + 1]) >= thr * thr {
                        c += 1.0;
                    }
                }
                c
            }
            WillisonAmplitude => {
                let mut c = 0.0;
                for i in 0..n - 1 {
                    if (x[i] - x[i + 1]).abs() >= thr {
                        c += 1.0;
                    }
                }
                c
            }
            IntegratedEmg => {
                let mut s = 0.0;
                for i in 0..n {
                    s += x[i].abs();
                }
                s
            }
            LogDetector => {
                let mut s = 0.0;
                for i in 0..n {
                    s += x[i].abs().max(1e-30).ln();
                }
                (s / nf).exp()
            }
            DiffAbsStdDev => {
                let mut s = 0.0;
                for i in 1..n {
                    s += (x[i] - x[i - 1]) * (x[i] - x[i - 1]);
                }
                (s / (nf - 1.0)).sqrt()
            }
            SimpleSquareIntegral => sum_sq,
            MyopulsePercentage => {
                let mut c = 0.0;
                for i in 0..n {
                    if x[i].abs() >= thr {
                        c += 1.0;
                    }
                }
                c / nf
            }
            AverageAmplitudeChange => oracle(WaveformLength, x, threshold_factor, fs) / (nf - 1.0),
            Skewness => {
                let mut m2 = 0.0;
                let mut m3 = 0.0;
                for i in 0..n {
                    let d = x[i] - mean;
                    m2 += d * d;
                    m3 += d * d * d;
                }
                m2 /= nf;
                m3 /= nf;
                if m2 <= 0.0 { 0.0 } else { m3 / m2.powf(1.5) }
            }
            Kurtosis => {
                let mut m2 = 0.0;
                let mut m4 = 0.0;
                for i in 0..n {
                    let d = x[i] - mean;
                    m2 += d * d;
                    m4 += d * d * d * d;
                }
                m2 /= nf;
                m4 /= nf;
                if m2 <= 0.0 { 0.0 } else { m4 / (m2 * m2) - 3.0 }
            }
            ThirdTemporalMoment => {
                let mut s = 0.0;
                for i in 0..n {
                    s += x[i] * x[i] * x[i];
                }
                (s / nf).abs()
            }
            MeanFrequency | MedianFrequency | PeakFrequency | MeanPower | TotalPower => {
                let (freqs, power) = oracle_periodogram(x, fs);
                let total: f64 = power.iter().sum();
                match kind {
                    MeanFrequency => {
                        if total <= 0.0 {
                            0.0
                        } else {
                            let mut s = 0.0;
                            for i in 0..freqs.len() {
                                s += freqs[i] * power[i];
                            }
                            s / total
                        }
                    }
                    MedianFrequency => {
                        if total <= 0.0 {
                            return 0.0;
                        }
                        let mut acc = 0.0;
                        for i in 0..freqs.len() {
                            acc += power[i];
                            if acc >= total / 2.0 {
                                return freqs[i];
                            }
                        }
                        *freqs.last().unwrap()
                    }
                    PeakFrequency => {
                        let mut best = 0;
                        for i in 0..power.len() {
                            if power[i] > power[best] {
                                best = i;
                            }
                        }
                        freqs[best]
                    }
                    MeanPower => total / power.len() as f64,
                    TotalPower => total,
                    _ => unreachable!(),
                }
            }
        }
    }

    /// O(n^2) DFT periodogram of the mean-removed signal.
    fn oracle_periodogram(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
        let n = x.len();
        let mut mean = 0.0;
        for i in 0..n {
            mean += x[i];
        }
        mean /= n as f64;
        let n_bins = n / 2 + 1;
        let mut freqs = Vec::with_capacity(n_bins);
        let mut power = Vec::with_capacity(n_bins);
        for k in 0..n_bins {
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..n {
                let phase = -2.0 * PI * (k as f64) * (i as f64) / n as f64;
                re += (x[i] - mean) * phase.cos();
                im += (x[i] - mean) * phase.sin();
            }
            let fold = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
            freqs.push(k as f64 * fs / n as f64);
            power.push(fold * (re * re + im * im) / (n as f64 * n as f64));
        }
        (freqs, power)
    }

    #[test]
    fn constant_signal_definitional_values() {
        let c = 0.7;
        let seg = segment(vec![vec![c; 128], vec![0.0; 128]]);
        let defs = default_definitions();
        let fv = extract_features(&seg, &[0], &defs).unwrap();
        let get = |name: &str| {
            fv.values[fv.names.iter().position(|n| n == &format!("ch1_{name}")).unwrap()]
        };
        assert!((get("rms") - c).abs() < 1e-12);
        assert_eq!(get("zc"), 0.0);
        assert!((get("mav") - c).abs() < 1e-12);
        assert_eq!(get("wl"), 0.0);
    }

    #[test]
    fn alternating_signal_definitional_values() {
        let n = 128;
        let x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let seg = segment(vec![x]);
        let defs = default_definitions();
        let fv = extract_features(&seg, &[0], &defs).unwrap();
        let get = |name: &str| {
            fv.values[fv.names.iter().position(|n| n == &format!("ch1_{name}")).unwrap()]
        };
        assert!((get("mav") - 1.0).abs() < 1e-15);
        assert!((get("wl") - 2.0 * (n as f64 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn mean_frequency_of_150_hz_tone_is_within_one_bin() {
        let fs = 2000.0;
        let n = 3000;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 150.0 * i as f64 / fs).sin()).collect();
        let seg = segment(vec![x]);
        let defs = default_definitions();
        let fv = extract_features(&seg, &[0], &defs).unwrap();
        let bin = fs / n as f64;
        let get = |name: &str| {
            fv.values[fv.names.iter().position(|nm| nm == &format!("ch1_{name}")).unwrap()]
        };
        assert!((get("mnf") - 150.0).abs() <= bin, "mnf {}", get("mnf"));
        assert!((get("mdf") - 150.0).abs() <= bin, "mdf {}", get("mdf"));
        assert!((get("pkf") - 150.0).abs() <= bin, "pkf {}", get("pkf"));
    }

    #[test]
    fn default_configuration_yields_exactly_44_values() {
        let seg = segment(vec![vec![0.1; 200], vec![0.2; 200], vec![0.3; 200]]);
        let fv = extract_features(&seg, &DEFAULT_CHANNELS, &default_definitions()).unwrap();
        assert_eq!(fv.values.len(), 44);
        assert_eq!(fv.names.len(), 44);
        assert_eq!(fv.names[0], "ch1_mav");
        assert_eq!(fv.names[22], "ch2_mav");
    }

    #[test]
    fn full_default_set_matches_naive_oracle_on_random_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let defs = default_definitions();
        for trial in 0..20 {
            let n = rng.gen_range(64..400);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let seg = segment(vec![x.clone()]);
            let fv = extract_features(&seg, &[0], &defs).unwrap();
            for (def, got) in defs.iter().zip(&fv.values) {
                let expect = oracle(def.kind, &x, def.threshold_factor, 2000.0);
                let scale = got.abs().max(expect.abs()).max(1e-12);
                assert!(
                    (got - expect).abs() / scale < 1e-9,
                    "trial {trial} feature {}: {got} vs oracle {expect}",
                    def.name()
                );
            }
        }
    }

    #[test]
    fn declared_scale_behavior_holds_for_every_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 300;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let defs = default_definitions();
        let base = extract_features(&segment(vec![x.clone()]), &[0], &defs).unwrap();
        for alpha in [0.5f64, 2.0, 8.0] {
            let scaled_x: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let scaled = extract_features(&segment(vec![scaled_x]), &[0], &defs).unwrap();
            for ((def, b), s) in defs.iter().zip(&base.values).zip(&scaled.values) {
                let expect = match def.kind.scale_behavior() {
                    ScaleBehavior::Linear => alpha * b,
                    ScaleBehavior::Quadratic => alpha * alpha * b,
                    ScaleBehavior::Cubic => alpha * alpha * alpha * b,
                    ScaleBehavior::Invariant => *b,
                };
                let tol = 1e-9 * expect.abs().max(s.abs()).max(1e-12);
                assert!(
                    (s - expect).abs() <= tol,
                    "{} at alpha={alpha}: {s} vs expected {expect}",
                    def.name()
                );
            }
        }
    }

    #[test]
    fn circular_shift_leaves_spectral_features_within_one_bin() {
        let fs = 2000.0;
        let n = 1024;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // rest-padded burst in the interior
        let mut x = vec![0.0; n];
        for (i, v) in x.iter_mut().enumerate().take(700).skip(200) {
            *v = (2.0 * PI * 120.0 * i as f64 / fs).sin() * rng.gen_range(0.5..1.0);
        }
        let shift = 311;
        let shifted: Vec<f64> = (0..n).map(|i| x[(i + shift) % n]).collect();
        let defs = default_definitions();
        let a = extract_features(&segment(vec![x]), &[0], &defs).unwrap();
        let b = extract_features(&segment(vec![shifted]), &[0], &defs).unwrap();
        let bin = fs / n as f64;
        for name in ["mnf", "mdf"] {
            let idx = a.names.iter().position(|nm| nm == &format!("ch1_{name}")).unwrap();
            assert!(
                (a.values[idx] - b.values[idx]).abs() <= bin,
                "{name}: {} vs {}",
                a.values[idx],
                b.values[idx]
            );
        }
    }

    #[test]
    fn too_short_segment_and_bad_channel_are_rejected() {
        let seg = segment(vec![vec![0.1; 32]]);
        assert!(matches!(
            extract_features(&seg, &[0], &default_definitions()).unwrap_err(),
            Error::Length { .. }
        ));
        let seg = segment(vec![vec![0.1; 128]]);
        assert!(matches!(
            extract_features(&seg, &[3], &default_definitions()).unwrap_err(),
            Error::Bounds(_)
        ));
    }

    #[test]
    fn identical_segments_give_identical_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let defs = default_definitions();
        let a = extract_features(&segment(vec![x.clone()]), &[0], &defs).unwrap();
        let b = extract_features(&segment(vec![x]), &[0], &defs).unwrap();
        assert_eq!(a.values, b.values);
    }
}
