//! Seeded synthetic sEMG trial generator with ground-truth activity bounds.
//!
//! Each trial is baseline Gaussian noise plus an envelope-modulated band of
//! filtered Gaussian noise plus 50 Hz hum. The eight classes differ in their
//! per-channel amplitude gains and spectral centers; two class pairs are
//! deliberately placed close together in feature space so end-to-end
//! evaluation shows a realistic confusion structure.

use crate::dsp::{design_butterworth, filtfilt, BandKind};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::types::{save_recording, ClassLabel, DatasetManifest, Recording};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::fs;
use std::path::{Path, PathBuf};

/// Activity envelope: silence, linear rise, hold, linear fall, silence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub onset_s: f64,
    pub rise_ms: f64,
    pub hold_s: f64,
    pub fall_ms: f64,
}

impl Trapezoid {
    fn value_at(&self, t_s: f64) -> f64 {
        let rise = self.rise_ms / 1000.0;
        let fall = self.fall_ms / 1000.0;
        let t1 = self.onset_s;
        let t2 = t1 + rise;
        let t3 = t2 + self.hold_s;
        let t4 = t3 + fall;
        if t_s < t1 || t_s > t4 {
            0.0
        } else if t_s < t2 {
            (t_s - t1) / rise
        } else if t_s <= t3 {
            1.0
        } else {
            (t4 - t_s) / fall
        }
    }

    fn end_s(&self) -> f64 {
        self.onset_s + self.rise_ms / 1000.0 + self.hold_s + self.fall_ms / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    pub amplitude_gain: f64,
    pub envelope: Trapezoid,
    pub spectral_center_hz: f64,
    pub spectral_width_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_channels: usize,
    pub sample_rate_hz: f64,
    pub trial_duration_s: f64,
    /// Per class, one profile per channel.
    pub class_profiles: Vec<(ClassLabel, Vec<ChannelProfile>)>,
    /// 50 Hz mains injection amplitude (volts).
    pub hum_amplitude: f64,
    pub baseline_noise_rms: f64,
    /// Uniform per-trial envelope-onset jitter (+/- seconds).
    pub onset_jitter_s: f64,
    /// Uniform per-trial hold-duration jitter (+/- seconds).
    pub hold_jitter_s: f64,
    /// Relative per-trial, per-channel gain jitter (+/- fraction).
    pub gain_jitter: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let envelope = Trapezoid { onset_s: 0.5, rise_ms: 15.0, hold_s: 1.5, fall_ms: 60.0 };
        let profile = |gain: f64, center: f64| ChannelProfile {
            amplitude_gain: gain,
            envelope,
            spectral_center_hz: center,
            spectral_width_hz: 60.0,
        };
        // Classes differ in channel gain ratios and spectral centers.
        // A7 sits deliberately close to A3, and A8 to A4.
        let rows: [(ClassLabel, [f64; 3], [f64; 3]); 8] = [
            (ClassLabel::A1, [1.00, 0.30, 0.55], [80.0, 120.0, 100.0]),
            (ClassLabel::A2, [0.30, 1.00, 0.55], [120.0, 80.0, 100.0]),
            (ClassLabel::A3, [0.70, 0.70, 0.55], [100.0, 100.0, 100.0]),
            (ClassLabel::A4, [0.45, 0.45, 0.55], [140.0, 140.0, 100.0]),
            (ClassLabel::A5, [1.00, 0.85, 0.55], [60.0, 160.0, 100.0]),
            (ClassLabel::A6, [0.25, 0.60, 0.55], [160.0, 60.0, 100.0]),
            (ClassLabel::A7, [0.73, 0.67, 0.55], [104.0, 96.0, 100.0]),
            (ClassLabel::A8, [0.47, 0.43, 0.55], [137.0, 143.0, 100.0]),
        ];
        let class_profiles = rows
            .into_iter()
            .map(|(label, gains, centers)| {
                let profiles = (0..3)
                    .map(|ch| profile(gains[ch], centers[ch]))
                    .collect();
                (label, profiles)
            })
            .collect();
        SynthSpec {
            n_channels: 3,
            sample_rate_hz: 2000.0,
            trial_duration_s: 3.0,
            class_profiles,
            hum_amplitude: 0.05,
            baseline_noise_rms: 0.02,
            onset_jitter_s: 0.1,
            hold_jitter_s: 0.15,
            gain_jitter: 0.08,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn profiles_for(&self, label: ClassLabel) -> Result<&[ChannelProfile]> {
        self.class_profiles
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, p)| p.as_slice())
            .ok_or_else(|| Error::Parameter(format!("no synth profile for class {label}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrial {
    pub recording: Recording,
    /// True activity interval in sample indices.
    pub true_segment: (usize, usize),
    pub label: ClassLabel,
}

/// Generate one trial; bit-identical for identical `(spec, label, seed)`.
pub fn generate_trial(spec: &SynthSpec, label: ClassLabel, seed: u64) -> Result<SynthTrial> {
    let profiles = spec.profiles_for(label)?;
    if profiles.len() != spec.n_channels {
        return Err(Error::Parameter(format!(
            "class {label} has {} channel profiles, spec declares {} channels",
            profiles.len(),
            spec.n_channels
        )));
    }
    let fs = spec.sample_rate_hz;
    let n = (spec.trial_duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let onset_jit = rng.gen_range(-spec.onset_jitter_s..=spec.onset_jitter_s);
    let hold_jit = rng.gen_range(-spec.hold_jitter_s..=spec.hold_jitter_s);

    let mut channels = Vec::with_capacity(spec.n_channels);
    let mut names = Vec::with_capacity(spec.n_channels);
    let mut seg_start_s = f64::INFINITY;
    let mut seg_end_s = f64::NEG_INFINITY;
    for (ch, profile) in profiles.iter().enumerate() {
        names.push(format!("ch{}", ch + 1));
        let envelope = Trapezoid {
            onset_s: profile.envelope.onset_s + onset_jit,
            hold_s: (profile.envelope.hold_s + hold_jit).max(0.0),
            ..profile.envelope
        };
        seg_start_s = seg_start_s.min(envelope.onset_s);
        seg_end_s = seg_end_s.max(envelope.end_s());
        let gain = profile.amplitude_gain
            * (1.0 + spec.gain_jitter * rng.gen_range(-1.0..=1.0));
        let hum_phase = rng.gen_range(0.0..std::f64::consts::TAU);

        // Band-shaped unit-RMS activity carrier.
        let carrier = if gain != 0.0 {
            let white: Vec<f64> = (0..n).map(|_| unit.sample(&mut rng)).collect();
            let band = design_butterworth(
                BandKind::Bandpass,
                4,
                profile.spectral_center_hz - profile.spectral_width_hz / 2.0,
                profile.spectral_center_hz + profile.spectral_width_hz / 2.0,
                fs,
            )?;
            let shaped = filtfilt(&band, &white)?;
            let rms = (shaped.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            shaped.into_iter().map(|v| v / rms.max(1e-12)).collect()
        } else {
            // keep the RNG stream aligned so zero-gain channels stay cheap
            vec![0.0; n]
        };

        let mut samples = Vec::with_capacity(n);
        for (i, c) in carrier.iter().enumerate() {
            let t = i as f64 / fs;
            let baseline = if spec.baseline_noise_rms != 0.0 {
                spec.baseline_noise_rms * unit.sample(&mut rng)
            } else {
                0.0
            };
            let hum = spec.hum_amplitude
                * (std::f64::consts::TAU * 50.0 * t + hum_phase).sin();
            samples.push(gain * envelope.value_at(t) * c + baseline + hum);
        }
        channels.push(samples);
    }

    let mut recording = Recording::new(fs, names, channels)?;
    recording.trial_label = Some(label);
    let s = (seg_start_s * fs).round() as usize;
    let e = ((seg_end_s * fs).round() as usize).min(n);
    Ok(SynthTrial { recording, true_segment: (s, e), label })
}

/// Ground-truth row for one written trial.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRow {
    pub file: PathBuf,
    pub s_true: usize,
    pub e_true: usize,
    pub label: ClassLabel,
}

/// Write a corpus: `trials_per_class * 8` recordings plus `manifest.csv` and
/// a `ground_truth.csv` sidecar. Returns the manifest and the sidecar rows.
pub fn generate_corpus(
    spec: &SynthSpec,
    trials_per_class: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<(DatasetManifest, Vec<GroundTruthRow>)> {
    if trials_per_class < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 trials per class, got {trials_per_class}"
        )));
    }
    let trials_dir = out_dir.join("trials");
    fs::create_dir_all(&trials_dir).map_err(|e| Error::io(&trials_dir, e))?;

    let mut entries = Vec::new();
    let mut truth = Vec::new();
    for (label, _) in &spec.class_profiles {
        for t in 0..trials_per_class {
            let trial_seed = derive_seed(seed, &format!("trial-{label}-{t}"));
            let trial = generate_trial(spec, *label, trial_seed)?;
            let rel = PathBuf::from(format!("trials/{label}_{t:03}.csv"));
            save_recording(&trial.recording, &out_dir.join(&rel))?;
            truth.push(GroundTruthRow {
                file: rel.clone(),
                s_true: trial.true_segment.0,
                e_true: trial.true_segment.1,
                label: *label,
            });
            entries.push((rel, *label));
        }
    }
    let manifest = DatasetManifest::new(entries);
    manifest.save(&out_dir.join("manifest.csv"))?;

    let mut sidecar = String::from("trial,s_true,e_true,label\n");
    for row in &truth {
        sidecar.push_str(&format!(
            "{},{},{},{}\n",
            row.file.display(),
            row.s_true,
            row.e_true,
            row.label
        ));
    }
    let sidecar_path = out_dir.join("ground_truth.csv");
    fs::write(&sidecar_path, sidecar).map_err(|e| Error::io(&sidecar_path, e))?;
    Ok((manifest, truth))
}

/// Parse a `ground_truth.csv` sidecar.
pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::Format(format!(
                "{}: ground-truth line {} malformed",
                path.display(),
                i + 1
            )));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.trim().parse().map_err(|e| Error::Parse { row: i + 1, msg: format!("{s:?}: {e}") })
        };
        rows.push(GroundTruthRow {
            file: PathBuf::from(cells[0]),
            s_true: parse_idx(cells[1])?,
            e_true: parse_idx(cells[2])?,
            label: ClassLabel::parse(cells[3])?,
        });
    }
    Ok(rows)
}
