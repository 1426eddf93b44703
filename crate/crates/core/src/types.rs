//! Core data model: recordings, class labels, feature matrices, and the
//! dataset manifest, together with their CSV serializations.
//!
//! CSV contract for recordings: first line `t,ch1,ch2,...,chN`, then one row
//! per sample with the time column strictly increasing at `1/sample_rate_hz`
//! spacing (validated within 1e-6 s). Values are written as 12-significant-
//! digit decimals, so a save/load round trip preserves samples to better than
//! 1e-9 relative.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

/// One of the eight movement classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 8] = [
        ClassLabel::A1,
        ClassLabel::A2,
        ClassLabel::A3,
        ClassLabel::A4,
        ClassLabel::A5,
        ClassLabel::A6,
        ClassLabel::A7,
        ClassLabel::A8,
    ];

    pub const COUNT: usize = 8;

    /// Zero-based index (A1 -> 0, ..., A8 -> 7).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<ClassLabel> {
        Self::ALL.get(idx).copied()
    }

    pub fn parse(s: &str) -> Result<ClassLabel> {
        let t = s.trim();
        for label in Self::ALL {
            if t == label.as_str() {
                return Ok(label);
            }
        }
        Err(Error::Format(format!(
            "unknown class label {t:?} (expected A1..A8)"
        )))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::A1 => "A1",
            ClassLabel::A2 => "A2",
            ClassLabel::A3 => "A3",
            ClassLabel::A4 => "A4",
            ClassLabel::A5 => "A5",
            ClassLabel::A6 => "A6",
            ClassLabel::A7 => "A7",
            ClassLabel::A8 => "A8",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Multi-channel sampled signal. Channel rows all have equal length and
/// every sample is finite; amplitudes are in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub sample_rate_hz: f64,
    pub channels: Vec<String>,
    /// `samples[ch][i]` = amplitude of channel `ch` at sample `i`.
    pub samples: Vec<Vec<f64>>,
    pub trial_label: Option<ClassLabel>,
}

impl Recording {
    pub fn new(
        sample_rate_hz: f64,
        channels: Vec<String>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Recording> {
        let rec = Recording {
            sample_rate_hz,
            channels,
            samples,
            trial_label: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz <= 0.0 || !self.sample_rate_hz.is_finite() {
            return Err(Error::Invariant(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.samples.is_empty() {
            return Err(Error::Invariant("recording must have at least one channel".into()));
        }
        if self.channels.len() != self.samples.len() {
            return Err(Error::Dimension {
                what: "channel labels vs sample rows".into(),
                expected: self.samples.len(),
                got: self.channels.len(),
            });
        }
        let n = self.samples[0].len();
        for (ch, row) in self.samples.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invariant(format!(
                    "channel {} has {} samples, channel 0 has {n}",
                    self.channels[ch],
                    row.len()
                )));
            }
            if let Some(i) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Invariant(format!(
                    "non-finite sample at channel {} index {i}",
                    self.channels[ch]
                )));
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, |c| c.len())
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }
}

/// Maximum deviation of the time column from uniform spacing, in seconds.
const TIME_SPACING_TOL_S: f64 = 1e-6;

/// Load a recording from the CSV contract (`t,ch1,...,chN` header).
pub fn load_recording(path: &Path) -> Result<Recording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "t" {
        return Err(Error::Format(format!(
            "{}: header must be `t,ch1,...,chN`, got {header:?}",
            path.display()
        )));
    }
    let channels: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let n_channels = channels.len();

    let mut times: Vec<f64> = Vec::new();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n_channels];
    for (row_idx, line) in lines.enumerate() {
        let row = row_idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_channels + 1 {
            return Err(Error::Format(format!(
                "{}: ragged row {row}: expected {} cells, got {}",
                path.display(),
                n_channels + 1,
                cells.len()
            )));
        }
        let parse = |cell: &str| -> Result<f64> {
            cell.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { row, msg: format!("{cell:?}: {e}") })
        };
        times.push(parse(cells[0])?);
        for (ch, cell) in cells[1..].iter().enumerate() {
            samples[ch].push(parse(cell)?);
        }
    }

    if times.is_empty() {
        return Err(Error::Format(format!("{}: no samples", path.display())));
    }
    let sample_rate_hz = infer_sample_rate(&times)?;
    Recording::new(sample_rate_hz, channels, samples)
}

/// Derive the sample rate from the time column and check uniform spacing.
fn infer_sample_rate(times: &[f64]) -> Result<f64> {
    if times.len() == 1 {
        return Err(Error::Format(
            "cannot infer sample rate from a single sample".into(),
        ));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(Error::Format(format!(
            "time column must be strictly increasing (t1-t0 = {dt})"
        )));
    }
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > TIME_SPACING_TOL_S {
            return Err(Error::Format(format!(
                "non-uniform time spacing at row {}: {step} vs {dt}",
                i + 2
            )));
        }
    }
    let fs = 1.0 / dt;
    // Snap to an integer rate when the text round trip landed within 1e-4 of one.
    let snapped = fs.round();
    if snapped > 0.0 && (fs - snapped).abs() / snapped < 1e-4 {
        Ok(snapped)
    } else {
        Ok(fs)
    }
}

/// Write a recording under the CSV contract. Refuses non-finite samples.
pub fn save_recording(rec: &Recording, path: &Path) -> Result<()> {
    rec.validate()?;
    let n = rec.n_samples();
    let dt = 1.0 / rec.sample_rate_hz;
    let mut out = String::with_capacity(24 * n * (rec.n_channels() + 1));
    out.push('t');
    for ch in &rec.channels {
        out.push(',');
        out.push_str(ch);
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&format!("{:.9}", i as f64 * dt));
        for ch in &rec.samples {
            out.push(',');
            out.push_str(&format_sample(ch[i]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// 12-significant-digit decimal text.
pub(crate) fn format_sample(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.11e}")
    }
}

/// Ordered list of (recording file, class label) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<(PathBuf, ClassLabel)>,
    pub schema_version: u32,
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

impl DatasetManifest {
    pub fn new(entries: Vec<(PathBuf, ClassLabel)>) -> DatasetManifest {
        DatasetManifest { entries, schema_version: MANIFEST_SCHEMA_VERSION }
    }

    /// Parse a manifest file: one `relative/path.csv,<A1..A8>` per line,
    /// `#` comments and blank lines allowed.
    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (file, label) = line.rsplit_once(',').ok_or_else(|| Error::Format(format!(
                "{}: line {}: expected `path,label`",
                path.display(),
                i + 1
            )))?;
            entries.push((PathBuf::from(file.trim()), ClassLabel::parse(label)?));
        }
        if entries.is_empty() {
            return Err(Error::Format(format!(
                "{}: manifest has no entries",
                path.display()
            )));
        }
        Ok(DatasetManifest::new(entries))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (file, label) in &self.entries {
            out.push_str(&format!("{},{}\n", file.display(), label));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Load every referenced recording, in manifest order, attaching labels.
    /// Relative entry paths are resolved against `base_dir`.
    pub fn load_recordings(&self, base_dir: &Path) -> Result<Vec<Recording>> {
        self.entries
            .iter()
            .map(|(file, label)| {
                let full = if file.is_absolute() {
                    file.clone()
                } else {
                    base_dir.join(file)
                };
                let mut rec = load_recording(&full)?;
                rec.trial_label = Some(*label);
                Ok(rec)
            })
            .collect()
    }
}

/// Rows = trials, columns = named features, plus one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    /// `values[row][col]`
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        values: Vec<Vec<f64>>,
        labels: Vec<ClassLabel>,
    ) -> Result<FeatureMatrix> {
        let m = FeatureMatrix { feature_names, values, labels };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Invariant("feature matrix must have at least one row".into()));
        }
        if self.labels.len() != self.values.len() {
            return Err(Error::Dimension {
                what: "feature matrix labels".into(),
                expected: self.values.len(),
                got: self.labels.len(),
            });
        }
        for (r, row) in self.values.iter().enumerate() {
            if row.len() != self.feature_names.len() {
                return Err(Error::Dimension {
                    what: format!("feature row {r}"),
                    expected: self.feature_names.len(),
                    got: row.len(),
                });
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Invariant(format!(
                    "non-finite feature value at row {r}, column {} ({})",
                    c, self.feature_names[c]
                )));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    /// Rows per class, indexed by `ClassLabel::index`.
    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut counts = [0usize; ClassLabel::COUNT];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// CSV with header `feature names..,label`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.feature_names.join(","));
        out.push_str(",label\n");
        for (row, label) in self.values.iter().zip(&self.labels) {
            for v in row {
                out.push_str(&format_sample(*v));
                out.push(',');
            }
            out.push_str(label.as_str());
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<FeatureMatrix> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || *cols.last().unwrap() != "label" {
            return Err(Error::Format(format!(
                "{}: header must end with `label`",
                path.display()
            )));
        }
        let feature_names: Vec<String> = cols[..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row_idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != feature_names.len() + 1 {
                return Err(Error::Format(format!(
                    "{}: ragged row {}: expected {} cells, got {}",
                    path.display(),
                    row_idx + 1,
                    feature_names.len() + 1,
                    cells.len()
                )));
            }
            let mut row = Vec::with_capacity(feature_names.len());
            for cell in &cells[..cells.len() - 1] {
                row.push(cell.trim().parse::<f64>().map_err(|e| Error::Parse {
                    row: row_idx + 1,
                    msg: format!("{cell:?}: {e}"),
                })?);
            }
            values.push(row);
            labels.push(ClassLabel::parse(cells[cells.len() - 1])?);
        }
        FeatureMatrix::new(feature_names, values, labels)
    }
}
