//! Min-max normalization and seeded stratified train/test splitting.
//!
//! Normalization parameters are always fitted on the training partition only;
//! applying them to held-out rows may produce values outside [0,1], which are
//! clamped to [-0.5, 1.5] as an outlier guard.

use crate::error::{Error, Result};
use crate::types::{ClassLabel, FeatureMatrix};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-feature (min, max) learned on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormalizationParams {
    pub fn n_features(&self) -> usize {
        self.mins.len()
    }
}

/// Stratified split specification; the split is always stratified by class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Column-wise min and max over the training rows.
pub fn fit_minmax(train: &FeatureMatrix) -> NormalizationParams {
    let d = train.n_cols();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in &train.values {
        for (c, &v) in row.iter().enumerate() {
            mins[c] = mins[c].min(v);
            maxs[c] = maxs[c].max(v);
        }
    }
    NormalizationParams { mins, maxs }
}

/// Lower clamp for normalized held-out values.
pub const CLAMP_LO: f64 = -0.5;
/// Upper clamp for normalized held-out values.
pub const CLAMP_HI: f64 = 1.5;

/// `(x - min) / (max - min)`, with degenerate columns mapping to 0.5 and the
/// result clamped to [-0.5, 1.5].
pub fn apply_minmax(params: &NormalizationParams, m: &FeatureMatrix) -> Result<FeatureMatrix> {
    if m.n_cols() != params.n_features() {
        return Err(Error::Dimension {
            what: "normalization".into(),
            expected: params.n_features(),
            got: m.n_cols(),
        });
    }
    let values = m
        .values
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, &v)| {
                    let span = params.maxs[c] - params.mins[c];
                    if span == 0.0 {
                        0.5
                    } else {
                        ((v - params.mins[c]) / span).clamp(CLAMP_LO, CLAMP_HI)
                    }
                })
                .collect()
        })
        .collect();
    FeatureMatrix::new(m.feature_names.clone(), values, m.labels.clone())
}

/// Seeded stratified split. Per class, `round(fraction * class_size)` rows go
/// to the training partition (clamped so both partitions stay non-empty);
/// rows keep their original relative order inside each partition.
pub fn stratified_split(
    m: &FeatureMatrix,
    spec: &SplitSpec,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train fraction must lie in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let counts = m.class_counts();
    for label in ClassLabel::ALL {
        let c = counts[label.index()];
        if c > 0 && c < 2 {
            return Err(Error::Parameter(format!(
                "class {label} has only {c} row(s); stratified splitting needs at least 2"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_rows: Vec<usize> = Vec::new();
    let mut test_rows: Vec<usize> = Vec::new();
    for label in ClassLabel::ALL {
        let mut rows: Vec<usize> = (0..m.n_rows()).filter(|&r| m.labels[r] == label).collect();
        if rows.is_empty() {
            continue;
        }
        let n_train = ((spec.train_fraction * rows.len() as f64).round() as usize)
            .clamp(1, rows.len() - 1);
        rows.shuffle(&mut rng);
        train_rows.extend(&rows[..n_train]);
        test_rows.extend(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let take = |rows: &[usize]| -> Result<FeatureMatrix> {
        FeatureMatrix::new(
            m.feature_names.clone(),
            rows.iter().map(|&r| m.values[r].clone()).collect(),
            rows.iter().map(|&r| m.labels[r]).collect(),
        )
    };
    Ok((take(&train_rows)?, take(&test_rows)?))
}
