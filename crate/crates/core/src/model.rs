//! Trained-model bundle and its versioned JSON serialization.
//!
//! A model file carries everything inference needs: the classifier kind and
//! all of its parameters, the min-max normalization bounds, and the ordered
//! list of selected feature names. Prediction from a loaded file selects the
//! named columns from the incoming matrix, normalizes them with the stored
//! bounds, and runs the classifier.

use crate::error::{Error, Result};
use crate::lda::{predict_lda, LdaModel};
use crate::mlp::{predict_mlp, MlpModel};
use crate::preprocess::{apply_minmax, NormalizationParams};
use crate::svm_multi::{predict_svm, SvmMulticlassModel};
use crate::types::{ClassLabel, FeatureMatrix};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Bpnn(MlpModel),
    Lda(LdaModel),
    Svm(SvmMulticlassModel),
}

impl Classifier {
    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::Bpnn(_) => "bpnn",
            Classifier::Lda(_) => "lda",
            Classifier::Svm(_) => "svm",
        }
    }

    /// Predict on rows already selected and normalized.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        match self {
            Classifier::Bpnn(m) => Ok(predict_mlp(m, rows)?.0),
            Classifier::Lda(m) => predict_lda(m, rows),
            Classifier::Svm(m) => predict_svm(m, rows),
        }
    }
}

/// Inference bundle persisted as the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub classifier: Classifier,
    /// Normalization bounds for the selected columns, in selected order.
    pub normalization: NormalizationParams,
    /// Ordered names of the columns the classifier consumes.
    pub selected_features: Vec<String>,
    pub seed: u64,
}

impl TrainedModel {
    pub fn new(
        classifier: Classifier,
        normalization: NormalizationParams,
        selected_features: Vec<String>,
        seed: u64,
    ) -> Result<TrainedModel> {
        if normalization.n_features() != selected_features.len() {
            return Err(Error::Dimension {
                what: "model normalization vs selected features".into(),
                expected: selected_features.len(),
                got: normalization.n_features(),
            });
        }
        Ok(TrainedModel {
            schema_version: MODEL_SCHEMA_VERSION,
            classifier,
            normalization,
            selected_features,
            seed,
        })
    }

    /// Select the stored columns by name from `raw`, normalize, and predict.
    /// `raw` may carry extra columns; they are ignored.
    pub fn predict(&self, raw: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        let selected = self.select_named(raw)?;
        let normalized = apply_minmax(&self.normalization, &selected)?;
        self.classifier.predict(&normalized)
    }

    fn select_named(&self, raw: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut cols = Vec::with_capacity(self.selected_features.len());
        for name in &self.selected_features {
            let idx = raw
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| {
                    Error::Dimension {
                        what: format!("input is missing feature column {name:?}"),
                        expected: self.selected_features.len(),
                        got: raw.n_cols(),
                    }
                })?;
            cols.push(idx);
        }
        FeatureMatrix::new(
            self.selected_features.clone(),
            raw.values
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).collect())
                .collect(),
            raw.labels.clone(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("model serialization failed: {e}")))?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: TrainedModel = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: model parse failed: {e}", path.display())))?;
        if model.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "{}: unsupported model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                path.display(),
                model.schema_version
            )));
        }
        Ok(model)
    }
}
