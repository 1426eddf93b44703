//! Confusion matrices, accuracy metrics, and multi-run aggregation.

use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::types::{ClassLabel, FeatureMatrix};
use std::fs;
use std::path::Path;

/// 8x8 count matrix; rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[usize; ClassLabel::COUNT]; ClassLabel::COUNT],
}

impl ConfusionMatrix {
    pub fn from_pairs(truths: &[ClassLabel], predictions: &[ClassLabel]) -> Result<ConfusionMatrix> {
        if truths.len() != predictions.len() {
            return Err(Error::Dimension {
                what: "confusion matrix inputs".into(),
                expected: truths.len(),
                got: predictions.len(),
            });
        }
        let mut counts = [[0usize; ClassLabel::COUNT]; ClassLabel::COUNT];
        for (t, p) in truths.iter().zip(predictions) {
            counts[t.index()][p.index()] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..ClassLabel::COUNT).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`, exactly.
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn row_sums(&self) -> [usize; ClassLabel::COUNT] {
        let mut sums = [0usize; ClassLabel::COUNT];
        for (i, row) in self.counts.iter().enumerate() {
            sums[i] = row.iter().sum();
        }
        sums
    }

    /// Row-normalized diagonal; classes absent from the test set report 0.
    pub fn per_class_recall(&self) -> [f64; ClassLabel::COUNT] {
        let mut recall = [0.0; ClassLabel::COUNT];
        for (i, row) in self.counts.iter().enumerate() {
            let total: usize = row.iter().sum();
            if total > 0 {
                recall[i] = self.counts[i][i] as f64 / total as f64;
            }
        }
        recall
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub per_class_recall: [f64; ClassLabel::COUNT],
    pub accuracy: f64,
    pub model_kind: String,
    pub seed: u64,
}

/// Run the model over the test rows and tabulate the outcome.
pub fn evaluate(model: &TrainedModel, test: &FeatureMatrix) -> Result<EvaluationReport> {
    let predictions = model.predict(test)?;
    evaluate_predictions(&test.labels, &predictions, model.classifier.kind(), model.seed)
}

/// Tabulate already-computed predictions.
pub fn evaluate_predictions(
    truths: &[ClassLabel],
    predictions: &[ClassLabel],
    model_kind: &str,
    seed: u64,
) -> Result<EvaluationReport> {
    let confusion = ConfusionMatrix::from_pairs(truths, predictions)?;
    let per_class_recall = confusion.per_class_recall();
    let accuracy = confusion.accuracy();
    Ok(EvaluationReport {
        confusion,
        per_class_recall,
        accuracy,
        model_kind: model_kind.to_string(),
        seed,
    })
}

/// One line of the aggregated summary.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub model_kind: String,
    pub n_reports: usize,
    pub mean_accuracy: f64,
}

/// Unweighted mean accuracy per classifier kind, in first-seen order.
pub fn aggregate(reports: &[EvaluationReport]) -> Vec<AggregateRow> {
    let mut kinds: Vec<String> = Vec::new();
    for r in reports {
        if !kinds.contains(&r.model_kind) {
            kinds.push(r.model_kind.clone());
        }
    }
    kinds.sort();
    kinds
        .into_iter()
        .map(|kind| {
            let accs: Vec<f64> = reports
                .iter()
                .filter(|r| r.model_kind == kind)
                .map(|r| r.accuracy)
                .collect();
            AggregateRow {
                model_kind: kind,
                n_reports: accs.len(),
                mean_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
            }
        })
        .collect()
}

/// Accuracy as a percentage with two decimals, Table-4 style.
pub fn percent(p: f64) -> String {
    format!("{:.2}", 100.0 * p)
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("true\\pred");
        for l in ClassLabel::ALL {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push('\n');
        for (i, row) in self.confusion.counts.iter().enumerate() {
            out.push_str(ClassLabel::ALL[i].as_str());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "accuracy,{:.6},percent,{}\n",
            self.accuracy,
            percent(self.accuracy)
        ));
        for (i, r) in self.per_class_recall.iter().enumerate() {
            out.push_str(&format!("recall_{},{:.6}\n", ClassLabel::ALL[i], r));
        }
        out.push_str(&format!("model,{}\nseed,{}\n", self.model_kind, self.seed));
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "## {} — accuracy {}%\n\n",
            self.model_kind,
            percent(self.accuracy)
        ));
        out.push_str("| true\\pred |");
        for l in ClassLabel::ALL {
            out.push_str(&format!(" {l} |"));
        }
        out.push_str(" recall |\n|---|");
        out.push_str(&"---|".repeat(ClassLabel::COUNT + 1));
        out.push('\n');
        for (i, row) in self.confusion.counts.iter().enumerate() {
            out.push_str(&format!("| {} |", ClassLabel::ALL[i]));
            for c in row {
                out.push_str(&format!(" {c} |"));
            }
            out.push_str(&format!(" {}% |\n", percent(self.per_class_recall[i])));
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Table-4-style grid for aggregated rows.
pub fn render_aggregate_markdown(rows: &[AggregateRow]) -> String {
    let mut out = String::from("| classifier | runs | mean accuracy (%) |\n|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            r.model_kind,
            r.n_reports,
            percent(r.mean_accuracy)
        ));
    }
    out
}
