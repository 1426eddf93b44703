//! Linear discriminant analysis with a shrinkage-regularized pooled
//! covariance.
//!
//! Discriminant scores are `d_c(x) = x' S^-1 m_c - m_c' S^-1 m_c / 2 + ln p_c`
//! with `S` the pooled within-class covariance plus `shrinkage * (tr S / d)`
//! on the diagonal. Prediction takes the argmax, ties to the lower class
//! index.

use crate::error::{Error, Result};
use crate::mlp::classes_present;
use crate::types::{ClassLabel, FeatureMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub classes: Vec<ClassLabel>,
    pub class_means: Vec<Vec<f64>>,
    /// Regularized pooled within-class covariance (symmetric positive
    /// definite once training succeeds).
    pub pooled_covariance: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    pub shrinkage: f64,
    /// `S^-1 m_c` per class.
    pub coefs: Vec<Vec<f64>>,
    /// `-(m_c' S^-1 m_c)/2 + ln p_c` per class.
    pub intercepts: Vec<f64>,
}

pub const DEFAULT_SHRINKAGE: f64 = 1e-3;

/// Lower-triangular Cholesky factor; None if not positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solve `L L' x = b` for x.
fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[i][k] * y[k];
        }
        y[i] = acc / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= l[k][i] * x[k];
        }
        x[i] = acc / l[i][i];
    }
    x
}

/// Fit class means, priors, and the pooled covariance; `shrinkage` scales the
/// `tr(S)/d` ridge added to the diagonal.
pub fn train_lda(train: &FeatureMatrix, shrinkage: f64) -> Result<LdaModel> {
    let classes = classes_present(train);
    let d = train.n_cols();
    let n = train.n_rows();
    let k = classes.len();
    if k < 1 {
        return Err(Error::Parameter("training set has no labeled rows".into()));
    }

    let mut means = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    let idx_of = |l: ClassLabel| classes.iter().position(|&c| c == l).unwrap();
    for (row, &label) in train.values.iter().zip(&train.labels) {
        let c = idx_of(label);
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (mean, &count) in means.iter_mut().zip(&counts) {
        if count < 2 {
            return Err(Error::Parameter(format!(
                "every class needs at least 2 rows, one has {count}"
            )));
        }
        for m in mean.iter_mut() {
            *m /= count as f64;
        }
    }

    // pooled within-class scatter, normalized by N - K
    let mut cov = vec![vec![0.0; d]; d];
    for (row, &label) in train.values.iter().zip(&train.labels) {
        let mean = &means[idx_of(label)];
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[i][j] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (n - k) as f64;
    for i in 0..d {
        for j in 0..=i {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }

    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let scale = if trace > 0.0 { trace / d as f64 } else { 1.0 };
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] += shrinkage * scale;
    }

    let chol = cholesky(&cov).ok_or_else(|| {
        Error::Invariant(format!(
            "pooled covariance singular after shrinkage {shrinkage}; raise shrinkage"
        ))
    })?;
    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let coefs: Vec<Vec<f64>> = means.iter().map(|m| cholesky_solve(&chol, m)).collect();
    let intercepts: Vec<f64> = means
        .iter()
        .zip(&coefs)
        .zip(&priors)
        .map(|((m, a), p)| {
            -0.5 * m.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() + p.ln()
        })
        .collect();

    Ok(LdaModel {
        classes,
        class_means: means,
        pooled_covariance: cov,
        priors,
        shrinkage,
        coefs,
        intercepts,
    })
}

/// Per-class discriminant scores for one row.
pub fn lda_scores(model: &LdaModel, row: &[f64]) -> Vec<f64> {
    model
        .coefs
        .iter()
        .zip(&model.intercepts)
        .map(|(a, b)| row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() + b)
        .collect()
}

pub fn predict_lda(model: &LdaModel, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
    let d = model.class_means.first().map_or(0, Vec::len);
    if rows.n_cols() != d {
        return Err(Error::Dimension {
            what: "lda input".into(),
            expected: d,
            got: rows.n_cols(),
        });
    }
    Ok(rows
        .values
        .iter()
        .map(|row| {
            let scores = lda_scores(model, row);
            let mut best = 0;
            for (c, s) in scores.iter().enumerate() {
                if *s > scores[best] {
                    best = c;
                }
            }
            model.classes[best]
        })
        .collect())
}
