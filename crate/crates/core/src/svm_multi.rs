//! One-vs-one multiclass SVM with majority voting.
//!
//! One binary machine is trained per unordered class pair (28 machines for
//! the eight movement classes). Prediction counts votes; vote ties fall back
//! to the summed signed decision values, then to the lower class index.

use crate::error::{Error, Result};
use crate::mlp::classes_present;
use crate::svm::{train_svm_dual, Kernel, SvmParams};
use crate::types::{ClassLabel, FeatureMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Self-contained binary decision function (support vectors copied in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryMachine {
    pub support_x: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
}

impl SvmBinaryMachine {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_x
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmMulticlassModel {
    pub classes: Vec<ClassLabel>,
    /// `(a, b, machine)` per unordered pair with `a < b`; a positive decision
    /// votes for `a`.
    pub machines: Vec<(ClassLabel, ClassLabel, SvmBinaryMachine)>,
    pub c: f64,
    pub kernel: Kernel,
}

/// Train one machine per class pair. Machines train concurrently; the model
/// layout is fixed by the pair order, so results are schedule-independent.
pub fn train_svm_multiclass(
    train: &FeatureMatrix,
    c: f64,
    kernel: Kernel,
    tol: f64,
    seed: u64,
) -> Result<SvmMulticlassModel> {
    let classes = classes_present(train);
    if classes.len() < 2 {
        return Err(Error::Parameter("multiclass training needs at least two classes".into()));
    }
    let mut pairs = Vec::new();
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            pairs.push((a, b));
        }
    }
    let machines: Vec<(ClassLabel, ClassLabel, SvmBinaryMachine)> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_idx, &(a, b))| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (row, &label) in train.values.iter().zip(&train.labels) {
                if label == a {
                    x.push(row.clone());
                    y.push(1.0);
                } else if label == b {
                    x.push(row.clone());
                    y.push(-1.0);
                }
            }
            let params = SvmParams {
                c,
                kernel,
                tol,
                max_steps: 100_000,
                seed: seed.wrapping_add(pair_idx as u64),
            };
            let sol = train_svm_dual(&x, &y, &params)?;
            let machine = SvmBinaryMachine {
                support_x: sol.support_indices.iter().map(|&i| x[i].clone()).collect(),
                coef: sol
                    .support_indices
                    .iter()
                    .map(|&i| sol.alphas[i] * y[i])
                    .collect(),
                bias: sol.bias,
                kernel,
            };
            Ok((a, b, machine))
        })
        .collect::<Result<_>>()?;
    Ok(SvmMulticlassModel { classes, machines, c, kernel })
}

/// Majority vote across the pairwise machines.
pub fn predict_svm(model: &SvmMulticlassModel, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
    let d = model
        .machines
        .first()
        .and_then(|(_, _, m)| m.support_x.first())
        .map_or(0, Vec::len);
    if d > 0 && rows.n_cols() != d {
        return Err(Error::Dimension {
            what: "svm input".into(),
            expected: d,
            got: rows.n_cols(),
        });
    }
    Ok(rows.values.iter().map(|row| predict_one(model, row)).collect())
}

fn predict_one(model: &SvmMulticlassModel, row: &[f64]) -> ClassLabel {
    let mut votes = [0usize; ClassLabel::COUNT];
    let mut signed_sum = [0.0f64; ClassLabel::COUNT];
    for (a, b, machine) in &model.machines {
        let d = machine.decision(row);
        if d >= 0.0 {
            votes[a.index()] += 1;
        } else {
            votes[b.index()] += 1;
        }
        signed_sum[a.index()] += d;
        signed_sum[b.index()] -= d;
    }
    let mut best = model.classes[0];
    for &cl in &model.classes[1..] {
        let (i, j) = (cl.index(), best.index());
        let better = votes[i] > votes[j]
            || (votes[i] == votes[j] && signed_sum[i] > signed_sum[j]);
        if better {
            best = cl;
        }
    }
    best
}
