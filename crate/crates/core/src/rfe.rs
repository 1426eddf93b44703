//! SVM-driven recursive feature elimination.
//!
//! Each round trains one linear soft-margin machine per unordered class pair
//! on the surviving features, scores every feature by the change in the
//! squared margin-weight norm if that feature were removed (for the linear
//! kernel this is exactly `w_p^2`), sums the scores across the pairwise
//! machines, and eliminates the lowest-scoring features until the requested
//! subset size survives.

use crate::error::{Error, Result};
use crate::svm::{train_svm_dual, Kernel, SvmParams};
use crate::types::{ClassLabel, FeatureMatrix};
use rayon::prelude::*;

/// Outcome of a ranking run.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeatures {
    /// Every original feature index exactly once, first eliminated first;
    /// the surviving features follow in ascending final-round score, so the
    /// last entry is the most important feature.
    pub elimination_order: Vec<usize>,
    /// Criterion score of each feature at the round it left (or, for
    /// survivors, in the final round); aligned with `elimination_order`.
    pub criterion_scores: Vec<f64>,
    /// The top-k surviving indices, ascending.
    pub selected: Vec<usize>,
}

impl RankedFeatures {
    /// (feature index, criterion score) from most to least important.
    pub fn by_rank(&self) -> Vec<(usize, f64)> {
        self.elimination_order
            .iter()
            .copied()
            .zip(self.criterion_scores.iter().copied())
            .rev()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfeParams {
    pub c: f64,
    pub tol: f64,
    pub step: usize,
    pub seed: u64,
}

impl Default for RfeParams {
    fn default() -> Self {
        RfeParams { c: 1.0, tol: 1e-6, step: 1, seed: 0 }
    }
}

/// Rows and +/-1 labels for one class pair.
struct PairProblem {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

fn pair_problems(m: &FeatureMatrix) -> Vec<PairProblem> {
    let present: Vec<ClassLabel> = ClassLabel::ALL
        .into_iter()
        .filter(|l| m.labels.contains(l))
        .collect();
    let mut pairs = Vec::new();
    for (i, &a) in present.iter().enumerate() {
        for &b in &present[i + 1..] {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (row, &label) in m.values.iter().zip(&m.labels) {
                if label == a {
                    x.push(row.clone());
                    y.push(1.0);
                } else if label == b {
                    x.push(row.clone());
                    y.push(-1.0);
                }
            }
            pairs.push(PairProblem { x, y });
        }
    }
    pairs
}

fn restrict(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| cols.iter().map(|&c| r[c]).collect())
        .collect()
}

/// Summed per-feature criterion over all pairwise machines, on the given
/// surviving columns. Machines train concurrently; the reduction is a plain
/// elementwise sum, so the result is schedule-independent.
fn criterion_scores(
    pairs: &[PairProblem],
    surviving: &[usize],
    params: &RfeParams,
) -> Result<Vec<f64>> {
    let per_machine: Vec<Vec<f64>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_idx, pair)| {
            let x = restrict(&pair.x, surviving);
            let svm_params = SvmParams {
                c: params.c,
                kernel: Kernel::Linear,
                tol: params.tol,
                max_steps: 100_000,
                seed: params.seed.wrapping_add(pair_idx as u64),
            };
            let sol = train_svm_dual(&x, &pair.y, &svm_params)?;
            let w = sol.linear_weights(&x, &pair.y);
            Ok(w.into_iter().map(|v| v * v).collect())
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![0.0; surviving.len()];
    for machine in &per_machine {
        for (t, v) in totals.iter_mut().zip(machine) {
            *t += v;
        }
    }
    Ok(totals)
}

/// Rank features by recursive elimination down to `k_target` survivors.
pub fn rfe_rank(m: &FeatureMatrix, k_target: usize, params: &RfeParams) -> Result<RankedFeatures> {
    let d = m.n_cols();
    if k_target == 0 || k_target >= d {
        return Err(Error::Parameter(format!(
            "k_target must satisfy 0 < k < {d}, got {k_target}"
        )));
    }
    if params.step == 0 {
        return Err(Error::Parameter("elimination step must be >= 1".into()));
    }
    let pairs = pair_problems(m);
    if pairs.is_empty() {
        return Err(Error::Parameter("ranking needs at least two classes".into()));
    }

    let mut surviving: Vec<usize> = (0..d).collect();
    let mut elimination_order = Vec::with_capacity(d);
    let mut out_scores = Vec::with_capacity(d);
    while surviving.len() > k_target {
        let scores = criterion_scores(&pairs, &surviving, params)?;
        let mut order: Vec<usize> = (0..surviving.len()).collect();
        // lowest score first; ties broken toward the lower feature index
        order.sort_by(|&a, &b| {
            scores[a]
                .partial_cmp(&scores[b])
                .unwrap()
                .then(surviving[a].cmp(&surviving[b]))
        });
        let n_elim = params.step.min(surviving.len() - k_target);
        let mut drop: Vec<usize> = order[..n_elim].to_vec();
        drop.sort_unstable();
        for &local in drop.iter().rev() {
            elimination_order.push(surviving[local]);
            out_scores.push(scores[local]);
            surviving.remove(local);
        }
        // removal above walked high-to-low; restore lowest-score-first order
        let tail = elimination_order.len() - n_elim;
        elimination_order[tail..].reverse();
        out_scores[tail..].reverse();
    }

    // Final pass scores the survivors; weakest first so the last entry is
    // the top-ranked feature.
    let final_scores = criterion_scores(&pairs, &surviving, params)?;
    let mut order: Vec<usize> = (0..surviving.len()).collect();
    order.sort_by(|&a, &b| {
        final_scores[a]
            .partial_cmp(&final_scores[b])
            .unwrap()
            .then(surviving[a].cmp(&surviving[b]))
    });
    for &local in &order {
        elimination_order.push(surviving[local]);
        out_scores.push(final_scores[local]);
    }
    let mut selected = surviving.clone();
    selected.sort_unstable();
    Ok(RankedFeatures { elimination_order, criterion_scores: out_scores, selected })
}

/// Column subset preserving names and labels.
pub fn select_columns(m: &FeatureMatrix, selected: &[usize]) -> Result<FeatureMatrix> {
    if selected.is_empty() {
        return Err(Error::Parameter("selection must be non-empty".into()));
    }
    for &c in selected {
        if c >= m.n_cols() {
            return Err(Error::Bounds(format!(
                "feature index {c} out of range ({} columns)",
                m.n_cols()
            )));
        }
    }
    FeatureMatrix::new(
        selected.iter().map(|&c| m.feature_names[c].clone()).collect(),
        m.values
            .iter()
            .map(|row| selected.iter().map(|&c| row[c]).collect())
            .collect(),
        m.labels.clone(),
    )
}
