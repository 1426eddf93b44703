//! Single-hidden-layer perceptron trained by backpropagation.
//!
//! tanh hidden activation, softmax output, mean cross-entropy loss,
//! mini-batch gradient descent with momentum. Training is single-threaded
//! and fully determined by (data, config, seed).

use crate::error::{Error, Result};
use crate::types::{ClassLabel, FeatureMatrix};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 500,
            batch_size: 16,
            seed: 0,
        }
    }
}

/// Trained network. Weight layout: `w1[h][i]` input->hidden, `w2[o][h]`
/// hidden->output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Output unit `k` scores `classes[k]`.
    pub classes: Vec<ClassLabel>,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    /// Mean cross-entropy per epoch, in training order.
    pub loss_trace: Vec<f64>,
    pub config: MlpConfig,
}

/// Gradients with the same layout as the model parameters.
pub struct MlpGradients {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|v| v / sum).collect()
}

impl MlpModel {
    /// Symmetric-uniform init scaled by 1/sqrt(fan_in); biases start at zero.
    pub fn init(input: usize, hidden: usize, classes: Vec<ClassLabel>, cfg: MlpConfig) -> MlpModel {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let out = classes.len();
        let lim1 = 1.0 / (input as f64).sqrt();
        let lim2 = 1.0 / (hidden as f64).sqrt();
        let w1 = (0..hidden)
            .map(|_| (0..input).map(|_| rng.gen_range(-lim1..lim1)).collect())
            .collect();
        let w2 = (0..out)
            .map(|_| (0..hidden).map(|_| rng.gen_range(-lim2..lim2)).collect())
            .collect();
        MlpModel {
            classes,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; out],
            loss_trace: Vec::new(),
            config: cfg,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.w1.first().map_or(0, Vec::len)
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| {
                (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).tanh()
            })
            .collect()
    }

    /// Class probabilities for one row.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let h = self.hidden_activations(x);
        let logits: Vec<f64> = self
            .w2
            .iter()
            .zip(&self.b2)
            .map(|(row, b)| row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        softmax(&logits)
    }

    /// Mean cross-entropy of the target indices under the current parameters.
    pub fn mean_loss(&self, x: &[Vec<f64>], targets: &[usize]) -> f64 {
        let mut total = 0.0;
        for (row, &t) in x.iter().zip(targets) {
            let p = self.probabilities(row);
            total -= p[t].max(1e-300).ln();
        }
        total / x.len() as f64
    }

    /// Analytic gradients of `mean_loss` over a batch.
    pub fn batch_gradients(&self, x: &[Vec<f64>], targets: &[usize]) -> MlpGradients {
        let n_in = self.n_inputs();
        let n_hid = self.b1.len();
        let n_out = self.b2.len();
        let inv = 1.0 / x.len() as f64;
        let mut g = MlpGradients {
            w1: vec![vec![0.0; n_in]; n_hid],
            b1: vec![0.0; n_hid],
            w2: vec![vec![0.0; n_hid]; n_out],
            b2: vec![0.0; n_out],
        };
        for (row, &t) in x.iter().zip(targets) {
            let h = self.hidden_activations(row);
            let logits: Vec<f64> = self
                .w2
                .iter()
                .zip(&self.b2)
                .map(|(wr, b)| wr.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + b)
                .collect();
            let mut delta_out = softmax(&logits);
            delta_out[t] -= 1.0;
            for v in delta_out.iter_mut() {
                *v *= inv;
            }
            for (o, d) in delta_out.iter().enumerate() {
                for (k, hv) in h.iter().enumerate() {
                    g.w2[o][k] += d * hv;
                }
                g.b2[o] += d;
            }
            for (k, hv) in h.iter().enumerate() {
                let upstream: f64 = delta_out
                    .iter()
                    .enumerate()
                    .map(|(o, d)| d * self.w2[o][k])
                    .sum();
                let d_pre = upstream * (1.0 - hv * hv);
                for (i, xv) in row.iter().enumerate() {
                    g.w1[k][i] += d_pre * xv;
                }
                g.b1[k] += d_pre;
            }
        }
        g
    }

    fn assert_finite(&self) -> Result<()> {
        let finite = self
            .w1
            .iter()
            .flatten()
            .chain(self.w2.iter().flatten())
            .chain(&self.b1)
            .chain(&self.b2)
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Divergence("network parameters became non-finite".into()))
        }
    }
}

/// Distinct labels present, in A1..A8 order.
pub fn classes_present(m: &FeatureMatrix) -> Vec<ClassLabel> {
    ClassLabel::ALL
        .into_iter()
        .filter(|l| m.labels.contains(l))
        .collect()
}

/// Train by seeded mini-batch gradient descent with momentum.
pub fn train_mlp(train: &FeatureMatrix, cfg: &MlpConfig) -> Result<MlpModel> {
    let classes = classes_present(train);
    if classes.is_empty() {
        return Err(Error::Parameter("training set has no labeled rows".into()));
    }
    if cfg.batch_size == 0 || cfg.hidden == 0 {
        return Err(Error::Parameter("hidden size and batch size must be >= 1".into()));
    }
    let class_index = |l: ClassLabel| classes.iter().position(|&c| c == l).unwrap();
    let targets: Vec<usize> = train.labels.iter().map(|&l| class_index(l)).collect();

    let mut model = MlpModel::init(train.n_cols(), cfg.hidden, classes, *cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let n = train.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut vel = MlpGradients {
        w1: vec![vec![0.0; train.n_cols()]; cfg.hidden],
        b1: vec![0.0; cfg.hidden],
        w2: vec![vec![0.0; cfg.hidden]; model.b2.len()],
        b2: vec![0.0; model.b2.len()],
    };

    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x: Vec<Vec<f64>> = chunk.iter().map(|&r| train.values[r].clone()).collect();
            let t: Vec<usize> = chunk.iter().map(|&r| targets[r]).collect();
            epoch_loss += model.mean_loss(&x, &t);
            batches += 1.0;
            let g = model.batch_gradients(&x, &t);
            let lr = cfg.learning_rate;
            let mu = cfg.momentum;
            for (vr, gr) in vel.w1.iter_mut().zip(&g.w1) {
                for (v, gv) in vr.iter_mut().zip(gr) {
                    *v = mu * *v - lr * gv;
                }
            }
            for (v, gv) in vel.b1.iter_mut().zip(&g.b1) {
                *v = mu * *v - lr * gv;
            }
            for (vr, gr) in vel.w2.iter_mut().zip(&g.w2) {
                for (v, gv) in vr.iter_mut().zip(gr) {
                    *v = mu * *v - lr * gv;
                }
            }
            for (v, gv) in vel.b2.iter_mut().zip(&g.b2) {
                *v = mu * *v - lr * gv;
            }
            for (wr, vr) in model.w1.iter_mut().zip(&vel.w1) {
                for (w, v) in wr.iter_mut().zip(vr) {
                    *w += v;
                }
            }
            for (b, v) in model.b1.iter_mut().zip(&vel.b1) {
                *b += v;
            }
            for (wr, vr) in model.w2.iter_mut().zip(&vel.w2) {
                for (w, v) in wr.iter_mut().zip(vr) {
                    *w += v;
                }
            }
            for (b, v) in model.b2.iter_mut().zip(&vel.b2) {
                *b += v;
            }
        }
        let mean_epoch_loss = epoch_loss / batches;
        if !mean_epoch_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss became {mean_epoch_loss} at epoch {_epoch}"
            )));
        }
        model.assert_finite()?;
        model.loss_trace.push(mean_epoch_loss);
    }
    Ok(model)
}

/// Argmax class (ties to the lower class index) and per-row probabilities.
pub fn predict_mlp(model: &MlpModel, rows: &FeatureMatrix) -> Result<(Vec<ClassLabel>, Vec<Vec<f64>>)> {
    if rows.n_cols() != model.n_inputs() {
        return Err(Error::Dimension {
            what: "mlp input".into(),
            expected: model.n_inputs(),
            got: rows.n_cols(),
        });
    }
    let mut labels = Vec::with_capacity(rows.n_rows());
    let mut probs = Vec::with_capacity(rows.n_rows());
    for row in &rows.values {
        let p = model.probabilities(row);
        let mut best = 0;
        for (k, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = k;
            }
        }
        labels.push(model.classes[best]);
        probs.push(p);
    }
    Ok((labels, probs))
}
