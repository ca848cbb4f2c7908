//! Linear SVM trained with per-sample subgradient descent on the
//! regularized hinge loss (Pegasos-style step size 1/(lambda*t)).
//!
//! The bias rides along as a weight on an implicit constant-1 feature
//! and shares the regularization shrink: with steps of 1/(lambda*t) an
//! unregularized bias takes an unrecoverable 1/lambda kick on the very
//! first sample.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::windows::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lambda: 1e-4, epochs: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

fn signed(label: Label) -> f64 {
    match label {
        Label::Benign => -1.0,
        Label::Malicious => 1.0,
    }
}

/// Regularized objective: lambda/2 * (|w|^2 + b^2) + mean hinge loss.
pub fn svm_objective(x: &[Vec<f64>], y: &[Label], weights: &[f64], bias: f64, lambda: f64) -> f64 {
    let reg: f64 =
        0.5 * lambda * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, label)| {
            let margin = signed(*label)
                * (row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + bias);
            (1.0 - margin).max(0.0)
        })
        .sum::<f64>()
        / x.len() as f64;
    reg + hinge
}

/// Fit, also reporting the objective of the running-average iterate
/// after each epoch.
pub fn svm_fit_with_trace(
    x: &[Vec<f64>],
    y: &[Label],
    config: &SvmConfig,
) -> Result<(LinearSvmModel, Vec<f64>), ModelError> {
    if x.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let d = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != d) {
        return Err(ModelError::ShapeMismatch { got: bad.len(), want: d });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let mut w_sum = vec![0.0f64; d];
    let mut b_sum = 0.0f64;
    let mut steps = 0u64;
    let mut trace = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            steps += 1;
            let eta = 1.0 / (config.lambda * steps as f64);
            let margin = signed(y[i])
                * (x[i].iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b);
            // w <- (1 - eta*lambda) w (+ eta*y*x when the margin is violated).
            let shrink = 1.0 - eta * config.lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            b *= shrink;
            if margin < 1.0 {
                let scale = eta * signed(y[i]);
                for (v, a) in w.iter_mut().zip(&x[i]) {
                    *v += scale * a;
                }
                b += scale;
            }
            for (s, v) in w_sum.iter_mut().zip(&w) {
                *s += v;
            }
            b_sum += b;
        }
        let w_avg: Vec<f64> = w_sum.iter().map(|s| s / steps as f64).collect();
        let b_avg = b_sum / steps as f64;
        trace.push(svm_objective(x, y, &w_avg, b_avg, config.lambda));
    }

    let weights: Vec<f64> = w_sum.iter().map(|s| s / steps.max(1) as f64).collect();
    let bias = b_sum / steps.max(1) as f64;
    if !bias.is_finite() || weights.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Diverged("svm parameters"));
    }
    Ok((LinearSvmModel { weights, bias, lambda: config.lambda }, trace))
}

pub fn svm_fit(
    x: &[Vec<f64>],
    y: &[Label],
    config: &SvmConfig,
) -> Result<LinearSvmModel, ModelError> {
    svm_fit_with_trace(x, y, config).map(|(model, _)| model)
}

/// Decision rule sign(w.x + b); zero (including the zero model) is benign.
pub fn svm_predict(model: &LinearSvmModel, x: &[f64]) -> Label {
    let score: f64 =
        x.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>() + model.bias;
    if score > 0.0 {
        Label::Malicious
    } else {
        Label::Benign
    }
}
