//! Gaussian naive Bayes with variance smoothing.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::windows::Label;

/// Per-class priors and per-feature Gaussian moments. Variances are
/// floored by `eps` (1e-9 times the largest overall feature variance),
/// so constant features never divide by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
    pub eps: f64,
}

pub fn nb_fit(x: &[Vec<f64>], y: &[Label]) -> Result<GaussianNbModel, ModelError> {
    if x.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let d = x[0].len();
    let mut counts = [0usize; 2];
    let mut sums = [vec![0.0f64; d], vec![0.0f64; d]];
    for (row, label) in x.iter().zip(y) {
        if row.len() != d {
            return Err(ModelError::ShapeMismatch { got: row.len(), want: d });
        }
        let c = label.as_bit() as usize;
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(ModelError::SingleClass);
    }

    let mean = [
        sums[0].iter().map(|s| s / counts[0] as f64).collect::<Vec<_>>(),
        sums[1].iter().map(|s| s / counts[1] as f64).collect::<Vec<_>>(),
    ];
    let mut var = [vec![0.0f64; d], vec![0.0f64; d]];
    for (row, label) in x.iter().zip(y) {
        let c = label.as_bit() as usize;
        for ((v, m), out) in row.iter().zip(&mean[c]).zip(var[c].iter_mut()) {
            *out += (v - m) * (v - m);
        }
    }
    for c in 0..2 {
        for v in var[c].iter_mut() {
            *v /= counts[c] as f64;
        }
    }

    // Smoothing scale from the pooled per-feature variances.
    let n = x.len() as f64;
    let mut max_overall_var: f64 = 0.0;
    for j in 0..d {
        let overall_mean: f64 = x.iter().map(|r| r[j]).sum::<f64>() / n;
        let overall_var: f64 =
            x.iter().map(|r| (r[j] - overall_mean).powi(2)).sum::<f64>() / n;
        max_overall_var = max_overall_var.max(overall_var);
    }
    let eps = (1e-9 * max_overall_var).max(1e-12);
    for c in 0..2 {
        for v in var[c].iter_mut() {
            *v += eps;
        }
    }

    Ok(GaussianNbModel {
        prior: [counts[0] as f64 / n, counts[1] as f64 / n],
        mean,
        var,
        eps,
    })
}

fn log_likelihood(model: &GaussianNbModel, class: usize, x: &[f64]) -> f64 {
    let mut ll = model.prior[class].ln();
    for ((v, m), var) in x.iter().zip(&model.mean[class]).zip(&model.var[class]) {
        ll += -0.5 * ((v - m) * (v - m) / var + var.ln() + std::f64::consts::TAU.ln());
    }
    ll
}

/// Argmax of the class log-posteriors; exact ties break benign.
pub fn nb_predict(model: &GaussianNbModel, x: &[f64]) -> Label {
    let benign = log_likelihood(model, 0, x);
    let malicious = log_likelihood(model, 1, x);
    if malicious > benign {
        Label::Malicious
    } else {
        Label::Benign
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn separated_means_classify_by_distance() {
        // Class means 0 and 10 with near-unit spread and equal priors.
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let jitter = (i as f64 - 4.5) / 4.5; // symmetric, mean zero
            x.push(vec![jitter]);
            y.push(Label::Benign);
            x.push(vec![10.0 + jitter]);
            y.push(Label::Malicious);
        }
        let model = nb_fit(&x, &y).unwrap();
        assert_eq!(nb_predict(&model, &[0.1]), Label::Benign);
        assert_eq!(nb_predict(&model, &[9.9]), Label::Malicious);
    }

    #[test]
    fn exact_midpoint_breaks_benign() {
        // Perfectly symmetric classes around 5: the midpoint posterior
        // is a tie, which must resolve benign.
        let x = vec![vec![0.0], vec![1.0], vec![9.0], vec![10.0]];
        let y = vec![Label::Benign, Label::Benign, Label::Malicious, Label::Malicious];
        let model = nb_fit(&x, &y).unwrap();
        assert_eq!(nb_predict(&model, &[5.0]), Label::Benign);
    }

    #[test]
    fn zero_variance_features_are_smoothed_not_fatal() {
        let x = vec![vec![1.0, 3.0], vec![1.0, 4.0], vec![1.0, 30.0], vec![1.0, 31.0]];
        let y = vec![Label::Benign, Label::Benign, Label::Malicious, Label::Malicious];
        let model = nb_fit(&x, &y).unwrap();
        assert!(model.var.iter().all(|per_class| per_class.iter().all(|v| *v > 0.0)));
        assert_eq!(nb_predict(&model, &[1.0, 3.5]), Label::Benign);
        assert_eq!(nb_predict(&model, &[1.0, 30.5]), Label::Malicious);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![Label::Benign, Label::Benign];
        assert!(matches!(nb_fit(&x, &y), Err(ModelError::SingleClass)));
    }

    #[test]
    fn predictions_match_bruteforce_posteriors() {
        // Independent oracle: recompute moments and densities from
        // scratch and compare decisions on every sample.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let malicious = i % 2 == 1;
            let base = if malicious { 4.0 } else { 0.0 };
            x.push(vec![
                base + rng.random_range(-1.0..1.0),
                base * 0.5 + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            y.push(if malicious { Label::Malicious } else { Label::Benign });
        }
        let model = nb_fit(&x, &y).unwrap();

        let mean_var = |class: Label, j: usize| {
            let rows: Vec<&Vec<f64>> = x
                .iter()
                .zip(&y)
                .filter(|(_, l)| **l == class)
                .map(|(r, _)| r)
                .collect();
            let m: f64 = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
            let v: f64 =
                rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / rows.len() as f64;
            (m, v + model.eps)
        };
        for sample in &x {
            let mut scores = [0.5f64.ln(), 0.5f64.ln()];
            for (c, label) in [Label::Benign, Label::Malicious].iter().enumerate() {
                for j in 0..sample.len() {
                    let (m, v) = mean_var(*label, j);
                    let density = (-((sample[j] - m).powi(2)) / (2.0 * v)).exp()
                        / (std::f64::consts::TAU * v).sqrt();
                    scores[c] += density.ln();
                }
            }
            let expected =
                if scores[1] > scores[0] { Label::Malicious } else { Label::Benign };
            assert_eq!(nb_predict(&model, sample), expected);
        }
    }
}
