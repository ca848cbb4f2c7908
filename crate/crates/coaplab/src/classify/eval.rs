//! Confusion-matrix evaluation. Malicious is the positive class.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureDataset, ModelError, TrainedModel};
use crate::windows::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Malicious, Label::Malicious) => self.tp += 1,
            (Label::Benign, Label::Malicious) => self.fp += 1,
            (Label::Malicious, Label::Benign) => self.fn_ += 1,
            (Label::Benign, Label::Benign) => self.tn += 1,
        }
    }
}

/// Per-model evaluation record as written into report files. Accuracy
/// is also carried as a percentage rounded to two decimals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub accuracy_pct: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    pub fn new(model: &str, seed: u64, confusion: ConfusionMatrix) -> Self {
        Self {
            model: model.to_string(),
            seed,
            confusion,
            accuracy: confusion.accuracy(),
            accuracy_pct: (confusion.accuracy() * 10_000.0).round() / 100.0,
            precision: confusion.precision(),
            recall: confusion.recall(),
            f1: confusion.f1(),
        }
    }
}

/// Run a trained model over a test set.
pub fn evaluate(model: &TrainedModel, test: &FeatureDataset) -> Result<ConfusionMatrix, ModelError> {
    if test.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (window, label) in test.windows.iter().zip(&test.labels) {
        cm.record(*label, model.predict_window(window));
    }
    Ok(cm)
}

/// Write the 2x2 matrix as CSV with actual rows and predicted columns.
pub fn write_confusion_csv(path: &Path, cm: &ConfusionMatrix) -> Result<(), ModelError> {
    let text = format!(
        ",pred_benign,pred_malicious\nactual_benign,{},{}\nactual_malicious,{},{}\n",
        cm.tn, cm.fp, cm.fn_, cm.tp
    );
    std::fs::write(path, text)?;
    Ok(())
}
