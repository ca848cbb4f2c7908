//! The five classifiers (Gaussian naive Bayes, decision tree, random
//! forest, linear SVM, LSTM) plus the shared dataset, split, and
//! evaluation machinery.

mod eval;
mod forest;
mod lstm;
mod nb;
mod split;
mod svm;
mod tree;

pub use eval::{evaluate, write_confusion_csv, ConfusionMatrix, EvalReport};
pub use forest::{forest_fit, forest_predict, majority_vote, FeaturesPerSplit, ForestConfig, RandomForestModel};
pub use lstm::{
    lstm_fit, lstm_forward, lstm_loss, lstm_loss_and_grads, LstmConfig, LstmGrads, LstmModel,
};
pub use nb::{nb_fit, nb_predict, GaussianNbModel};
pub use split::{stratified_kfold, stratified_split_indices, train_test_split};
pub use svm::{svm_fit, svm_fit_with_trace, svm_objective, svm_predict, LinearSvmModel, SvmConfig};
pub use tree::{tree_fit, tree_predict, DecisionTreeModel, TreeConfig, TreeNode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{flatten_window, Matrix};
use crate::windows::Label;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("class {0:?} has {1} samples, need at least 2")]
    ClassTooSmall(Label, usize),
    #[error("test fraction {0} outside (0, 1)")]
    BadTestFraction(f64),
    #[error("sample count {x} does not match label count {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("input has {got} features, model expects {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("sequences must share one padded length, found {0} and {1}")]
    RaggedSequences(usize, usize),
    #[error("empty sequence")]
    EmptySequence,
    #[error("training diverged: non-finite {0}")]
    Diverged(&'static str),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Preprocessed windows ready for training: padded, normalized window
/// matrices with aligned labels. Flat models consume the row-major
/// flattening; the LSTM consumes the sequences directly.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub windows: Vec<Matrix>,
    pub labels: Vec<Label>,
}

impl FeatureDataset {
    pub fn new(windows: Vec<Matrix>, labels: Vec<Label>) -> Result<Self, ModelError> {
        if windows.len() != labels.len() {
            return Err(ModelError::LengthMismatch { x: windows.len(), y: labels.len() });
        }
        Ok(Self { windows, labels })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Row-major flattened view for the non-sequence models.
    pub fn flattened(&self) -> Vec<Vec<f64>> {
        self.windows.iter().map(flatten_window).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let malicious = self.labels.iter().filter(|l| **l == Label::Malicious).count();
        (self.labels.len() - malicious, malicious)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            windows: indices.iter().map(|&i| self.windows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Which classifier to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Tree,
    Forest,
    Svm,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Svm, ModelKind::Nb, ModelKind::Tree, ModelKind::Forest, ModelKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Svm => "svm",
            ModelKind::Lstm => "lstm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nb" | "naive_bayes" => Ok(ModelKind::Nb),
            "tree" | "decision_tree" => Ok(ModelKind::Tree),
            "forest" | "random_forest" => Ok(ModelKind::Forest),
            "svm" => Ok(ModelKind::Svm),
            "lstm" | "rnn" => Ok(ModelKind::Lstm),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

/// A trained classifier of any kind, serializable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TrainedModel {
    Nb(GaussianNbModel),
    Tree(DecisionTreeModel),
    Forest(RandomForestModel),
    Svm(LinearSvmModel),
    Lstm(LstmModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Nb(_) => ModelKind::Nb,
            TrainedModel::Tree(_) => ModelKind::Tree,
            TrainedModel::Forest(_) => ModelKind::Forest,
            TrainedModel::Svm(_) => ModelKind::Svm,
            TrainedModel::Lstm(_) => ModelKind::Lstm,
        }
    }

    /// Classify one padded, normalized window.
    pub fn predict_window(&self, window: &Matrix) -> Label {
        match self {
            TrainedModel::Nb(m) => nb_predict(m, &flatten_window(window)),
            TrainedModel::Tree(m) => tree_predict(m, &flatten_window(window)),
            TrainedModel::Forest(m) => forest_predict(m, &flatten_window(window)),
            TrainedModel::Svm(m) => svm_predict(m, &flatten_window(window)),
            TrainedModel::Lstm(m) => {
                match lstm_forward(m, window) {
                    // Ties break benign, matching the flat models.
                    Ok((p, _)) => {
                        if p > 0.5 {
                            Label::Malicious
                        } else {
                            Label::Benign
                        }
                    }
                    Err(_) => Label::Benign,
                }
            }
        }
    }
}

/// Saved model envelope: parameters plus the seed and training config
/// snapshot that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub model: TrainedModel,
    pub seed: u64,
    pub config: serde_json::Value,
}

pub fn save_model(path: &std::path::Path, file: &ModelFile) -> Result<(), ModelError> {
    std::fs::write(path, serde_json::to_string_pretty(file)?)?;
    Ok(())
}

pub fn load_model(path: &std::path::Path) -> Result<ModelFile, ModelError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[cfg(test)]
pub(crate) mod test_data {
    use super::*;

    /// Two well-separated Gaussian-ish blobs as 1x2 windows.
    pub fn blobs(n_per_class: usize, gap: f64, seed: u64) -> FeatureDataset {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut windows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_per_class {
            windows.push(vec![vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]]);
            labels.push(Label::Benign);
            windows.push(vec![vec![
                gap + rng.random_range(-1.0..1.0),
                gap + rng.random_range(-1.0..1.0),
            ]]);
            labels.push(Label::Malicious);
        }
        FeatureDataset::new(windows, labels).unwrap()
    }
}
