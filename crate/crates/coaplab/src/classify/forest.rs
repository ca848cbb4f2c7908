//! Random forest: bootstrap-resampled trees with per-split feature
//! subsampling, majority vote with ties breaking benign.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_sampled, tree_predict, DecisionTreeModel, TreeConfig};
use super::ModelError;
use crate::seed::derive_seed;
use crate::windows::Label;

/// How many features each split may consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    /// Square root of the feature count, the usual forest default.
    Sqrt,
    /// Every feature (degenerates to plain bagging).
    All,
    Count(usize),
}

impl FeaturesPerSplit {
    fn resolve(self, n_features: usize) -> Option<usize> {
        match self {
            FeaturesPerSplit::Sqrt => {
                Some(((n_features as f64).sqrt().floor() as usize).max(1))
            }
            FeaturesPerSplit::All => None,
            FeaturesPerSplit::Count(k) => Some(k.clamp(1, n_features)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            tree: TreeConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTreeModel>,
    pub config: ForestConfig,
}

pub fn forest_fit(
    x: &[Vec<f64>],
    y: &[Label],
    config: &ForestConfig,
) -> Result<RandomForestModel, ModelError> {
    if config.n_trees == 0 {
        return Err(ModelError::EmptyDataset);
    }
    if x.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let features_per_split = config.features_per_split.resolve(x[0].len());
    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let tree_seed = derive_seed(config.seed, &format!("forest-tree/{t}"));
        let indices: Vec<usize> = if config.bootstrap {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(tree_seed, "bootstrap"));
            (0..x.len()).map(|_| rng.random_range(0..x.len())).collect()
        } else {
            (0..x.len()).collect()
        };
        trees.push(fit_sampled(x, y, &indices, &config.tree, features_per_split, tree_seed)?);
    }
    Ok(RandomForestModel { trees, config: *config })
}

/// Majority vote; an exact tie is benign.
pub fn majority_vote(votes: &[Label]) -> Label {
    let malicious = votes.iter().filter(|v| **v == Label::Malicious).count();
    if malicious * 2 > votes.len() {
        Label::Malicious
    } else {
        Label::Benign
    }
}

pub fn forest_predict(model: &RandomForestModel, x: &[f64]) -> Label {
    let votes: Vec<Label> = model.trees.iter().map(|t| tree_predict(t, x)).collect();
    majority_vote(&votes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::test_data::blobs;
    use crate::classify::tree_fit;

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let data = blobs(20, 6.0, 13);
        let flat = data.flattened();
        let config = ForestConfig {
            n_trees: 1,
            features_per_split: FeaturesPerSplit::All,
            bootstrap: false,
            ..Default::default()
        };
        let forest = forest_fit(&flat, &data.labels, &config).unwrap();
        let tree = tree_fit(&flat, &data.labels, &config.tree).unwrap();
        assert_eq!(forest.trees[0], tree);
        for row in &flat {
            assert_eq!(forest_predict(&forest, row), tree_predict(&tree, row));
        }
    }

    #[test]
    fn vote_majority_and_tie_rules() {
        use Label::{Benign as B, Malicious as M};
        assert_eq!(majority_vote(&[M, M, M, B, B]), M);
        assert_eq!(majority_vote(&[M, M, B, B]), B);
        assert_eq!(majority_vote(&[B]), B);
        assert_eq!(majority_vote(&[M]), M);
    }

    #[test]
    fn refit_with_same_seed_is_identical() {
        let data = blobs(15, 5.0, 17);
        let flat = data.flattened();
        let config = ForestConfig { n_trees: 7, seed: 99, ..Default::default() };
        let a = forest_fit(&flat, &data.labels, &config).unwrap();
        let b = forest_fit(&flat, &data.labels, &config).unwrap();
        assert_eq!(a, b);
        for row in &flat {
            assert_eq!(forest_predict(&a, row), forest_predict(&b, row));
        }
    }

    #[test]
    fn forest_separates_blobs() {
        let data = blobs(25, 8.0, 23);
        let flat = data.flattened();
        let config = ForestConfig { n_trees: 15, seed: 3, ..Default::default() };
        let forest = forest_fit(&flat, &data.labels, &config).unwrap();
        let correct = flat
            .iter()
            .zip(&data.labels)
            .filter(|(row, label)| forest_predict(&forest, row) == **label)
            .count();
        assert_eq!(correct, flat.len());
    }
}
