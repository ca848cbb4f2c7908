//! CART decision tree: greedy binary splits minimizing weighted Gini
//! impurity. Split candidates are midpoints between consecutive sorted
//! unique feature values; ties break toward the lower feature index,
//! then the lower threshold. Samples with value <= threshold go left.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::windows::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: 12, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: Label,
        /// Fraction of fit-time samples at this leaf carrying `label`.
        probability: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub root: TreeNode,
    pub config: TreeConfig,
    pub n_features: usize,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

fn class_counts(y: &[Label], indices: &[usize]) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for &i in indices {
        counts[y[i].as_bit() as usize] += 1;
    }
    counts
}

fn leaf(counts: [usize; 2]) -> TreeNode {
    let total = (counts[0] + counts[1]).max(1);
    // Majority label; ties break benign.
    let label = if counts[1] > counts[0] { Label::Malicious } else { Label::Benign };
    TreeNode::Leaf {
        label,
        probability: counts[label.as_bit() as usize] as f64 / total as f64,
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    weighted_gini: f64,
}

/// Scan one feature for its best midpoint split. Candidate order is
/// ascending threshold, and only strict improvements are accepted, so
/// the first optimum encountered wins ties.
fn best_split_for_feature(
    x: &[Vec<f64>],
    y: &[Label],
    indices: &[usize],
    feature: usize,
) -> Option<(f64, f64)> {
    let mut values: Vec<(f64, Label)> = indices.iter().map(|&i| (x[i][feature], y[i])).collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = class_counts(y, indices);
    let n = indices.len() as f64;

    let mut left = [0usize; 2];
    let mut best: Option<(f64, f64)> = None;
    for i in 0..values.len() - 1 {
        left[values[i].1.as_bit() as usize] += 1;
        // A threshold exists only between distinct adjacent values.
        if values[i].0 == values[i + 1].0 {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let n_left = (left[0] + left[1]) as f64;
        let weighted =
            (n_left * gini(left) + (n - n_left) * gini(right)) / n;
        let threshold = values[i].0 + (values[i + 1].0 - values[i].0) / 2.0;
        if best.is_none_or(|(g, _)| weighted < g) {
            best = Some((weighted, threshold));
        }
    }
    best
}

fn grow(
    x: &[Vec<f64>],
    y: &[Label],
    indices: &[usize],
    depth: usize,
    config: &TreeConfig,
    feature_pool: usize,
    features_per_split: Option<usize>,
    rng: &mut Option<ChaCha8Rng>,
) -> TreeNode {
    let counts = class_counts(y, indices);
    let node_gini = gini(counts);
    if depth >= config.max_depth
        || indices.len() < config.min_samples_split
        || node_gini == 0.0
    {
        return leaf(counts);
    }

    let candidate_features: Vec<usize> = match (features_per_split, rng.as_mut()) {
        (Some(k), Some(rng)) if k < feature_pool => {
            let mut picked: Vec<usize> = sample(rng, feature_pool, k).into_iter().collect();
            picked.sort_unstable();
            picked
        }
        _ => (0..feature_pool).collect(),
    };

    let mut best: Option<BestSplit> = None;
    for feature in candidate_features {
        if let Some((weighted_gini, threshold)) = best_split_for_feature(x, y, indices, feature) {
            let better = match &best {
                None => true,
                Some(b) => weighted_gini < b.weighted_gini,
            };
            if better {
                best = Some(BestSplit { feature, threshold, weighted_gini });
            }
        }
    }

    // Split on the best candidate even at zero gain (both sides are
    // strictly smaller, so recursion terminates); a leaf forms only
    // when every candidate feature is constant.
    let Some(split) = best else {
        return leaf(counts);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        indices.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(x, y, &left_idx, depth + 1, config, feature_pool, features_per_split, rng)),
        right: Box::new(grow(x, y, &right_idx, depth + 1, config, feature_pool, features_per_split, rng)),
    }
}

pub fn tree_fit(
    x: &[Vec<f64>],
    y: &[Label],
    config: &TreeConfig,
) -> Result<DecisionTreeModel, ModelError> {
    if x.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch { x: x.len(), y: y.len() });
    }
    let n_features = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != n_features) {
        return Err(ModelError::ShapeMismatch { got: bad.len(), want: n_features });
    }
    let indices: Vec<usize> = (0..x.len()).collect();
    let mut rng = None;
    let root = grow(x, y, &indices, 0, config, n_features, None, &mut rng);
    Ok(DecisionTreeModel { root, config: *config, n_features })
}

/// Forest building block: fit on a row subset with per-split feature
/// subsampling driven by a seeded stream.
pub(crate) fn fit_sampled(
    x: &[Vec<f64>],
    y: &[Label],
    indices: &[usize],
    config: &TreeConfig,
    features_per_split: Option<usize>,
    seed: u64,
) -> Result<DecisionTreeModel, ModelError> {
    if x.is_empty() || indices.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let n_features = x[0].len();
    let mut rng = Some(ChaCha8Rng::seed_from_u64(seed));
    let root = grow(x, y, indices, 0, config, n_features, features_per_split, &mut rng);
    Ok(DecisionTreeModel { root, config: *config, n_features })
}

pub fn tree_predict(model: &DecisionTreeModel, x: &[f64]) -> Label {
    let mut node = &model.root;
    loop {
        match node {
            TreeNode::Leaf { label, .. } => return *label,
            TreeNode::Split { feature, threshold, left, right } => {
                node = if x[*feature] <= *threshold { left } else { right };
            }
        }
    }
}
