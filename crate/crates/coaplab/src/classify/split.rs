//! Stratified splitting: train/test partitions and k-fold assignments
//! that preserve class ratios, deterministic under a seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureDataset, ModelError};
use crate::windows::Label;

fn class_indices(labels: &[Label], seed: u64) -> Result<(Vec<usize>, Vec<usize>), ModelError> {
    let mut benign: Vec<usize> = Vec::new();
    let mut malicious: Vec<usize> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Label::Benign => benign.push(i),
            Label::Malicious => malicious.push(i),
        }
    }
    if labels.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if benign.is_empty() || malicious.is_empty() {
        return Err(ModelError::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    benign.shuffle(&mut rng);
    malicious.shuffle(&mut rng);
    Ok((benign, malicious))
}

/// Stratified index split. Each class contributes `round(n * fraction)`
/// test samples, clamped so both sides keep at least one sample per
/// class; classes with fewer than two samples are an error.
pub fn stratified_split_indices(
    labels: &[Label],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), ModelError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ModelError::BadTestFraction(test_fraction));
    }
    let (benign, malicious) = class_indices(labels, seed)?;
    for (label, class) in [(Label::Benign, &benign), (Label::Malicious, &malicious)] {
        if class.len() < 2 {
            return Err(ModelError::ClassTooSmall(label, class.len()));
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [&benign, &malicious] {
        let n_test = ((class.len() as f64 * test_fraction).round() as usize)
            .clamp(1, class.len() - 1);
        test.extend_from_slice(&class[..n_test]);
        train.extend_from_slice(&class[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Split a dataset into stratified train and test subsets.
pub fn train_test_split(
    data: &FeatureDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(FeatureDataset, FeatureDataset), ModelError> {
    let (train_idx, test_idx) = stratified_split_indices(&data.labels, test_fraction, seed)?;
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

/// Stratified k-fold assignments: class indices are shuffled then dealt
/// round-robin, so fold class ratios track the dataset. Returns
/// `(train_indices, test_indices)` per fold.
pub fn stratified_kfold(
    labels: &[Label],
    folds: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>, ModelError> {
    assert!(folds >= 2, "k-fold needs at least two folds");
    let (benign, malicious) = class_indices(labels, seed)?;
    let mut fold_members: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for class in [&benign, &malicious] {
        for (i, idx) in class.iter().enumerate() {
            fold_members[i % folds].push(*idx);
        }
    }
    let mut out = Vec::with_capacity(folds);
    for f in 0..folds {
        let mut test = fold_members[f].clone();
        let mut train: Vec<usize> = fold_members
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, m)| m.iter().copied())
            .collect();
        if test.is_empty() || train.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        test.sort_unstable();
        train.sort_unstable();
        out.push((train, test));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::test_data::blobs;

    fn labels(benign: usize, malicious: usize) -> Vec<Label> {
        let mut v = vec![Label::Benign; benign];
        v.extend(std::iter::repeat_n(Label::Malicious, malicious));
        v
    }

    #[test]
    fn eighty_twenty_preserves_ratios() {
        let labels = labels(70, 30);
        let (train, test) = stratified_split_indices(&labels, 0.2, 1).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        let test_malicious = test.iter().filter(|&&i| labels[i] == Label::Malicious).count();
        assert_eq!(test_malicious, 6);
    }

    #[test]
    fn split_is_deterministic() {
        let labels = labels(40, 20);
        let a = stratified_split_indices(&labels, 0.25, 9).unwrap();
        let b = stratified_split_indices(&labels, 0.25, 9).unwrap();
        assert_eq!(a, b);
        let c = stratified_split_indices(&labels, 0.25, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_partitions_the_input() {
        let data = blobs(25, 6.0, 3);
        let (train, test) = train_test_split(&data, 0.2, 4).unwrap();
        assert_eq!(train.len() + test.len(), data.len());
        // Index split is a partition of 0..n.
        let (ti, si) = stratified_split_indices(&data.labels, 0.2, 4).unwrap();
        let mut all: Vec<usize> = ti.into_iter().chain(si).collect();
        all.sort_unstable();
        assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
    }

    #[test]
    fn tiny_class_is_rejected() {
        let labels = labels(10, 1);
        assert!(matches!(
            stratified_split_indices(&labels, 0.2, 0),
            Err(ModelError::ClassTooSmall(Label::Malicious, 1))
        ));
    }

    #[test]
    fn bad_fraction_is_rejected() {
        let labels = labels(5, 5);
        assert!(matches!(
            stratified_split_indices(&labels, 0.0, 0),
            Err(ModelError::BadTestFraction(_))
        ));
        assert!(matches!(
            stratified_split_indices(&labels, 1.0, 0),
            Err(ModelError::BadTestFraction(_))
        ));
    }

    #[test]
    fn kfold_partitions_and_stratifies() {
        let labels = labels(30, 15);
        let folds = stratified_kfold(&labels, 3, 7).unwrap();
        assert_eq!(folds.len(), 3);
        let mut seen = Vec::new();
        for (train, test) in &folds {
            assert_eq!(train.len() + test.len(), labels.len());
            seen.extend_from_slice(test);
            let m = test.iter().filter(|&&i| labels[i] == Label::Malicious).count();
            assert_eq!(m, 5);
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());
    }
}
