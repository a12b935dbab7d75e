use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertain::Dataset;

use super::{build_tree, classify, predict_label, route_masses, DtudTree, TreeConfig};

/// Training mass landing in leaves whose dominant label matches the tuple's
/// label, over the number of training tuples.
pub fn training_accuracy(tree: &DtudTree, d: &Dataset) -> Result<f64> {
    if d.is_empty() {
        return Ok(0.0);
    }
    let leaves = tree.leaves();
    let mut correct = 0.0;
    for t in &d.tuples {
        let label = t
            .label
            .ok_or_else(|| Error::Schema(format!("tuple {} has no label", t.id)))?;
        let masses = route_masses(tree, t)?;
        correct += leaves
            .iter()
            .zip(&masses)
            .filter(|(leaf, _)| leaf.dominant == label)
            .map(|(_, m)| m)
            .sum::<f64>();
    }
    Ok(correct / d.len() as f64)
}

/// Share of test tuples whose most probable label equals their own.
pub fn test_accuracy(tree: &DtudTree, d: &Dataset) -> Result<f64> {
    if d.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for t in &d.tuples {
        let label = t
            .label
            .ok_or_else(|| Error::Schema(format!("tuple {} has no label", t.id)))?;
        let name = &d.label_set[label];
        let predicted = predict_label(&classify(tree, t)?);
        if &tree.labels[predicted] == name {
            correct += 1;
        }
    }
    Ok(correct as f64 / d.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Seeded k-fold cross-validation; fold sizes differ by at most one.
pub fn k_fold_cv(d: &Dataset, k: usize, cfg: &TreeConfig) -> Result<CvReport> {
    let n = d.len();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must lie in [2, {n}], got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let folds: Vec<Vec<usize>> = (0..k)
        .map(|i| order[i * n / k..(i + 1) * n / k].to_vec())
        .collect();

    let mut fold_accuracies = Vec::with_capacity(k);
    for (i, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let tree = build_tree(&d.subset(&train_idx), cfg)?;
        fold_accuracies.push(test_accuracy(&tree, &d.subset(test_idx))?);
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvReport {
        k,
        seed: cfg.seed,
        folds,
        fold_accuracies,
        mean_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uncertain::UncertainTuple;

    fn certain(xs: &[f64], labels: &[usize], names: &[&str]) -> Dataset {
        let tuples = xs
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&x, &l))| UncertainTuple::certain(i.to_string(), &[x], Some(l)).unwrap())
            .collect();
        Dataset::new(vec!["x".into()], names.iter().map(|s| s.to_string()).collect(), tuples).unwrap()
    }

    #[test]
    fn perfect_fit() {
        let d = certain(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1], &["g", "p"]);
        let t = build_tree(&d, &TreeConfig::default()).unwrap();
        assert_eq!(training_accuracy(&t, &d).unwrap(), 1.0);
        assert_eq!(test_accuracy(&t, &d).unwrap(), 1.0);
    }

    #[test]
    fn single_leaf_accuracy() {
        // identical x values: no split possible
        let d = certain(&[1.0, 1.0, 1.0], &[0, 0, 1], &["g", "p"]);
        let t = build_tree(&d, &TreeConfig::default()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert!((training_accuracy(&t, &d).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_prediction() {
        let train = certain(&[1.0, 2.0], &[0, 1], &["g", "p"]);
        let t = build_tree(&train, &TreeConfig::default()).unwrap();
        let test = certain(&[1.0], &[1], &["g", "p"]);
        assert_eq!(test_accuracy(&t, &test).unwrap(), 0.0);
    }

    #[test]
    fn fold_layout() {
        let d = certain(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0, 1, 0, 1, 0], &["a", "b"]);
        let cfg = TreeConfig { seed: 3, ..TreeConfig::default() };
        let r = k_fold_cv(&d, 5, &cfg).unwrap();
        assert!(r.folds.iter().all(|f| f.len() == 1));
        let again = k_fold_cv(&d, 5, &cfg).unwrap();
        assert_eq!(r, again);
        assert!(k_fold_cv(&d, 1, &cfg).is_err());
        assert!(k_fold_cv(&d, 6, &cfg).is_err());

        let xs: Vec<f64> = (0..150).map(|i| i as f64).collect();
        let ls: Vec<usize> = (0..150).map(|i| usize::from(i >= 75)).collect();
        let big = certain(&xs, &ls, &["a", "b"]);
        let r = k_fold_cv(&big, 5, &cfg).unwrap();
        assert!(r.folds.iter().all(|f| f.len() == 30));
        let mut all: Vec<usize> = r.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
    }
}
