use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::uncertain::{dataset_mass, partition_tuple, Dataset, UncertainTuple};

use super::measures::{entropy_of_masses, SplitMasses};
use super::{DtudTree, Leaf, Node, SplitCandidate, TreeConfig, TIE_TOLERANCE};

/// `n` evenly spaced interior thresholds per attribute over the extent of
/// the node's active boxes. Attributes with zero extent contribute nothing.
pub fn gen_split_candidates(d: &Dataset, n: usize) -> Vec<SplitCandidate> {
    let mut out = Vec::with_capacity(n * d.n_attributes());
    for attr in 0..d.n_attributes() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in d.tuples.iter().filter(|t| t.tp > 0.0) {
            if let Some((a, b)) = t.effective_range(attr) {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if !(hi > lo) {
            continue;
        }
        let step = (hi - lo) / (n + 1) as f64;
        out.extend((1..=n).map(|i| SplitCandidate {
            attr,
            value: lo + i as f64 * step,
        }));
    }
    out
}

/// The admissible candidate with the largest gain ratio, with its ratio.
/// Ties within [`TIE_TOLERANCE`] go to the lowest attribute index and then
/// the lowest threshold.
pub fn best_split(
    d: &Dataset,
    candidates: &[SplitCandidate],
    min_partition_mass: f64,
) -> Option<(SplitCandidate, f64)> {
    let parent = entropy_of_masses(&d.label_masses());
    let scored: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|c| {
            let m = SplitMasses::compute(d, c);
            m.admissible(min_partition_mass).then(|| m.gain_ratio(parent))
        })
        .collect();
    let top = scored
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return None;
    }
    candidates
        .iter()
        .zip(&scored)
        .filter_map(|(c, r)| r.map(|r| (*c, r)))
        .filter(|(_, r)| *r >= top - TIE_TOLERANCE)
        .min_by(|(a, _), (b, _)| a.attr.cmp(&b.attr).then(a.value.total_cmp(&b.value)))
}

pub fn build_tree(d: &Dataset, cfg: &TreeConfig) -> Result<DtudTree> {
    cfg.validate()?;
    if d.label_set.is_empty() {
        return Err(Error::Construction("label set is empty".into()));
    }
    if d.tuples.iter().any(|t| t.label.is_none()) {
        return Err(Error::Construction("every training tuple needs a label".into()));
    }
    if !(dataset_mass(d) > 0.0) {
        return Err(Error::Construction("training dataset is empty".into()));
    }
    let root = grow(d.clone(), 0, cfg)?;
    Ok(DtudTree {
        attributes: d.attribute_names.clone(),
        labels: d.label_set.clone(),
        root,
        config: Some(*cfg),
    })
}

fn leaf_from(masses: &[f64]) -> Leaf {
    let total: f64 = masses.iter().sum();
    Leaf::new(masses.iter().map(|m| m / total).collect(), total)
}

fn grow(d: Dataset, depth: usize, cfg: &TreeConfig) -> Result<Node> {
    let masses = d.label_masses();
    let present = masses.iter().filter(|&&m| m > 0.0).count();
    if present <= 1 || depth >= cfg.max_layers {
        return Ok(Node::Leaf(leaf_from(&masses)));
    }
    let candidates = gen_split_candidates(&d, cfg.n_split_points);
    let Some((split, ratio)) = best_split(&d, &candidates, cfg.min_partition_mass) else {
        return Ok(Node::Leaf(leaf_from(&masses)));
    };
    if !(ratio > TIE_TOLERANCE) {
        return Ok(Node::Leaf(leaf_from(&masses)));
    }

    let mut left: Vec<UncertainTuple> = Vec::new();
    let mut right: Vec<UncertainTuple> = Vec::new();
    for t in &d.tuples {
        let (l, r) = partition_tuple(t, split.attr, split.value)?;
        if l.tp > 0.0 {
            left.push(l);
        }
        if r.tp > 0.0 {
            right.push(r);
        }
    }
    let child = |tuples: Vec<UncertainTuple>| -> Result<Node> {
        let part = d.derive(tuples);
        if dataset_mass(&part) > 0.0 {
            grow(part, depth + 1, cfg)
        } else {
            // empty outcome: carry the parent's distribution
            let mut leaf = leaf_from(&masses);
            leaf.mass = 0.0;
            Ok(Node::Leaf(leaf))
        }
    };
    let (left, right) = (child(left)?, child(right)?);
    Ok(Node::Split {
        attr: split.attr,
        threshold: split.value,
        left: Box::new(left),
        right: Box::new(right),
    })
}
