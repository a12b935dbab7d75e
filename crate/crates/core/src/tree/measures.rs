//! Attribute selection measure: information gain ratio over fractional
//! tuple masses. Entropies are in bits.

use crate::error::{Error, Result};
use crate::uncertain::{dataset_mass, Dataset};

use super::SplitCandidate;

/// Partitions lighter than this are treated as empty.
pub const DEFAULT_MIN_PARTITION_MASS: f64 = 1e-6;

/// Entropy (bits) of a label-mass vector, with 0 log 0 = 0.
pub fn entropy_of_masses(masses: &[f64]) -> f64 {
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    -masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| {
            let p = m / total;
            p * p.log2()
        })
        .sum::<f64>()
}

pub fn entropy(d: &Dataset) -> Result<f64> {
    if !(dataset_mass(d) > 0.0) {
        return Err(Error::EmptyDataset);
    }
    Ok(entropy_of_masses(&d.label_masses()))
}

/// Label masses on the `<=` and `>` sides of a candidate.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SplitMasses {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl SplitMasses {
    pub fn compute(d: &Dataset, s: &SplitCandidate) -> SplitMasses {
        let n = d.label_set.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for t in &d.tuples {
            let Some(label) = t.label else { continue };
            let share = crate::uncertain::split_fraction(t, s.attr, s.value);
            let l = t.tp * share;
            let r = if share == 1.0 { 0.0 } else { (t.tp - l).max(0.0) };
            left[label] += l;
            right[label] += r;
        }
        SplitMasses { left, right }
    }

    pub fn totals(&self) -> (f64, f64) {
        (self.left.iter().sum(), self.right.iter().sum())
    }

    pub fn admissible(&self, min_mass: f64) -> bool {
        let (l, r) = self.totals();
        l > 0.0 && r > 0.0 && l >= min_mass && r >= min_mass
    }

    pub fn split_entropy(&self) -> f64 {
        let (l, r) = self.totals();
        let total = l + r;
        (l / total) * entropy_of_masses(&self.left) + (r / total) * entropy_of_masses(&self.right)
    }

    pub fn split_info(&self) -> f64 {
        let (l, r) = self.totals();
        entropy_of_masses(&[l, r])
    }

    /// Gain ratio given the parent entropy.
    pub fn gain_ratio(&self, parent_entropy: f64) -> f64 {
        (parent_entropy - self.split_entropy()) / self.split_info()
    }
}

fn checked(d: &Dataset, s: &SplitCandidate, min_mass: f64) -> Result<SplitMasses> {
    if s.attr >= d.n_attributes() {
        return Err(Error::Index {
            index: s.attr,
            len: d.n_attributes(),
        });
    }
    let masses = SplitMasses::compute(d, s);
    if !masses.admissible(min_mass) {
        let (l, r) = masses.totals();
        return Err(Error::InvalidSplit(format!(
            "attribute {} at {}: partition masses {l} / {r}",
            s.attr, s.value
        )));
    }
    Ok(masses)
}

/// Mass-weighted entropy of the two partitions.
pub fn split_entropy(d: &Dataset, s: &SplitCandidate) -> Result<f64> {
    Ok(checked(d, s, DEFAULT_MIN_PARTITION_MASS)?.split_entropy())
}

/// Entropy of the partition-mass proportions.
pub fn split_info(d: &Dataset, s: &SplitCandidate) -> Result<f64> {
    Ok(checked(d, s, DEFAULT_MIN_PARTITION_MASS)?.split_info())
}

pub fn gain_ratio(d: &Dataset, s: &SplitCandidate) -> Result<f64> {
    let masses = checked(d, s, DEFAULT_MIN_PARTITION_MASS)?;
    Ok(masses.gain_ratio(entropy(d)?))
}
