use crate::error::{Error, Result};

use super::marginal::{ActiveRange, TruncatedGaussianMarginal};

/// One design sample: a box of independent truncated-Gaussian marginals, an
/// optional class label (an index into the owning dataset's label set) and the
/// tuple probability carried by the currently active sub-box.
///
/// Fragments produced by [`partition_tuple`] keep the original marginals and
/// only narrow `active`; `tp` is always measured against the original joint
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainTuple {
    pub id: String,
    pub marginals: Vec<TruncatedGaussianMarginal>,
    pub active: Vec<ActiveRange>,
    pub label: Option<usize>,
    pub tp: f64,
}

impl UncertainTuple {
    /// A freshly ingested tuple: the active box is the full support and tp = 1.
    pub fn new(
        id: impl Into<String>,
        marginals: Vec<TruncatedGaussianMarginal>,
        label: Option<usize>,
    ) -> Self {
        let active = marginals.iter().map(|m| m.support()).collect();
        UncertainTuple {
            id: id.into(),
            marginals,
            active,
            label,
            tp: 1.0,
        }
    }

    /// Certain tuple from exact values.
    pub fn certain(id: impl Into<String>, values: &[f64], label: Option<usize>) -> Result<Self> {
        let marginals = values
            .iter()
            .map(|&v| TruncatedGaussianMarginal::point(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(UncertainTuple::new(id, marginals, label))
    }

    pub fn n_attributes(&self) -> usize {
        self.marginals.len()
    }

    /// Product of the per-attribute masses of the active box.
    pub fn box_probability(&self) -> f64 {
        self.marginals
            .iter()
            .zip(&self.active)
            .map(|(m, r)| m.mass_in(r))
            .product()
    }

    /// Mass of the active box on one attribute.
    pub fn attribute_mass(&self, attr: usize) -> f64 {
        self.marginals[attr].mass_in(&self.active[attr])
    }

    /// Part of the active range on `attr` that carries mass: the active range
    /// clipped to the marginal support. `None` when that part is empty.
    pub fn effective_range(&self, attr: usize) -> Option<(f64, f64)> {
        let m = &self.marginals[attr];
        let r = &self.active[attr];
        if m.mass_in(r) <= 0.0 {
            return None;
        }
        let lo = r.lo.max(m.lower());
        let hi = r.hi.min(m.upper());
        Some((lo, hi))
    }

    /// The exact values of a certain tuple (the marginal means otherwise).
    pub fn means(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.mean()).collect()
    }
}

/// Share of the tuple's active mass on `attr` that falls at or below `s`.
/// Returns 0 for a tuple whose active range carries no mass.
pub(crate) fn split_fraction(t: &UncertainTuple, attr: usize, s: f64) -> f64 {
    let marginal = &t.marginals[attr];
    let active = &t.active[attr];
    let parent = marginal.mass_in(active);
    if !(parent > 0.0) {
        return 0.0;
    }
    let (left, right) = active.split(s);
    if marginal.mass_in(&right) == 0.0 {
        return 1.0;
    }
    (marginal.mass_in(&left) / parent).min(1.0)
}

/// Splits a tuple at threshold `s` on attribute `attr` into its `x <= s` and
/// `x > s` fragments. The fragment tps add up to the parent's tp.
pub fn partition_tuple(
    t: &UncertainTuple,
    attr: usize,
    s: f64,
) -> Result<(UncertainTuple, UncertainTuple)> {
    if attr >= t.n_attributes() {
        return Err(Error::Index {
            index: attr,
            len: t.n_attributes(),
        });
    }
    let (left_range, right_range) = t.active[attr].split(s);
    let left_share = split_fraction(t, attr, s);
    let mut left = t.clone();
    let mut right = t.clone();
    left.active[attr] = left_range;
    right.active[attr] = right_range;
    left.tp = t.tp * left_share;
    right.tp = (t.tp - left.tp).max(0.0);
    if left_share == 1.0 {
        right.tp = 0.0;
    }
    Ok((left, right))
}
