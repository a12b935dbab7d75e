//! Binary decision trees for uncertain data.
//!
//! Internal nodes test `x[attr] <= threshold`; a tuple whose interval
//! straddles the threshold is split into two weighted fragments. Leaves hold
//! label-probability (LP) distributions rather than a single class.

mod build;
mod classify;
mod eval;
mod json;
mod measures;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{best_split, build_tree, gen_split_candidates};
pub use classify::{classify, predict_label, route_masses};
pub use eval::{k_fold_cv, test_accuracy, training_accuracy, CvReport};
pub use measures::{
    entropy, entropy_of_masses, gain_ratio, split_entropy, split_info, DEFAULT_MIN_PARTITION_MASS,
};

/// Gain ratios closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Maximum number of splits along any root-to-leaf path.
    pub max_layers: usize,
    /// Candidate thresholds per attribute at each node.
    pub n_split_points: usize,
    pub min_partition_mass: f64,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_layers: 6,
            n_split_points: 10,
            min_partition_mass: DEFAULT_MIN_PARTITION_MASS,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_layers == 0 {
            return Err(Error::InvalidParameter("max_layers must be at least 1".into()));
        }
        if self.n_split_points == 0 {
            return Err(Error::InvalidParameter("n_split_points must be at least 1".into()));
        }
        if !(self.min_partition_mass >= 0.0) {
            return Err(Error::InvalidParameter("min_partition_mass must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub attr: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    /// Label probabilities aligned with the tree's label list.
    pub lp: Vec<f64>,
    /// Training mass that reached this leaf.
    pub mass: f64,
    pub dominant: usize,
}

impl Leaf {
    pub fn new(lp: Vec<f64>, mass: f64) -> Self {
        let dominant = argmax(&lp);
        Leaf { lp, mass, dominant }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        attr: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf(Leaf),
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        collect_leaves(self, &mut out);
        out
    }
}

fn collect_leaves<'a>(node: &'a Node, out: &mut Vec<&'a Leaf>) {
    match node {
        Node::Leaf(l) => out.push(l),
        Node::Split { left, right, .. } => {
            collect_leaves(left, out);
            collect_leaves(right, out);
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtudTree {
    pub attributes: Vec<String>,
    pub labels: Vec<String>,
    pub root: Node,
    pub config: Option<TreeConfig>,
}

impl DtudTree {
    pub fn leaves(&self) -> Vec<&Leaf> {
        self.root.leaves()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().len()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Checks the structural invariants: normalised leaf LPs, attribute
    /// indices in range, a non-empty region along every path and the depth
    /// bound of the recorded config.
    pub fn validate(&self) -> Result<()> {
        let mut ranges = vec![(f64::NEG_INFINITY, f64::INFINITY); self.attributes.len()];
        self.validate_node(&self.root, &mut ranges)?;
        if let Some(cfg) = &self.config {
            if self.depth() > cfg.max_layers {
                return Err(Error::Format(format!(
                    "tree depth {} exceeds max_layers {}",
                    self.depth(),
                    cfg.max_layers
                )));
            }
        }
        Ok(())
    }

    fn validate_node(&self, node: &Node, ranges: &mut [(f64, f64)]) -> Result<()> {
        match node {
            Node::Leaf(leaf) => {
                if leaf.lp.len() != self.labels.len() {
                    return Err(Error::Format("leaf lp length differs from label count".into()));
                }
                let sum: f64 = leaf.lp.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || leaf.lp.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::Format(format!("leaf lp sums to {sum}")));
                }
                if !(leaf.mass >= 0.0) {
                    return Err(Error::Format("negative leaf mass".into()));
                }
                Ok(())
            }
            Node::Split {
                attr,
                threshold,
                left,
                right,
            } => {
                let (lo, hi) = *ranges.get(*attr).ok_or(Error::Index {
                    index: *attr,
                    len: self.attributes.len(),
                })?;
                if !threshold.is_finite() || !(*threshold > lo && *threshold < hi) {
                    return Err(Error::Format(format!(
                        "threshold {threshold} on attribute {attr} leaves an empty region"
                    )));
                }
                ranges[*attr] = (lo, *threshold);
                self.validate_node(left, ranges)?;
                ranges[*attr] = (*threshold, hi);
                self.validate_node(right, ranges)?;
                ranges[*attr] = (lo, hi);
                Ok(())
            }
        }
    }
}
