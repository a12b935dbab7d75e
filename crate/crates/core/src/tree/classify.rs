use crate::error::{Error, Result};
use crate::uncertain::{partition_tuple, UncertainTuple};

use super::{argmax, DtudTree, Node};

fn check_schema(tree: &DtudTree, t: &UncertainTuple) -> Result<()> {
    if t.n_attributes() != tree.attributes.len() {
        return Err(Error::Schema(format!(
            "tuple {} has {} attributes, tree expects {}",
            t.id,
            t.n_attributes(),
            tree.attributes.len()
        )));
    }
    Ok(())
}

/// Tuple-probability mass of `t` reaching each leaf, in left-to-right leaf
/// order. The entries sum to `t.tp`.
pub fn route_masses(tree: &DtudTree, t: &UncertainTuple) -> Result<Vec<f64>> {
    check_schema(tree, t)?;
    let mut out = Vec::with_capacity(tree.n_leaves());
    route(&tree.root, t.clone(), &mut out)?;
    Ok(out)
}

fn route(node: &Node, t: UncertainTuple, out: &mut Vec<f64>) -> Result<()> {
    match node {
        Node::Leaf(_) => {
            out.push(t.tp);
            Ok(())
        }
        Node::Split {
            attr,
            threshold,
            left,
            right,
        } => {
            if t.tp > 0.0 {
                let (l, r) = partition_tuple(&t, *attr, *threshold)?;
                route(left, l, out)?;
                route(right, r, out)
            } else {
                let mut zero = t;
                zero.tp = 0.0;
                route(left, zero.clone(), out)?;
                route(right, zero, out)
            }
        }
    }
}

/// Label-probability vector of `t`: leaf LPs weighted by the share of the
/// tuple's mass reaching each leaf.
pub fn classify(tree: &DtudTree, t: &UncertainTuple) -> Result<Vec<f64>> {
    if !(t.tp > 0.0) {
        return Err(Error::InvalidParameter(format!("tuple {} carries no mass", t.id)));
    }
    let masses = route_masses(tree, t)?;
    let mut lp = vec![0.0; tree.labels.len()];
    for (leaf, mass) in tree.leaves().into_iter().zip(masses) {
        if mass > 0.0 {
            for (acc, p) in lp.iter_mut().zip(&leaf.lp) {
                *acc += mass * p;
            }
        }
    }
    for p in &mut lp {
        *p /= t.tp;
    }
    Ok(lp)
}

/// Most probable label index; ties go to the lexicographically smallest label.
pub fn predict_label(lp: &[f64]) -> usize {
    argmax(lp)
}
