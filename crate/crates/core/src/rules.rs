//! Design rules from tree branches.
//!
//! Each root-to-leaf path is a conjunction of threshold tests, i.e. a box in
//! design space. Branches are scored by their leaf accuracy (ACC, the leaf's
//! dominant-label probability) and by CTT, the training mass of the dominant
//! label that the leaf captures relative to the whole training set.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use serde_json::Map;

use crate::error::{Error, Result};
use crate::tree::{classify, route_masses, DtudTree, Node};
use crate::uncertain::{Dataset, UncertainTuple};

/// Default minimum target-label probability for a branch to be selectable.
pub const DEFAULT_THETA: f64 = 0.85;

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub attr: usize,
    pub relation: Relation,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// "b1", "b2", ... in left-to-right leaf order.
    pub id: String,
    /// Zero-based leaf position, matching [`route_masses`] output order.
    pub leaf: usize,
    pub path: Vec<Condition>,
    pub lp: Vec<f64>,
    pub mass: f64,
    pub dominant: usize,
}

impl Branch {
    pub fn acc(&self) -> f64 {
        self.lp[self.dominant]
    }
}

pub fn enumerate_branches(tree: &DtudTree) -> Vec<Branch> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk(&tree.root, &mut path, &mut out);
    out
}

fn walk(node: &Node, path: &mut Vec<Condition>, out: &mut Vec<Branch>) {
    match node {
        Node::Leaf(leaf) => {
            let leaf_idx = out.len();
            out.push(Branch {
                id: format!("b{}", leaf_idx + 1),
                leaf: leaf_idx,
                path: path.clone(),
                lp: leaf.lp.clone(),
                mass: leaf.mass,
                dominant: leaf.dominant,
            });
        }
        Node::Split {
            attr,
            threshold,
            left,
            right,
        } => {
            path.push(Condition {
                attr: *attr,
                relation: Relation::Le,
                threshold: *threshold,
            });
            walk(left, path, out);
            path.last_mut().expect("pushed").relation = Relation::Gt;
            walk(right, path, out);
            path.pop();
        }
    }
}

/// Intersects the branch's path constraints with the global bounds: `<=`
/// tightens the upper end, `>` the lower end.
pub fn branch_box(branch: &Branch, bounds: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut b = bounds.to_vec();
    for c in &branch.path {
        let slot = b.get_mut(c.attr).ok_or(Error::Index {
            index: c.attr,
            len: bounds.len(),
        })?;
        match c.relation {
            Relation::Le => slot.1 = slot.1.min(c.threshold),
            Relation::Gt => slot.0 = slot.0.max(c.threshold),
        }
    }
    if b.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::InconsistentBranch(branch.id.clone()));
    }
    Ok(b)
}

/// Share of the training mass with the branch's dominant label that ends up
/// in the branch's leaf.
pub fn branch_ctt(tree: &DtudTree, branch: &Branch, d_origin: &Dataset) -> Result<f64> {
    let captured = captured_masses(tree, d_origin)?;
    Ok(captured[branch.leaf] / origin_mass(d_origin)?)
}

fn origin_mass(d: &Dataset) -> Result<f64> {
    if d.origin_mass > 0.0 {
        Ok(d.origin_mass)
    } else {
        Err(Error::EmptyDataset)
    }
}

/// Per leaf: mass of tuples whose label equals the leaf's dominant label.
fn captured_masses(tree: &DtudTree, d: &Dataset) -> Result<Vec<f64>> {
    let leaves = tree.leaves();
    let to_tree: Vec<Option<usize>> = d.label_set.iter().map(|l| tree.label_index(l)).collect();
    let mut captured = vec![0.0; leaves.len()];
    for t in &d.tuples {
        let Some(label) = t.label.and_then(|l| to_tree[l]) else {
            continue;
        };
        for (i, m) in route_masses(tree, t)?.into_iter().enumerate() {
            if leaves[i].dominant == label {
                captured[i] += m;
            }
        }
    }
    Ok(captured)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBranch {
    pub branch: Branch,
    pub label: String,
    pub acc: f64,
    pub ctt: f64,
}

/// Every branch with its ACC and CTT against the training set.
pub fn score_branches(tree: &DtudTree, d_origin: &Dataset) -> Result<Vec<ScoredBranch>> {
    let captured = captured_masses(tree, d_origin)?;
    let total = origin_mass(d_origin)?;
    Ok(enumerate_branches(tree)
        .into_iter()
        .map(|b| ScoredBranch {
            label: tree.labels[b.dominant].clone(),
            acc: b.acc(),
            ctt: captured[b.leaf] / total,
            branch: b,
        })
        .collect())
}

/// Among branches whose dominant label is `target` with lp(target) >= theta,
/// the one with the largest CTT; ties go to the higher lp(target), then to
/// the leftmost branch.
pub fn select_branch<'a>(
    scored: &'a [ScoredBranch],
    target: &str,
    theta: f64,
) -> Result<&'a ScoredBranch> {
    let qualifying: Vec<&ScoredBranch> = scored
        .iter()
        .filter(|s| s.label == target && s.acc >= theta)
        .collect();
    if qualifying.is_empty() {
        return Err(Error::Selection(format!(
            "no '{target}' branch reaches lp >= {theta}; lower the threshold or grow a deeper tree"
        )));
    }
    let top_ctt = qualifying.iter().map(|s| s.ctt).fold(f64::NEG_INFINITY, f64::max);
    let near: Vec<&ScoredBranch> = qualifying
        .into_iter()
        .filter(|s| s.ctt >= top_ctt - TOLERANCE)
        .collect();
    let top_acc = near.iter().map(|s| s.acc).fold(f64::NEG_INFINITY, f64::max);
    Ok(near
        .into_iter()
        .filter(|s| s.acc >= top_acc - TOLERANCE)
        .min_by_key(|s| s.branch.leaf)
        .expect("non-empty"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub label: String,
    /// Per-attribute `[lo, hi]`.
    pub bounds: Vec<(f64, f64)>,
    pub acc: f64,
    pub ctt: f64,
}

impl Rule {
    /// Whether a certain design lies in the box (lower ends treated as closed).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len()
            && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

pub fn branch_to_rule(scored: &ScoredBranch, bounds: &[(f64, f64)]) -> Result<Rule> {
    Ok(Rule {
        id: scored.branch.id.clone(),
        label: scored.label.clone(),
        bounds: branch_box(&scored.branch, bounds)?,
        acc: scored.acc,
        ctt: scored.ctt,
    })
}

/// Global bounds spanned by a dataset's marginal supports.
pub fn dataset_bounds(d: &Dataset) -> Vec<(f64, f64)> {
    (0..d.n_attributes())
        .map(|j| {
            d.tuples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
                let m = &t.marginals[j];
                (lo.min(m.lower()), hi.max(m.upper()))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub id: String,
    pub acc: f64,
    pub ctt: f64,
    /// Training mass in the leaf (the tuple-count robustness measure).
    pub mass: f64,
    #[serde(rename = "box")]
    pub bounds: Map<String, serde_json::Value>,
}

/// The rules document: every target-label branch with its box and the
/// selected one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesReport {
    pub target: String,
    pub theta: f64,
    pub branches: Vec<RuleEntry>,
    pub selected: String,
}

impl RulesReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rules serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reconstructs a rule for sampling; `attributes` fixes the column order.
    pub fn rule(&self, id: &str, attributes: &[String]) -> Result<Rule> {
        let entry = self
            .branches
            .iter()
            .find(|b| b.id == id)
            .ok_or_else(|| Error::Selection(format!("rules document has no branch '{id}'")))?;
        let bounds = attributes
            .iter()
            .map(|a| {
                let pair = entry
                    .bounds
                    .get(a)
                    .and_then(|v| v.as_array())
                    .filter(|v| v.len() == 2)
                    .ok_or_else(|| Error::Format(format!("branch {id}: no bounds for '{a}'")))?;
                let lo = pair[0].as_f64();
                let hi = pair[1].as_f64();
                match (lo, hi) {
                    (Some(lo), Some(hi)) => Ok((lo, hi)),
                    _ => Err(Error::Format(format!("branch {id}: bounds for '{a}' are not numbers"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Rule {
            id: entry.id.clone(),
            label: self.target.clone(),
            bounds,
            acc: entry.acc,
            ctt: entry.ctt,
        })
    }

    /// Attribute names in box order.
    pub fn attributes(&self) -> Vec<String> {
        self.branches
            .first()
            .map(|b| b.bounds.keys().cloned().collect())
            .unwrap_or_default()
    }
}

/// Scores all branches, keeps the target-label ones whose box is non-empty
/// within `bounds`, and selects one.
pub fn mine_rules(
    tree: &DtudTree,
    d_origin: &Dataset,
    bounds: &[(f64, f64)],
    target: &str,
    theta: f64,
) -> Result<(RulesReport, Rule)> {
    if tree.label_index(target).is_none() {
        return Err(Error::InvalidParameter(format!("tree has no label '{target}'")));
    }
    if bounds.len() != tree.attributes.len() {
        return Err(Error::Schema(format!(
            "{} bounds for {} attributes",
            bounds.len(),
            tree.attributes.len()
        )));
    }
    let mut kept = Vec::new();
    let mut entries = Vec::new();
    for s in score_branches(tree, d_origin)?.into_iter().filter(|s| s.label == target) {
        let Ok(rule) = branch_to_rule(&s, bounds) else {
            continue;
        };
        let bounds: Map<String, serde_json::Value> = tree
            .attributes
            .iter()
            .zip(&rule.bounds)
            .map(|(a, (lo, hi))| (a.clone(), serde_json::json!([lo, hi])))
            .collect();
        entries.push(RuleEntry {
            id: s.branch.id.clone(),
            acc: s.acc,
            ctt: s.ctt,
            mass: s.branch.mass,
            bounds,
        });
        kept.push((s, rule));
    }
    let scored: Vec<ScoredBranch> = kept.iter().map(|(s, _)| s.clone()).collect();
    let chosen = select_branch(&scored, target, theta)?;
    let rule = kept
        .iter()
        .find(|(s, _)| s.branch.id == chosen.branch.id)
        .map(|(_, r)| r.clone())
        .expect("selected branch was kept");
    Ok((
        RulesReport {
            target: target.to_string(),
            theta,
            branches: entries,
            selected: rule.id.clone(),
        },
        rule,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenedDesign {
    pub id: String,
    pub lp: Vec<f64>,
    pub rank: usize,
}

fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Classifies every design and keeps the `top_k` with the highest
/// lp(target); ties go to the smaller id.
pub fn screen_designs(
    tree: &DtudTree,
    designs: &[UncertainTuple],
    target: &str,
    top_k: usize,
) -> Result<Vec<ScreenedDesign>> {
    let target_idx = tree
        .label_index(target)
        .ok_or_else(|| Error::InvalidParameter(format!("tree has no label '{target}'")))?;
    if top_k > designs.len() {
        return Err(Error::InvalidParameter(format!(
            "top {top_k} requested from {} designs",
            designs.len()
        )));
    }
    let mut scored = designs
        .iter()
        .map(|d| Ok((d.id.clone(), classify(tree, d)?)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(ia, a), (ib, b)| {
        b[target_idx]
            .total_cmp(&a[target_idx])
            .then_with(|| compare_ids(ia, ib))
    });
    Ok(scored
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, (id, lp))| ScreenedDesign { id, lp, rank: i + 1 })
        .collect())
}

/// `id,lp_p,lp_m,lp_g,rank`: label columns in descending label order.
pub fn screening_csv(labels: &[String], rows: &[ScreenedDesign]) -> String {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[b].cmp(&labels[a]));
    let mut out = String::from("id");
    for &i in &order {
        out.push_str(&format!(",lp_{}", labels[i]));
    }
    out.push_str(",rank\n");
    for r in rows {
        out.push_str(&r.id);
        for &i in &order {
            out.push_str(&format!(",{}", r.lp[i]));
        }
        out.push_str(&format!(",{}\n", r.rank));
    }
    out
}
