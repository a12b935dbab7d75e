//! The end-to-end design-mining workflow on a surrogate spec.
//!
//! Per component: LHS over the global bounds, surrogate responses, labels,
//! tree training, rule selection, LHS inside the rule box, and screening of
//! the new designs. The screened designs of all components are then
//! recombined into system designs by seeded random choice.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::doe::{lhs, lhs_in_rule, SamplingPlan};
use crate::error::{Error, Result};
use crate::manifest::write_atomic;
use crate::metrics::{surrogate_respond, ComponentSpec, SurrogateSpec, MASS};
use crate::rules::{mine_rules, screen_designs, screening_csv, Rule, RulesReport, ScreenedDesign};
use crate::tree::{build_tree, classify, training_accuracy, DtudTree, TreeConfig};
use crate::uncertain::{
    make_marginal, Dataset, LabelCriteria, UncertainTuple, GOOD, INTERMEDIATE, POOR,
};

/// Settings shared by every pipeline stage of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bounds: Vec<(f64, f64)>,
    pub target: String,
    pub theta: f64,
    pub criteria: LabelCriteria,
    pub max_layers: usize,
}

impl PipelineConfig {
    pub fn for_component(c: &ComponentSpec, theta: f64) -> Self {
        PipelineConfig {
            bounds: c.bounds(),
            target: GOOD.to_string(),
            theta,
            criteria: c.criteria.clone(),
            max_layers: c.max_layers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidParameter("bounds must be ordered".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lp threshold must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if self.max_layers == 0 {
            return Err(Error::InvalidParameter("max_layers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub seed: u64,
    pub train_samples: usize,
    pub subspace_samples: usize,
    pub top_k: usize,
    pub combinations: usize,
    pub theta: f64,
    pub n_split_points: usize,
    /// Overrides the per-component values of the spec.
    pub uncertainty: Option<f64>,
    pub max_layers: Option<usize>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            seed: 7,
            train_samples: 150,
            subspace_samples: 20,
            top_k: 10,
            combinations: 20,
            theta: crate::rules::DEFAULT_THETA,
            n_split_points: 10,
            uncertainty: None,
            max_layers: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComponentRun {
    pub name: String,
    pub attributes: Vec<String>,
    pub training: Dataset,
    pub tree: DtudTree,
    pub training_accuracy: f64,
    pub rules: RulesReport,
    pub rule: Rule,
    /// True when no branch reached the configured threshold and the most
    /// accurate target branch was taken instead.
    pub fallback: bool,
    pub subspace: Vec<Vec<f64>>,
    /// lp vectors of all subspace designs, in design order.
    pub subspace_lp: Vec<Vec<f64>>,
    pub screened: Vec<ScreenedDesign>,
    pub masses: Vec<f64>,
}

impl ComponentRun {
    fn target_index(&self) -> usize {
        self.tree.label_index(GOOD).expect("tree carries the target label")
    }

    pub fn mean_lp_all(&self) -> f64 {
        let g = self.target_index();
        self.subspace_lp.iter().map(|lp| lp[g]).sum::<f64>() / self.subspace_lp.len() as f64
    }

    pub fn mean_lp_screened(&self) -> f64 {
        let g = self.target_index();
        self.screened.iter().map(|s| s.lp[g]).sum::<f64>() / self.screened.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemDesign {
    pub id: usize,
    /// Chosen design id per component.
    pub picks: Vec<String>,
    pub total_mass: f64,
    /// lp('g') of each pick.
    pub lp_good: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DemoRun {
    pub components: Vec<ComponentRun>,
    pub systems: Vec<SystemDesign>,
}

fn label_set() -> Vec<String> {
    [GOOD, INTERMEDIATE, POOR].iter().map(|s| s.to_string()).collect()
}

fn uncertain_tuples(rows: &[Vec<f64>], r: f64, labels: Option<&[usize]>) -> Result<Vec<UncertainTuple>> {
    rows.iter()
        .enumerate()
        .map(|(i, x)| {
            let m = x.iter().map(|&v| make_marginal(v, r)).collect::<Result<Vec<_>>>()?;
            Ok(UncertainTuple::new((i + 1).to_string(), m, labels.map(|l| l[i])))
        })
        .collect()
}

/// Trains on `n` LHS samples of the component and labels them through the
/// surrogate.
pub fn training_set(c: &ComponentSpec, n: usize, r: f64, seed: u64) -> Result<Dataset> {
    let rows = lhs(&SamplingPlan { bounds: c.bounds(), n, seed })?;
    let names = label_set();
    let labels = rows
        .iter()
        .map(|x| {
            let rec = surrogate_respond(x, c)?;
            let l = c.criteria.label(&rec)?;
            Ok(names.iter().position(|n| n == l).expect("known label"))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(c.variable_names(), names, uncertain_tuples(&rows, r, Some(&labels))?)
}

fn select_rule(tree: &DtudTree, d: &Dataset, cfg: &PipelineConfig) -> Result<(RulesReport, Rule, bool)> {
    match mine_rules(tree, d, &cfg.bounds, &cfg.target, cfg.theta) {
        Ok((report, rule)) => Ok((report, rule, false)),
        Err(Error::Selection(_)) => {
            // lower the threshold to the best achievable target accuracy
            let best = crate::rules::score_branches(tree, d)?
                .into_iter()
                .filter(|s| s.label == cfg.target)
                .map(|s| s.acc)
                .fold(f64::NEG_INFINITY, f64::max);
            if !best.is_finite() {
                return Err(Error::Selection(format!(
                    "tree has no '{}' branch; adjust the criteria or grow a deeper tree",
                    cfg.target
                )));
            }
            let (report, rule) = mine_rules(tree, d, &cfg.bounds, &cfg.target, best)?;
            Ok((report, rule, true))
        }
        Err(e) => Err(e),
    }
}

pub fn run_component(c: &ComponentSpec, cfg: &DemoConfig, seeds: [u64; 3]) -> Result<ComponentRun> {
    let r = cfg.uncertainty.unwrap_or(c.uncertainty);
    let mut pcfg = PipelineConfig::for_component(c, cfg.theta);
    if let Some(l) = cfg.max_layers {
        pcfg.max_layers = l;
    }
    pcfg.validate()?;

    let training = training_set(c, cfg.train_samples, r, seeds[0])?;
    let tcfg = TreeConfig {
        max_layers: pcfg.max_layers,
        n_split_points: cfg.n_split_points,
        seed: seeds[0],
        ..TreeConfig::default()
    };
    let tree = build_tree(&training, &tcfg)?;
    let accuracy = training_accuracy(&tree, &training)?;
    let (rules, rule, fallback) = select_rule(&tree, &training, &pcfg)?;

    let subspace = lhs_in_rule(&rule, cfg.subspace_samples, seeds[1])?;
    let designs = uncertain_tuples(&subspace, r, None)?;
    let subspace_lp = designs
        .iter()
        .map(|t| classify(&tree, t))
        .collect::<Result<Vec<_>>>()?;
    let screened = screen_designs(&tree, &designs, &pcfg.target, cfg.top_k)?;
    let masses = subspace
        .iter()
        .map(|x| {
            surrogate_respond(x, c)?
                .get(MASS)
                .ok_or_else(|| Error::Format(format!("component {} has no mass response", c.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComponentRun {
        name: c.name.clone(),
        attributes: c.variable_names(),
        training,
        tree,
        training_accuracy: accuracy,
        rules,
        rule,
        fallback,
        subspace,
        subspace_lp,
        screened,
        masses,
    })
}

pub fn run_demo(spec: &SurrogateSpec, cfg: &DemoConfig) -> Result<DemoRun> {
    spec.validate()?;
    if cfg.top_k == 0 || cfg.top_k > cfg.subspace_samples {
        return Err(Error::InvalidParameter(format!(
            "top {} of {} subspace samples",
            cfg.top_k, cfg.subspace_samples
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<[u64; 3]> = spec
        .components
        .iter()
        .map(|_| [master.gen(), master.gen(), master.gen()])
        .collect();
    let components = spec
        .components
        .iter()
        .zip(&seeds)
        .map(|(c, s)| run_component(c, cfg, *s))
        .collect::<Result<Vec<_>>>()?;

    let mut systems = Vec::with_capacity(cfg.combinations);
    for id in 1..=cfg.combinations {
        let mut picks = Vec::new();
        let mut total_mass = 0.0;
        let mut lp_good = Vec::new();
        for run in &components {
            let chosen = &run.screened[master.gen_range(0..run.screened.len())];
            let idx: usize = chosen.id.parse::<usize>().expect("numeric design id") - 1;
            total_mass += run.masses[idx];
            lp_good.push(chosen.lp[run.target_index()]);
            picks.push(chosen.id.clone());
        }
        systems.push(SystemDesign { id, picks, total_mass, lp_good });
    }
    Ok(DemoRun { components, systems })
}

#[derive(Serialize)]
struct ComponentSummary<'a> {
    name: &'a str,
    training_samples: usize,
    label_counts: BTreeMap<String, usize>,
    leaves: usize,
    depth: usize,
    training_accuracy: f64,
    selected_rule: &'a str,
    rule_acc: f64,
    rule_ctt: f64,
    threshold_fallback: bool,
    mean_lp_g_subspace: f64,
    mean_lp_g_screened: f64,
}

fn design_csv(run: &ComponentRun) -> String {
    let mut out = String::from("id");
    for a in &run.attributes {
        out.push_str(&format!(",{a}"));
    }
    out.push_str(",M\n");
    for (i, (x, m)) in run.subspace.iter().zip(&run.masses).enumerate() {
        out.push_str(&(i + 1).to_string());
        for v in x {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{m}\n"));
    }
    out
}

fn system_csv(components: &[ComponentRun], systems: &[SystemDesign]) -> String {
    let mut out = String::from("id");
    for c in components {
        out.push_str(&format!(",{}", c.name));
    }
    out.push_str(",total_mass");
    for c in components {
        out.push_str(&format!(",lp_g_{}", c.name));
    }
    out.push('\n');
    for s in systems {
        out.push_str(&s.id.to_string());
        for p in &s.picks {
            out.push_str(&format!(",{p}"));
        }
        out.push_str(&format!(",{}", s.total_mass));
        for lp in &s.lp_good {
            out.push_str(&format!(",{lp}"));
        }
        out.push('\n');
    }
    out
}

impl DemoRun {
    /// Writes all artifacts below `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut put = |rel: String, text: String| -> Result<()> {
            let p = dir.join(rel);
            write_atomic(&p, text.as_bytes())?;
            written.push(p);
            Ok(())
        };
        let mut summaries = Vec::new();
        for c in &self.components {
            put(format!("{}/tree.json", c.name), c.tree.to_json())?;
            put(format!("{}/rules.json", c.name), c.rules.to_json())?;
            put(format!("{}/designs.csv", c.name), design_csv(c))?;
            put(format!("{}/screening.csv", c.name), screening_csv(&c.tree.labels, &c.screened))?;
            let mut label_counts = BTreeMap::new();
            for t in &c.training.tuples {
                let l = &c.training.label_set[t.label.expect("training labels")];
                *label_counts.entry(l.clone()).or_insert(0) += 1;
            }
            summaries.push(ComponentSummary {
                name: &c.name,
                training_samples: c.training.len(),
                label_counts,
                leaves: c.tree.n_leaves(),
                depth: c.tree.depth(),
                training_accuracy: c.training_accuracy,
                selected_rule: &c.rule.id,
                rule_acc: c.rule.acc,
                rule_ctt: c.rule.ctt,
                threshold_fallback: c.fallback,
                mean_lp_g_subspace: c.mean_lp_all(),
                mean_lp_g_screened: c.mean_lp_screened(),
            });
        }
        put("systems.csv".into(), system_csv(&self.components, &self.systems))?;
        let summary = serde_json::json!({ "components": summaries });
        put(
            "summary.json".into(),
            serde_json::to_string_pretty(&summary).expect("summary serialises"),
        )?;
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> DemoConfig {
        DemoConfig {
            train_samples: 60,
            max_layers: Some(4),
            ..DemoConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let c = &SurrogateSpec::bundled().components[0];
        let mut p = PipelineConfig::for_component(c, 0.85);
        assert!(p.validate().is_ok());
        p.theta = 1.01;
        assert!(p.validate().is_err());
        p.theta = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn bundled_training_sets_have_good_designs() {
        for c in &SurrogateSpec::bundled().components {
            let d = training_set(c, 150, c.uncertainty, 1).unwrap();
            let g = d.label_index(GOOD).unwrap();
            let n_good = d.tuples.iter().filter(|t| t.label == Some(g)).count();
            assert!((15..=100).contains(&n_good), "{}: {n_good} good of 150", c.name);
        }
    }

    #[test]
    fn demo_shape_and_determinism() {
        let spec = SurrogateSpec::bundled();
        let a = run_demo(&spec, &quick()).unwrap();
        assert_eq!(a.components.len(), spec.components.len());
        assert_eq!(a.systems.len(), 20);
        for c in &a.components {
            assert_eq!(c.screened.len(), 10);
            assert!(c.subspace.iter().all(|x| c.rule.contains(x)));
            assert!(c.mean_lp_screened() >= c.mean_lp_all() - 1e-12);
        }
        let b = run_demo(&spec, &quick()).unwrap();
        assert_eq!(system_csv(&a.components, &a.systems), system_csv(&b.components, &b.systems));
        assert!(run_demo(&spec, &DemoConfig { top_k: 30, ..quick() }).is_err());
    }
}
