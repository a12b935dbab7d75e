//! Analytic stand-in for crash simulations.
//!
//! A surrogate spec declares, per component, its design variables with
//! bounds, response models built from constant, linear, quadratic and
//! pairwise interaction terms, an optional force-deflection curve template
//! and the labeling criteria used to classify designs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertain::LabelCriteria;

use super::{avgstiff, sea, ForceDeflectionCurve, ResponseRecord, AVGSTIFF, MASS, SEA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticTerm {
    pub var: String,
    pub coef: f64,
    #[serde(default)]
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub a: String,
    pub b: String,
    pub coef: f64,
}

/// `constant + sum linear_i x_i + sum coef (x_v - center)^2 + sum coef x_a x_b`
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResponseModel {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub linear: BTreeMap<String, f64>,
    #[serde(default)]
    pub quadratic: Vec<QuadraticTerm>,
    #[serde(default)]
    pub interactions: Vec<InteractionTerm>,
}

/// Ramp-then-plateau crush curve. The plateau force (kN) is read from the
/// response named by `plateau_force`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTemplate {
    pub plateau_force: String,
    pub deflection_m: f64,
    pub points: usize,
    pub ramp_fraction: f64,
    /// Relative amplitude of a sinusoidal ripple on the plateau.
    #[serde(default)]
    pub ripple: f64,
    #[serde(default = "default_folds")]
    pub folds: f64,
}

fn default_folds() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub variables: Vec<VariableSpec>,
    pub responses: BTreeMap<String, ResponseModel>,
    #[serde(default)]
    pub curve: Option<CurveTemplate>,
    pub criteria: LabelCriteria,
    #[serde(default)]
    pub uncertainty: f64,
    #[serde(default = "default_layers")]
    pub max_layers: usize,
}

fn default_layers() -> usize {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub name: String,
    pub version: u32,
    pub components: Vec<ComponentSpec>,
}

impl SurrogateSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SurrogateSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The specification shipped with the crate, used by the demo pipeline.
    pub fn bundled() -> Self {
        Self::from_json(include_str!("../../data/surrogate_demo.json"))
            .expect("bundled surrogate spec is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Format("surrogate spec has no components".into()));
        }
        for c in &self.components {
            c.validate()?;
        }
        Ok(())
    }
}

impl ComponentSpec {
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.variables.iter().map(|v| (v.lo, v.hi)).collect()
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| {
                Error::Format(format!("component {}: unknown variable '{name}'", self.name))
            })
    }

    fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Format(format!("component {} has no variables", self.name)));
        }
        for v in &self.variables {
            if !(v.lo < v.hi) {
                return Err(Error::Format(format!(
                    "component {}: variable {} has unordered bounds",
                    self.name, v.name
                )));
            }
        }
        for model in self.responses.values() {
            for name in model.linear.keys() {
                self.var_index(name)?;
            }
            for q in &model.quadratic {
                self.var_index(&q.var)?;
            }
            for t in &model.interactions {
                self.var_index(&t.a)?;
                self.var_index(&t.b)?;
            }
        }
        if let Some(curve) = &self.curve {
            if !self.responses.contains_key(&curve.plateau_force) {
                return Err(Error::Format(format!(
                    "component {}: curve force response '{}' is not declared",
                    self.name, curve.plateau_force
                )));
            }
            if !(curve.deflection_m > 0.0) || curve.points < 2 || !(0.0..=1.0).contains(&curve.ramp_fraction) {
                return Err(Error::Format(format!(
                    "component {}: invalid curve template",
                    self.name
                )));
            }
        }
        if !(0.0..1.0).contains(&self.uncertainty) || self.max_layers == 0 {
            return Err(Error::Format(format!(
                "component {}: uncertainty must lie in [0, 1) and max_layers >= 1",
                self.name
            )));
        }
        Ok(())
    }

    fn evaluate(&self, model: &ResponseModel, x: &[f64]) -> f64 {
        let at = |name: &str| x[self.var_index(name).expect("validated")];
        let mut y = model.constant;
        for (name, coef) in &model.linear {
            y += coef * at(name);
        }
        for q in &model.quadratic {
            let d = at(&q.var) - q.center;
            y += q.coef * d * d;
        }
        for t in &model.interactions {
            y += t.coef * at(&t.a) * at(&t.b);
        }
        y
    }

    /// The synthetic crush curve of design `x`, when a template is declared.
    pub fn synthetic_curve(&self, x: &[f64]) -> Result<Option<ForceDeflectionCurve>> {
        let Some(t) = &self.curve else {
            return Ok(None);
        };
        let plateau = self.evaluate(&self.responses[&t.plateau_force], x);
        let ramp_end = t.ramp_fraction * t.deflection_m;
        let n = t.points - 1;
        let u: Vec<f64> = (0..=n).map(|i| t.deflection_m * i as f64 / n as f64).collect();
        let f: Vec<f64> = u
            .iter()
            .map(|&ui| {
                let rise = if ramp_end > 0.0 { (ui / ramp_end).min(1.0) } else { 1.0 };
                let phase = 2.0 * std::f64::consts::PI * t.folds * ui / t.deflection_m;
                plateau * rise * (1.0 + t.ripple * phase.sin())
            })
            .collect();
        ForceDeflectionCurve::new(u, f).map(Some)
    }
}

/// Evaluates every declared response at `x`. With a curve template the
/// record also carries `avgstiff` and, when a mass response exists, `SEA`.
pub fn surrogate_respond(x: &[f64], component: &ComponentSpec) -> Result<ResponseRecord> {
    if x.len() != component.variables.len() {
        return Err(Error::InvalidParameter(format!(
            "component {} expects {} variables, got {}",
            component.name,
            component.variables.len(),
            x.len()
        )));
    }
    for (v, &xi) in component.variables.iter().zip(x) {
        if !(xi >= v.lo && xi <= v.hi) {
            return Err(Error::InvalidParameter(format!(
                "{} = {xi} outside [{}, {}]",
                v.name, v.lo, v.hi
            )));
        }
    }
    let mut record = ResponseRecord::default();
    for (name, model) in &component.responses {
        record.insert(name.clone(), component.evaluate(model, x))?;
    }
    if let Some(curve) = component.synthetic_curve(x)? {
        record.insert(AVGSTIFF, avgstiff(&curve)?)?;
        if let Some(m) = record.get(MASS) {
            record.insert(SEA, sea(&curve, m)?)?;
        }
    }
    Ok(record)
}
