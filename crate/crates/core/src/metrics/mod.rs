//! Crashworthiness response metrics computed from sampled curves.
//!
//! Units: deflection in m, force in kN, intrusion in mm, mass in kg, energy
//! in J, time in s. Average stiffness comes out in kN/m and SEA in J/kg
//! (kN * m = kJ, scaled by 1e3).

mod surrogate;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use surrogate::{
    surrogate_respond, ComponentSpec, CurveTemplate, ResponseModel, SurrogateSpec, VariableSpec,
};

/// Well-known response names.
pub const PEAK_FORCE: &str = "F_p";
pub const INTRUSION: &str = "S_p";
pub const MASS: &str = "M";
pub const SEA: &str = "SEA";
pub const AVGSTIFF: &str = "avgstiff";

#[derive(Debug, Clone, PartialEq)]
pub struct ForceDeflectionCurve {
    deflection: Vec<f64>,
    force: Vec<f64>,
}

impl ForceDeflectionCurve {
    /// `deflection` (m) must start at 0 and increase strictly; `force` in kN.
    pub fn new(deflection: Vec<f64>, force: Vec<f64>) -> Result<Self> {
        if deflection.len() != force.len() {
            return Err(Error::InvalidParameter(
                "deflection and force lengths differ".into(),
            ));
        }
        if deflection.len() < 2 {
            return Err(Error::DegenerateCurve("need at least two samples".into()));
        }
        if deflection[0] != 0.0 {
            return Err(Error::DegenerateCurve("deflection must start at 0".into()));
        }
        if deflection.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::DegenerateCurve(
                "deflection must increase strictly".into(),
            ));
        }
        if deflection.iter().chain(&force).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateCurve("non-finite sample".into()));
        }
        Ok(ForceDeflectionCurve { deflection, force })
    }

    pub fn deflection(&self) -> &[f64] {
        &self.deflection
    }

    pub fn force(&self) -> &[f64] {
        &self.force
    }

    pub fn final_deflection(&self) -> f64 {
        *self.deflection.last().expect("validated non-empty")
    }

    /// Absorbed energy in kJ (trapezoidal rule).
    pub fn energy(&self) -> f64 {
        trapezoid(&self.deflection, &self.force)
    }

    /// Reads a `u_m,F_kN` CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cols = read_columns(path.as_ref(), &["u_m", "F_kN"])?;
        let mut it = cols.into_iter();
        let u = it.next().unwrap_or_default();
        let f = it.next().unwrap_or_default();
        ForceDeflectionCurve::new(u, f)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Four firewall marker intrusion signals on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrusionHistories {
    time: Vec<f64>,
    signals: [Vec<f64>; 4],
}

impl IntrusionHistories {
    pub fn new(time: Vec<f64>, signals: [Vec<f64>; 4]) -> Result<Self> {
        if time.is_empty() {
            return Err(Error::InvalidParameter("empty time grid".into()));
        }
        if time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "time grid must increase strictly".into(),
            ));
        }
        if signals.iter().any(|s| s.len() != time.len()) {
            return Err(Error::InvalidParameter(
                "every signal must match the time grid".into(),
            ));
        }
        Ok(IntrusionHistories { time, signals })
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn signals(&self) -> &[Vec<f64>; 4] {
        &self.signals
    }

    /// Reads a `t_s,s1_mm,s2_mm,s3_mm,s4_mm` CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cols = read_columns(path.as_ref(), &["t_s", "s1_mm", "s2_mm", "s3_mm", "s4_mm"])?;
        let mut it = cols.into_iter();
        let t = it.next().unwrap_or_default();
        let s: Vec<Vec<f64>> = it.collect();
        let signals: [Vec<f64>; 4] = s
            .try_into()
            .map_err(|_| Error::Format("expected four signals".into()))?;
        IntrusionHistories::new(t, signals)
    }
}

fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let source = path.display().to_string();
    let ingest = |row: usize, column: &str, message: String| Error::Ingestion {
        path: source.clone(),
        row,
        column: column.to_string(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| ingest(1, "-", e.to_string()))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| ingest(1, n, "missing column".into()))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| ingest(row, "-", e.to_string()))?;
        for (c, (&j, name)) in idx.iter().zip(names).enumerate() {
            let field = rec.get(j).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| ingest(row, name, format!("'{field}' is not a number")))?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Mean crush force over final deflection: (integral of F du) / d^2, kN/m.
pub fn avgstiff(curve: &ForceDeflectionCurve) -> Result<f64> {
    let d = curve.final_deflection();
    if !(d > 0.0) {
        return Err(Error::DegenerateCurve("final deflection is zero".into()));
    }
    Ok(curve.energy() / (d * d))
}

pub fn peak_force(force: &[f64]) -> Result<f64> {
    force
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::InvalidParameter("empty force history".into()))
}

/// Largest value over time of the four-marker average intrusion.
pub fn peak_intrusion(h: &IntrusionHistories) -> f64 {
    (0..h.time.len())
        .map(|k| h.signals.iter().map(|s| s[k]).sum::<f64>() / 4.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn total_mass(masses: &[f64]) -> Result<f64> {
    if masses.is_empty() {
        return Err(Error::InvalidParameter("no component masses".into()));
    }
    Ok(masses.iter().sum())
}

/// Specific energy absorption in J/kg.
pub fn sea(curve: &ForceDeflectionCurve, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    Ok(curve.energy() * 1e3 / mass)
}

/// Named objective values for one design.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResponseRecord {
    values: BTreeMap<String, f64>,
}

impl ResponseRecord {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut r = ResponseRecord::default();
        for (k, v) in pairs {
            r.insert(k, v)?;
        }
        Ok(r)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("response {name} is not finite")));
        }
        if name == MASS && !(value > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {value}")));
        }
        self.values.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
