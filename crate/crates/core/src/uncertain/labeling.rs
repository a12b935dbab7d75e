//! Threshold labeling of response records into good / intermediate / poor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ResponseRecord;

pub const GOOD: &str = "g";
pub const INTERMEDIATE: &str = "m";
pub const POOR: &str = "p";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparison {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Gt => lhs > rhs,
            Comparison::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub response: String,
    pub op: Comparison,
    pub value: f64,
}

impl Threshold {
    pub fn new(response: &str, op: Comparison, value: f64) -> Self {
        Threshold {
            response: response.to_string(),
            op,
            value,
        }
    }

    fn eval(&self, record: &ResponseRecord) -> Result<bool> {
        let v = record.get(&self.response).ok_or_else(|| {
            Error::InvalidParameter(format!("record lacks response '{}'", self.response))
        })?;
        Ok(self.op.holds(v, self.value))
    }
}

/// 'g' when every good threshold holds, 'p' when any poor threshold holds,
/// 'm' otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCriteria")]
pub struct LabelCriteria {
    good: Vec<Threshold>,
    poor: Vec<Threshold>,
}

#[derive(Deserialize)]
struct RawCriteria {
    good: Vec<Threshold>,
    poor: Vec<Threshold>,
}

impl TryFrom<RawCriteria> for LabelCriteria {
    type Error = Error;

    fn try_from(raw: RawCriteria) -> Result<Self> {
        LabelCriteria::new(raw.good, raw.poor)
    }
}

/// Interval endpoint: value and whether it is included.
type Bound = (f64, bool);

fn intersect(lo: &mut Bound, hi: &mut Bound, t: &Threshold) {
    match t.op {
        Comparison::Lt | Comparison::Le => {
            let b = (t.value, t.op == Comparison::Le);
            if b.0 < hi.0 || (b.0 == hi.0 && !b.1) {
                *hi = b;
            }
        }
        Comparison::Gt | Comparison::Ge => {
            let b = (t.value, t.op == Comparison::Ge);
            if b.0 > lo.0 || (b.0 == lo.0 && !b.1) {
                *lo = b;
            }
        }
    }
}

fn non_empty(lo: Bound, hi: Bound) -> bool {
    lo.0 < hi.0 || (lo.0 == hi.0 && lo.1 && hi.1)
}

impl LabelCriteria {
    /// Validates that no record can satisfy the good conjunction and a poor
    /// threshold at once.
    pub fn new(good: Vec<Threshold>, poor: Vec<Threshold>) -> Result<Self> {
        if good.is_empty() {
            return Err(Error::InconsistentCriteria("no good thresholds".into()));
        }
        for t in good.iter().chain(&poor) {
            if !t.value.is_finite() {
                return Err(Error::InconsistentCriteria(format!(
                    "threshold on '{}' is not finite",
                    t.response
                )));
            }
        }
        for p in &poor {
            let mut lo: Bound = (f64::NEG_INFINITY, false);
            let mut hi: Bound = (f64::INFINITY, false);
            for g in good.iter().filter(|g| g.response == p.response) {
                intersect(&mut lo, &mut hi, g);
            }
            intersect(&mut lo, &mut hi, p);
            if non_empty(lo, hi) {
                return Err(Error::InconsistentCriteria(format!(
                    "poor threshold '{} {:?} {}' overlaps the good region",
                    p.response, p.op, p.value
                )));
            }
        }
        Ok(LabelCriteria { good, poor })
    }

    pub fn good(&self) -> &[Threshold] {
        &self.good
    }

    pub fn poor(&self) -> &[Threshold] {
        &self.poor
    }

    pub fn label(&self, record: &ResponseRecord) -> Result<&'static str> {
        let mut is_good = true;
        for t in &self.good {
            is_good &= t.eval(record)?;
        }
        let mut is_poor = false;
        for t in &self.poor {
            is_poor |= t.eval(record)?;
        }
        match (is_good, is_poor) {
            (true, true) => Err(Error::InconsistentCriteria(
                "record satisfies both good and poor thresholds".into(),
            )),
            (true, false) => Ok(GOOD),
            (false, true) => Ok(POOR),
            (false, false) => Ok(INTERMEDIATE),
        }
    }

    /// The system-level strategy: F_p < 800 kN, S_p < 220 mm, M < 27 kg for
    /// 'g'; F_p >= 800 kN or S_p > 260 mm or M > 28 kg for 'p'.
    pub fn system_level() -> Self {
        use Comparison::*;
        LabelCriteria::new(
            vec![
                Threshold::new("F_p", Lt, 800.0),
                Threshold::new("S_p", Lt, 220.0),
                Threshold::new("M", Lt, 27.0),
            ],
            vec![
                Threshold::new("F_p", Ge, 800.0),
                Threshold::new("S_p", Gt, 260.0),
                Threshold::new("M", Gt, 28.0),
            ],
        )
        .expect("valid built-in criteria")
    }

    /// Component criteria of the form SEA >= `sea_good`, M <= `mass_good` for
    /// 'g' and SEA < `sea_poor` or M > `mass_poor` for 'p'.
    pub fn sea_mass(sea_good: f64, mass_good: f64, sea_poor: f64, mass_poor: f64) -> Result<Self> {
        use Comparison::*;
        LabelCriteria::new(
            vec![
                Threshold::new("SEA", Ge, sea_good),
                Threshold::new("M", Le, mass_good),
            ],
            vec![
                Threshold::new("SEA", Lt, sea_poor),
                Threshold::new("M", Gt, mass_poor),
            ],
        )
    }
}

pub fn apply_labels(responses: &[ResponseRecord], criteria: &LabelCriteria) -> Result<Vec<String>> {
    responses
        .iter()
        .map(|r| criteria.label(r).map(str::to_string))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(pairs: &[(&str, f64)]) -> ResponseRecord {
        ResponseRecord::from_pairs(pairs.iter().map(|&(k, v)| (k.to_string(), v))).unwrap()
    }

    #[test]
    fn system_level_good() {
        let c = LabelCriteria::system_level();
        let r = record(&[("F_p", 700.0), ("S_p", 200.0), ("M", 26.0)]);
        assert_eq!(apply_labels(&[r], &c).unwrap(), vec!["g"]);
        let r = record(&[("F_p", 900.0), ("S_p", 200.0), ("M", 26.0)]);
        assert_eq!(c.label(&r).unwrap(), "p");
        let r = record(&[("F_p", 700.0), ("S_p", 240.0), ("M", 26.0)]);
        assert_eq!(c.label(&r).unwrap(), "m");
    }

    #[test]
    fn front_frame_criteria() {
        let c = LabelCriteria::sea_mass(20_500.0, 0.95, 19_500.0, 1.0).unwrap();
        assert_eq!(c.label(&record(&[("SEA", 21_000.0), ("M", 0.9)])).unwrap(), "g");
        assert_eq!(c.label(&record(&[("SEA", 20_000.0), ("M", 0.97)])).unwrap(), "m");
        assert_eq!(c.label(&record(&[("SEA", 19_000.0), ("M", 0.9)])).unwrap(), "p");
        assert_eq!(c.label(&record(&[("SEA", 25_000.0), ("M", 1.2)])).unwrap(), "p");
    }

    #[test]
    fn misordered_thresholds_rejected() {
        assert!(LabelCriteria::sea_mass(19_000.0, 0.95, 19_500.0, 1.0).is_err());
        use Comparison::*;
        // poor threshold on a response the good region leaves unbounded
        assert!(LabelCriteria::new(
            vec![Threshold::new("SEA", Ge, 1.0)],
            vec![Threshold::new("M", Gt, 1.0)]
        )
        .is_err());
        // touching but disjoint boundaries are fine
        assert!(LabelCriteria::new(
            vec![Threshold::new("F", Lt, 800.0)],
            vec![Threshold::new("F", Ge, 800.0)]
        )
        .is_ok());
        assert!(LabelCriteria::new(
            vec![Threshold::new("F", Le, 800.0)],
            vec![Threshold::new("F", Ge, 800.0)]
        )
        .is_err());
    }

    #[test]
    fn missing_response_is_an_error() {
        let c = LabelCriteria::system_level();
        assert!(c.label(&record(&[("F_p", 1.0)])).is_err());
    }

    #[test]
    fn criteria_json() {
        let text = r#"{"good":[{"response":"SEA","op":">=","value":2800}],
                       "poor":[{"response":"SEA","op":"<","value":2500}]}"#;
        let c: LabelCriteria = serde_json::from_str(text).unwrap();
        assert_eq!(c.good()[0].op, Comparison::Ge);
        let bad = r#"{"good":[{"response":"SEA","op":">=","value":2000}],
                      "poor":[{"response":"SEA","op":"<","value":2500}]}"#;
        assert!(serde_json::from_str::<LabelCriteria>(bad).is_err());
    }
}
