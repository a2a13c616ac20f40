//! Machine-readable benchmark reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rate::SlopeFit;

/// One checked claim: `pass` records whether `observed` met `expected`
/// within `tolerance` under the comparison described by `name`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Assertion {
    /// `observed <= expected + tolerance`
    pub fn at_most(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            observed,
            tolerance,
            pass: observed <= expected + tolerance,
            detail: None,
        }
    }

    /// `|observed - expected| <= tolerance`
    pub fn near(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            observed,
            tolerance,
            pass: (observed - expected).abs() <= tolerance,
            detail: None,
        }
    }

    /// `observed >= expected - tolerance`
    pub fn at_least(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            observed,
            tolerance,
            pass: observed >= expected - tolerance,
            detail: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            expected: 1.0,
            observed: if ok { 1.0 } else { 0.0 },
            tolerance: 0.0,
            pass: ok,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub assertions: Vec<Assertion>,
    #[serde(default)]
    pub fits: BTreeMap<String, SlopeFit>,
    #[serde(default)]
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Self {
            suite: suite.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn failures(&self) -> Vec<&Assertion> {
        self.assertions.iter().filter(|a| !a.pass).collect()
    }

    pub fn merge(&mut self, other: Report) {
        self.assertions.extend(other.assertions);
        self.fits.extend(other.fits);
        self.notes.extend(other.notes);
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["passed"] = serde_json::Value::Bool(self.passed());
        serde_json::to_string_pretty(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes() {
        let r = Report::new("empty");
        assert!(r.passed());
        let s = r.to_json().unwrap();
        assert!(s.contains("\"passed\": true"));
    }

    #[test]
    fn comparisons() {
        assert!(Assertion::at_most("a", 1.0, 1.0, 0.0).pass);
        assert!(!Assertion::at_most("a", 1.1, 1.0, 0.05).pass);
        assert!(Assertion::near("b", 0.55, 0.5, 0.1).pass);
        assert!(!Assertion::at_least("c", 0.0, 1.0, 0.5).pass);
    }
}
