//! Verification reports: named checks with measured values and tolerances, serialized
//! deterministically.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One verified property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// Which statement the check exercises, in words.
    pub anchor: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Sensitivities, reference values and known discrepancies.
    pub notes: String,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(id: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
            notes: String::new(),
        }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(id: &str, anchor: &str, measured: f64, threshold: f64) -> Self {
        Self { pass: measured >= threshold, ..Self::at_most(id, anchor, measured, threshold) }
    }

    /// A check whose pass flag is decided by the caller.
    pub fn flagged(id: &str, anchor: &str, measured: f64, tolerance: f64, pass: bool) -> Self {
        Self { pass, ..Self::at_most(id, anchor, measured, tolerance) }
    }

    /// A check that could not be evaluated.
    pub fn errored(id: &str, anchor: &str, err: &Error) -> Self {
        Self { pass: false, measured: f64::NAN, tolerance: f64::NAN, notes: format!("error: {err}"), ..Self::at_most(id, anchor, 0.0, 0.0) }
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    /// `PASS`/`FAIL` followed by the id and numbers.
    pub fn line(&self) -> String {
        format!(
            "{} {} measured={:e} tolerance={:e}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.measured,
            self.tolerance,
            if self.notes.is_empty() { String::new() } else { format!(" ({})", self.notes) }
        )
    }
}

/// Checks ordered by id; ids are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(mut checks: Vec<Check>) -> Result<Self> {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let mut seen = BTreeSet::new();
        if let Some(dup) = checks.iter().find(|c| !seen.insert(c.id.as_str())) {
            return Err(Error::InvalidArgument(format!("duplicate check id '{}'", dup.id)));
        }
        Ok(Self { checks })
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Pretty JSON; non-finite numbers become `null`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn summary(&self) -> String {
        self.checks.iter().map(|c| c.line() + "\n").collect()
    }
}
