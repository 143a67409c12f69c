//! Named pass/fail records with measured slack, shared by the witness,
//! output-condition and verification code.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Signed slack: nonnegative when the property holds exactly.
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, slack: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            slack,
            tolerance,
            passed: slack >= -tolerance,
        }
    }

    /// `|measured - expected| <= tolerance`, slack `-|measured - expected|`.
    pub fn equal(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name, -(measured - expected).abs(), tolerance)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
