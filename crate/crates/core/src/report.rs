//! Pass/fail records shared by every verifier.
//!
//! A failed property is a normal outcome, recorded in the report with its
//! first counterexample; it is never an `Err`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamsRecord {
    pub d: u64,
    pub p: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CheckRange {
    pub s_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_max: Option<u32>,
}

/// The first witness against a property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub property: String,
    pub level: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_level: Option<u32>,
    pub at: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_at: Option<u64>,
    /// What was measured, rendered exactly (an integer or a fraction).
    pub observed: String,
    /// The threshold it had to meet.
    pub required: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub params: ParamsRecord,
    pub range: CheckRange,
    pub pass: bool,
    /// Number of elementary comparisons performed.
    pub checked: u64,
    pub first_violation: Option<Violation>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, params: ParamsRecord, range: CheckRange) -> Self {
        CheckReport {
            check: check.into(),
            params,
            range,
            pass: true,
            checked: 0,
            first_violation: None,
        }
    }

    /// Records one comparison; keeps only the first failure.
    pub fn record(&mut self, ok: bool, violation: impl FnOnce() -> Violation) {
        self.checked += 1;
        if !ok && self.pass {
            self.pass = false;
            self.first_violation = Some(violation());
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report is plain data")
    }
}
