//! Three-valued numerical conclusions with attached evidence.
//!
//! Truncated scans can never *prove* a statement about all indices, so every
//! numeric conclusion in this crate is one of `Bounded`, `Unbounded`, or
//! `Inconclusive`, together with the statistics that produced it.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictValue {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl std::fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictValue::Bounded => "Bounded",
            VerdictValue::Unbounded => "Unbounded",
            VerdictValue::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Supporting material for a verdict: a short human-readable summary plus
/// named statistics (sorted map, so serialized reports are reproducible).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub summary: String,
    pub stats: BTreeMap<String, f64>,
}

impl Evidence {
    pub fn new(summary: impl Into<String>) -> Evidence {
        let summary = summary.into();
        assert!(!summary.is_empty(), "evidence summary must be nonempty");
        Evidence {
            summary,
            stats: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Evidence {
        self.stats.insert(key.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict3 {
    pub value: VerdictValue,
    pub evidence: Evidence,
}

impl Verdict3 {
    pub fn new(value: VerdictValue, evidence: Evidence) -> Verdict3 {
        Verdict3 { value, evidence }
    }

    pub fn is(&self, v: VerdictValue) -> bool {
        self.value == v
    }
}
