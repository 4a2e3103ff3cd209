use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::probe::RankOneProbe;

/// Where the worst value of a check was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    Probe {
        f: Vec<Vec<f64>>,
        xi: Vec<f64>,
        eta: Vec<f64>,
    },
    Grid {
        point: Vec<f64>,
    },
    Nowhere,
}

impl Location {
    pub fn probe(f: &crate::tensor::SquareMatrix, xi: &crate::tensor::Vector, eta: &crate::tensor::Vector) -> Self {
        Location::Probe { f: f.to_rows(), xi: xi.as_slice().to_vec(), eta: eta.as_slice().to_vec() }
    }

    pub fn from_probe(p: &RankOneProbe) -> Self {
        Self::probe(p.f(), p.xi(), p.eta())
    }

    pub fn grid(point: &[f64]) -> Self {
        Location::Grid { point: point.to_vec() }
    }

    /// First coordinate of a grid location.
    pub fn grid_coordinate(&self) -> Option<f64> {
        match self {
            Location::Grid { point } => point.first().copied(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub check: String,
    pub satisfied: bool,
    pub worst_value: f64,
    pub worst_location: Location,
    pub tolerance: f64,
    pub evaluated: usize,
    /// Points where the subject could not be evaluated.
    pub failures: usize,
}

impl CheckVerdict {
    /// A verdict for "value ≥ −tolerance" on the worst (smallest) value.
    pub fn lower_bound(check: impl Into<String>, worst_value: f64, worst_location: Location, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            satisfied: worst_value >= -tolerance,
            worst_value,
            worst_location,
            tolerance,
            evaluated: 0,
            failures: 0,
        }
    }

    pub fn with_counts(mut self, evaluated: usize, failures: usize) -> Self {
        self.evaluated = evaluated;
        self.failures = failures;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub subject: String,
    pub seed: Option<u64>,
    pub verdicts: Vec<CheckVerdict>,
    pub metrics: BTreeMap<String, f64>,
}

impl ConvexityReport {
    pub fn new(subject: impl Into<String>) -> Self {
        Self { subject: subject.into(), ..Self::default() }
    }

    pub fn satisfied(&self) -> bool {
        self.verdicts.iter().all(|v| v.satisfied)
    }

    pub fn verdict(&self, check: &str) -> Option<&CheckVerdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub(crate) fn push(&mut self, v: CheckVerdict) {
        self.verdicts.push(v);
    }

    pub(crate) fn set_metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }
}
