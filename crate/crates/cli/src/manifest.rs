use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Everything needed to re-run a command and check that it gives the same
/// verdict and the same numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command line after the program name, without output-format flags.
    pub args: Vec<String>,
    pub parameters: Map<String, Value>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub verdict: String,
    pub values: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn now() -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }

    /// Reads either a bare manifest or any JSON object with a `manifest` key.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: Value = serde_json::from_str(text)?;
        let inner = match value.get("manifest") {
            Some(m) => m.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("not a run manifest: {e}")))
    }
}

/// Drops `--out <path>`, `--json` and `--csv`, which change where and how the
/// result is printed but not the result.
pub fn replayable_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip_next = false;
    for a in args {
        if skip_next {
            skip_next = false;
            continue;
        }
        match a.as_str() {
            "--out" => skip_next = true,
            "--json" | "--csv" => {}
            s if s.starts_with("--out=") => {}
            _ => out.push(a.clone()),
        }
    }
    out
}

/// Keys whose values differ between `stored` and `replayed`, compared bit
/// for bit.
pub fn value_mismatches(stored: &BTreeMap<String, f64>, replayed: &BTreeMap<String, f64>) -> Vec<String> {
    let mut keys: Vec<&String> = stored.keys().chain(replayed.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter(|k| match (stored.get(*k), replayed.get(*k)) {
            (Some(a), Some(b)) => a.to_bits() != b.to_bits(),
            _ => true,
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_output_flags() {
        let args: Vec<String> = ["scan", "ihat", "--out", "x.json", "--json", "--seed", "3", "--out=y", "--csv"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(replayable_args(&args), vec!["scan", "ihat", "--seed", "3"]);
    }

    #[test]
    fn mismatches_are_bitwise() {
        let a = BTreeMap::from([("x".to_string(), 0.1 + 0.2), ("y".to_string(), 1.0)]);
        let mut b = a.clone();
        assert!(value_mismatches(&a, &b).is_empty());
        b.insert("x".into(), 0.3);
        b.insert("z".into(), 0.0);
        assert_eq!(value_mismatches(&a, &b), vec!["x", "z"]);
    }
}
