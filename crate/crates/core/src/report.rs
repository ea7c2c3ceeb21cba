//! Schema-stable JSON reports: every verdict travels with its residual and
//! the tolerance it was judged against. Maps are ordered so reports are
//! byte-identical across runs with the same flags and seed.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub verdicts: BTreeMap<String, bool>,
    pub residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<serde_json::Value>,
}

impl Report {
    pub fn new(command: impl Into<String>, inputs_digest: String) -> Self {
        Report {
            command: command.into(),
            inputs_digest,
            verdicts: BTreeMap::new(),
            residuals: BTreeMap::new(),
            artifacts: None,
        }
    }

    /// Record a verdict together with the residual it was derived from and
    /// the tolerance it was compared against.
    pub fn verdict(&mut self, name: &str, pass: bool, residual: f64, tol: f64) -> &mut Self {
        self.verdicts.insert(name.to_string(), pass);
        self.residuals.insert(format!("{name}_residual"), residual);
        self.residuals.insert(format!("{name}_tolerance"), tol);
        self
    }

    pub fn residual(&mut self, name: &str, value: f64) -> &mut Self {
        self.residuals.insert(name.to_string(), value);
        self
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    /// Plain-text rendering; keeps every residual value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!("inputs:  {}\n", self.inputs_digest));
        for (name, pass) in &self.verdicts {
            out.push_str(&format!(
                "  [{}] {}\n",
                if *pass { "pass" } else { "FAIL" },
                name
            ));
        }
        for (name, value) in &self.residuals {
            out.push_str(&format!("  {name} = {value:.6e}\n"));
        }
        out
    }
}

/// Digest of the inputs a command consumed: the argv echo plus file bytes.
pub fn inputs_digest<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
