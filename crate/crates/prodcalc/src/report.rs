//! Verification report records and their CSV/JSON serializations.
//!
//! Every harness in the toolkit returns one `VerificationReport` per named
//! check. The `pass` flag is decided solely by the recorded tolerance fields,
//! so a report can be re-audited from its serialized form.

use serde::{Deserialize, Serialize};

/// Outcome of a single named check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Identifier of the check, e.g. `"integral-estimate-1"`.
    pub name: String,
    /// Short tag for the identity or inequality exercised, e.g. `"tech-1"`.
    pub anchor: String,
    /// Human-readable parameter string.
    pub params: String,
    /// Principal measured constant or residual.
    pub measured_constant: f64,
    /// The same constant re-measured on a refined grid/sweep, when the check
    /// includes a refinement-stability guard.
    pub refined_constant: Option<f64>,
    /// Tolerance the pass flag was decided against.
    pub tolerance: f64,
    /// Whether the check passed.
    pub pass: bool,
    /// Informational checks report their measurements but never gate a run
    /// (used when a theorem hypothesis is not certified, or the model is
    /// outside the claimed regime).
    pub informational: bool,
    /// Extra named measurements.
    pub details: Vec<(String, f64)>,
    /// Free-form flags: regime notes, surrogate markers, skipped-ratio counts.
    pub notes: Vec<String>,
    /// Wall-clock runtime of the check in seconds, when measured.
    pub runtime_s: f64,
}

impl VerificationReport {
    pub fn new(name: &str, anchor: &str, params: String) -> Self {
        VerificationReport {
            name: name.to_string(),
            anchor: anchor.to_string(),
            params,
            measured_constant: f64::NAN,
            refined_constant: None,
            tolerance: f64::NAN,
            pass: false,
            informational: false,
            details: Vec::new(),
            notes: Vec::new(),
            runtime_s: 0.0,
        }
    }

    pub fn detail(&mut self, key: &str, value: f64) -> &mut Self {
        self.details.push((key.to_string(), value));
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    /// `true` when the report should count against the run's exit status.
    pub fn gating_failure(&self) -> bool {
        !self.pass && !self.informational
    }

    /// CSV header matching [`Self::csv_row`].
    pub fn csv_header() -> &'static str {
        "name,anchor,params,measured_constant,refined_constant,tolerance,pass,informational,details,notes"
    }

    /// One CSV row per check. Detail pairs are `key=value` joined by `;`.
    /// Runtimes are deliberately not serialized: report files must be
    /// byte-identical across runs of the same config and seed.
    pub fn csv_row(&self) -> String {
        let details = self
            .details
            .iter()
            .map(|(k, v)| format!("{k}={v:.6e}"))
            .collect::<Vec<_>>()
            .join(";");
        let notes = self.notes.join(";");
        let refined = self
            .refined_constant
            .map(|r| format!("{r:.6e}"))
            .unwrap_or_default();
        format!(
            "{},{},{},{:.6e},{},{:.3e},{},{},{},{}",
            csv_escape(&self.name),
            csv_escape(&self.anchor),
            csv_escape(&self.params),
            self.measured_constant,
            refined,
            self.tolerance,
            self.pass,
            self.informational,
            csv_escape(&details),
            csv_escape(&notes),
        )
    }

    /// JSON value with the same deterministic field set as the CSV row.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "anchor": self.anchor,
            "params": self.params,
            "measured_constant": self.measured_constant,
            "refined_constant": self.refined_constant,
            "tolerance": self.tolerance,
            "pass": self.pass,
            "informational": self.informational,
            "details": self.details,
            "notes": self.notes,
        })
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Render a batch of reports as a CSV document.
pub fn to_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from(VerificationReport::csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_shape() {
        let mut r = VerificationReport::new("demo", "tech-1", "sigma=(3,3)".into());
        r.measured_constant = 1.25;
        r.tolerance = 0.1;
        r.pass = true;
        r.detail("ratio", 1.25).note("stable");
        let csv = to_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), VerificationReport::csv_header());
        let row = lines.next().unwrap();
        assert!(row.starts_with("demo,tech-1,"));
        assert!(row.contains("ratio=1.25"));
    }

    #[test]
    fn fields_with_commas_are_quoted() {
        let r = VerificationReport::new("x", "y", "p=(1,2)".into());
        assert!(r.csv_row().contains("\"p=(1,2)\""));
    }
}
