//! Run reports: per-window outcomes plus totals, rendered as a text table
//! or a single JSON document.

use serde::Serialize;

use nfst::sim::{SubSequenceOutcome, SubSequenceResult};

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub m: usize,
    pub total_cycles: u64,
    pub windows: Vec<WindowReport>,
}

#[derive(Debug, Serialize)]
pub struct WindowReport {
    pub index: usize,
    pub outcome: &'static str,
    /// Hex-escaped output strings, canonical order.
    pub outputs: Vec<String>,
    pub cycles: u64,
}

impl RunReport {
    pub fn new(n: usize, m: usize, results: &[SubSequenceResult], total_cycles: u64) -> RunReport {
        RunReport {
            n,
            m,
            total_cycles,
            windows: results
                .iter()
                .map(|r| WindowReport {
                    index: r.window_index,
                    outcome: match r.outcome {
                        SubSequenceOutcome::Matched { .. } => "matched",
                        SubSequenceOutcome::Discarded => "discarded",
                    },
                    outputs: r.outcome.outputs().iter().map(|o| escape_bytes(o)).collect(),
                    cycles: r.cycles,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("window  outcome    cycles  outputs\n");
        for w in &self.windows {
            let outputs = if w.outputs.is_empty() { "-".to_string() } else { w.outputs.join(",") };
            out.push_str(&format!(
                "{:<6}  {:<9}  {:>6}  {}\n",
                w.index, w.outcome, w.cycles, outputs
            ));
        }
        out.push_str(&format!("total cycles: {} (n={}, m={})\n", self.total_cycles, self.n, self.m));
        out
    }
}

/// Escapes arbitrary bytes for display: visible ASCII stays literal,
/// everything else (including space, comma, and backslash) becomes `\xNN`,
/// so escaped strings are unambiguous in comma-joined lists.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len());
    for &b in bytes {
        match b {
            0x21..=0x7e if b != b'\\' && b != b',' => out.push(b as char),
            _ => out.push_str(&format!("\\x{b:02x}")),
        }
    }
    out
}
