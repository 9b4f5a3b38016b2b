//! Reference transduction interpreter.
//!
//! This is the semantic ground truth the overlay simulator is verified
//! against. It walks every non-deterministic path directly on the
//! transducer graph, with none of the overlay's placement or timing
//! machinery, and reports the canonical set of outputs per window.

use std::collections::BTreeSet;

use crate::epsilon::closure_of;
use crate::fst::{Fst, InputLabel, OutputLabel, StateId};

/// Result of evaluating one fixed-length window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub window_index: usize,
    pub outcome: WindowOutcome,
}

/// Outcome of a window: either the canonical output set of all accepting
/// paths, or no accepting path at all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowOutcome {
    /// Outputs are lexicographically sorted and duplicate-free.
    Matched(Vec<Vec<u8>>),
    Discarded,
}

impl WindowOutcome {
    pub fn is_matched(&self) -> bool {
        matches!(self, WindowOutcome::Matched(_))
    }

    pub fn outputs(&self) -> &[Vec<u8>] {
        match self {
            WindowOutcome::Matched(outs) => outs,
            WindowOutcome::Discarded => &[],
        }
    }
}

/// Evaluates a single window of input from the start state, following every
/// non-deterministic path of exactly `window.len()` consuming steps
/// (ε-transitions move for free via closure). The result has window index 0;
/// [`oracle_stream`] renumbers.
///
/// The caller is responsible for only passing machines that validate without
/// errors; in particular ε-input transitions always carry ε outputs, so
/// closure never contributes output bytes.
pub fn oracle_window(fst: &Fst, window: &[u8]) -> OracleResult {
    // frontier of (state, output-so-far), deduplicated each step
    let mut frontier: BTreeSet<(StateId, Vec<u8>)> = BTreeSet::new();
    for q in closure_of(fst, fst.start) {
        frontier.insert((q, Vec::new()));
    }
    for &sym in window {
        let mut next: BTreeSet<(StateId, Vec<u8>)> = BTreeSet::new();
        for (q, out) in &frontier {
            for t in fst.transitions.iter().filter(|t| t.src == *q) {
                let InputLabel::Class(class) = t.input else { continue };
                if !class.contains(sym) {
                    continue;
                }
                let mut out2 = out.clone();
                if let OutputLabel::Byte(b) = t.output {
                    out2.push(b);
                }
                for p in closure_of(fst, t.dst) {
                    next.insert((p, out2.clone()));
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    let outputs: BTreeSet<Vec<u8>> = frontier
        .into_iter()
        .filter(|(q, _)| fst.accepting.contains(q))
        .map(|(_, out)| out)
        .collect();
    let outcome = if outputs.is_empty() {
        WindowOutcome::Discarded
    } else {
        WindowOutcome::Matched(outputs.into_iter().collect())
    };
    OracleResult { window_index: 0, outcome }
}

/// Splits `input` into consecutive windows of length `n` (a trailing
/// remainder shorter than `n` becomes a final short window) and evaluates
/// each one independently from the start state.
pub fn oracle_stream(fst: &Fst, input: &[u8], n: usize) -> Vec<OracleResult> {
    assert!(n >= 1, "window length must be at least 1");
    split_windows(input, n)
        .enumerate()
        .map(|(window_index, w)| OracleResult { window_index, ..oracle_window(fst, w) })
        .collect()
}

/// Window iterator shared with the overlay simulator: full `n`-byte chunks
/// plus a shorter trailing remainder, never an empty window.
pub fn split_windows(input: &[u8], n: usize) -> impl Iterator<Item = &[u8]> {
    input.chunks(n.max(1))
}
