//! Overlay-vs-reference equivalence checking.
//!
//! The reference interpreter and the compiled overlay must report the same
//! per-window output sets on every input. This module runs both sides and
//! reports the first disagreement, which is the core of the `verify`
//! command and the equivalence property suite.

use std::fmt;

use thiserror::Error;

use crate::fst::Fst;
use crate::oracle::{oracle_stream, WindowOutcome};
use crate::overlay::OverlayImage;
use crate::sim::{run_stream, OutputPolicy, StreamError, SubSequenceOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyFailure {
    #[error("{0}")]
    Mismatch(Box<Mismatch>),
    #[error("engine error: {0}")]
    Engine(#[from] StreamError),
}

/// A window where the overlay and the reference disagreed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub window_index: usize,
    pub window: Vec<u8>,
    /// `None` means discarded.
    pub expected: Option<Vec<Vec<u8>>>,
    pub actual: Option<Vec<Vec<u8>>>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "window {} ({}): reference {} but overlay {}",
            self.window_index,
            hex(&self.window),
            render(&self.expected),
            render(&self.actual),
        )
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn render(side: &Option<Vec<Vec<u8>>>) -> String {
    match side {
        None => "discarded".to_string(),
        Some(outs) => {
            let inner: Vec<String> = outs.iter().map(|o| hex(o)).collect();
            format!("matched {{{}}}", inner.join(","))
        }
    }
}

/// Runs `input` through both the reference interpreter on `fst` and the
/// simulator on `image`, window length `n`, and demands identical
/// per-window output sets.
pub fn check_stream(
    fst: &Fst,
    image: &OverlayImage,
    input: &[u8],
    n: usize,
) -> Result<(), VerifyFailure> {
    let reference = oracle_stream(fst, input, n);
    let (overlay, _) = run_stream(image, input, n, OutputPolicy::All)?;
    debug_assert_eq!(reference.len(), overlay.len());
    for (r, o) in reference.iter().zip(overlay.iter()) {
        let expected = match &r.outcome {
            WindowOutcome::Matched(outs) => Some(outs.clone()),
            WindowOutcome::Discarded => None,
        };
        let actual = match &o.outcome {
            SubSequenceOutcome::Matched { outputs, .. } => Some(outputs.clone()),
            SubSequenceOutcome::Discarded => None,
        };
        if expected != actual {
            let start = r.window_index * n;
            let window = input[start..(start + n).min(input.len())].to_vec();
            return Err(VerifyFailure::Mismatch(Box::new(Mismatch {
                window_index: r.window_index,
                window,
                expected,
                actual,
            })));
        }
    }
    Ok(())
}
