//! Core transducer data model: states, symbol classes, transitions, and
//! structural validation.
//!
//! A transducer here is the classic 7-tuple (Q, Σ, δ, ω, Γ, q0, F) with
//! Σ = Γ = all 256 byte values. Non-determinism is allowed: several
//! transitions may share the same source state and overlap on input
//! symbols. Output is attached per transition.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One element of the input/output alphabet. The alphabet is all 256 byte
/// values, matching the 256-entry per-edge match table of the overlay.
pub type Symbol = u8;

/// Index of a state, valid for `id < state_count` of its owning [`Fst`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Membership bitmap over the 256-symbol alphabet.
///
/// This is exactly the image of a PE's 256x1-bit match RAM: bit `s` is set
/// iff symbol `s` triggers the edge. A single-symbol edge is the one-hot
/// special case.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolClass {
    bits: [u64; 4],
}

impl SymbolClass {
    pub const EMPTY: SymbolClass = SymbolClass { bits: [0; 4] };
    pub const FULL: SymbolClass = SymbolClass { bits: [u64::MAX; 4] };

    pub fn singleton(sym: Symbol) -> Self {
        let mut c = Self::EMPTY;
        c.insert(sym);
        c
    }

    /// Inclusive range `lo..=hi`. An inverted range is empty.
    pub fn range(lo: Symbol, hi: Symbol) -> Self {
        let mut c = Self::EMPTY;
        if lo <= hi {
            for s in lo..=hi {
                c.insert(s);
            }
        }
        c
    }

    pub fn insert(&mut self, sym: Symbol) {
        self.bits[(sym >> 6) as usize] |= 1u64 << (sym & 63);
    }

    pub fn contains(&self, sym: Symbol) -> bool {
        self.bits[(sym >> 6) as usize] & (1u64 << (sym & 63)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union(mut self, other: SymbolClass) -> SymbolClass {
        for (a, b) in self.bits.iter_mut().zip(other.bits.iter()) {
            *a |= b;
        }
        self
    }

    /// Member symbols in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..=255u8).filter(move |&s| self.contains(s))
    }

    /// Bitmap as 32 bytes: byte `k` holds symbols `8k..8k+7`, LSB first.
    /// This is the wire layout of the match RAM in the image format.
    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, word) in self.bits.iter().enumerate() {
            out[i * 8..(i + 1) * 8].copy_from_slice(&word.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Self {
        let mut bits = [0u64; 4];
        for (i, word) in bits.iter_mut().enumerate() {
            *word = u64::from_le_bytes(bytes[i * 8..(i + 1) * 8].try_into().unwrap());
        }
        SymbolClass { bits }
    }
}

impl fmt::Debug for SymbolClass {
    /// Renders as a compact range list, e.g. `[a-c,x]` or `[0x00-0xff]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        let mut first = true;
        let mut s = 0u16;
        while s < 256 {
            if self.contains(s as u8) {
                let lo = s as u8;
                while s < 256 && self.contains(s as u8) {
                    s += 1;
                }
                let hi = (s - 1) as u8;
                if !first {
                    write!(f, ",")?;
                }
                first = false;
                if lo == hi {
                    write!(f, "{}", render_symbol(lo))?;
                } else {
                    write!(f, "{}-{}", render_symbol(lo), render_symbol(hi))?;
                }
            } else {
                s += 1;
            }
        }
        write!(f, "]")
    }
}

fn render_symbol(s: Symbol) -> String {
    if (0x21..=0x7e).contains(&s) {
        (s as char).to_string()
    } else {
        format!("0x{s:02x}")
    }
}

/// Input side of a transition: consumes a matching symbol, or nothing (ε).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputLabel {
    Epsilon,
    Class(SymbolClass),
}

impl InputLabel {
    pub fn is_epsilon(&self) -> bool {
        matches!(self, InputLabel::Epsilon)
    }
}

/// Output side of a transition: emits one byte, or nothing (ε).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputLabel {
    Epsilon,
    Byte(Symbol),
}

impl OutputLabel {
    pub fn is_epsilon(&self) -> bool {
        matches!(self, OutputLabel::Epsilon)
    }
}

/// One edge of the transducer graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: StateId,
    pub dst: StateId,
    pub input: InputLabel,
    pub output: OutputLabel,
}

/// The transducer: Q is `0..state_count`, q0 is `start`, F is `accepting`.
///
/// Fields are public and unchecked so that malformed machines can be built
/// and fed to [`validate`]; everything downstream requires a machine that
/// validates without errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fst {
    pub state_count: u32,
    pub transitions: Vec<Transition>,
    pub start: StateId,
    pub accepting: BTreeSet<StateId>,
}

impl Fst {
    pub fn new(
        state_count: u32,
        start: StateId,
        accepting: impl IntoIterator<Item = StateId>,
        transitions: Vec<Transition>,
    ) -> Self {
        Fst {
            state_count,
            transitions,
            start,
            accepting: accepting.into_iter().collect(),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_count).map(StateId)
    }

    pub fn transitions_from(&self, state: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.src == state)
    }

    /// True iff every transition consumes exactly one input symbol and emits
    /// exactly one output byte. The overlay only accepts such machines.
    pub fn is_length_preserving(&self) -> bool {
        self.transitions
            .iter()
            .all(|t| !t.input.is_epsilon() && !t.output.is_epsilon())
    }

    pub fn has_epsilon_inputs(&self) -> bool {
        self.transitions.iter().any(|t| t.input.is_epsilon())
    }

    /// Per-state reachability from `start`, following transitions forwards
    /// (ε included). Out-of-range endpoints are ignored.
    pub fn reachable_states(&self) -> Vec<bool> {
        let n = self.state_count as usize;
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        if self.start.index() < n {
            seen[self.start.index()] = true;
            stack.push(self.start);
        }
        while let Some(q) = stack.pop() {
            for t in self.transitions.iter().filter(|t| t.src == q) {
                if t.dst.index() < n && !seen[t.dst.index()] {
                    seen[t.dst.index()] = true;
                    stack.push(t.dst);
                }
            }
        }
        seen
    }

    /// The machine restricted to states reachable from `start`, with states
    /// renumbered compactly in ascending original order. Transition order is
    /// preserved; duplicates are dropped.
    pub fn reachable_restriction(&self) -> Fst {
        let reach = self.reachable_states();
        let mut remap = vec![u32::MAX; self.state_count as usize];
        let mut next = 0u32;
        for (i, &r) in reach.iter().enumerate() {
            if r {
                remap[i] = next;
                next += 1;
            }
        }
        let mut seen = BTreeSet::new();
        let mut transitions = Vec::new();
        for t in &self.transitions {
            if t.src.index() < reach.len() && reach[t.src.index()] {
                let nt = Transition {
                    src: StateId(remap[t.src.index()]),
                    dst: StateId(remap[t.dst.index()]),
                    input: t.input,
                    output: t.output,
                };
                if seen.insert(transition_key(&nt)) {
                    transitions.push(nt);
                }
            }
        }
        let accepting = self
            .accepting
            .iter()
            .filter(|q| q.index() < reach.len() && reach[q.index()])
            .map(|q| StateId(remap[q.index()]))
            .collect();
        Fst {
            state_count: next.max(1),
            transitions,
            start: StateId(if self.start.index() < remap.len() {
                remap[self.start.index()]
            } else {
                0
            }),
            accepting,
        }
    }

    /// Checksum of the machine's structure, used to stamp compiled images.
    /// Computed over the reachable restriction with transitions sorted, so
    /// machines differing only in unreachable clutter or edge order collide
    /// on purpose.
    pub fn digest(&self) -> u32 {
        let canon = self.reachable_restriction();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&canon.state_count.to_le_bytes());
        bytes.extend_from_slice(&canon.start.0.to_le_bytes());
        for q in &canon.accepting {
            bytes.extend_from_slice(&q.0.to_le_bytes());
        }
        let mut keys: Vec<_> = canon.transitions.iter().map(transition_key).collect();
        keys.sort_unstable();
        for k in keys {
            bytes.extend_from_slice(&k);
        }
        crate::crc32::checksum(&bytes)
    }
}

fn transition_key(t: &Transition) -> [u8; 43] {
    let mut k = [0u8; 43];
    k[0..4].copy_from_slice(&t.src.0.to_le_bytes());
    k[4..8].copy_from_slice(&t.dst.0.to_le_bytes());
    match t.input {
        InputLabel::Epsilon => k[8] = 0,
        InputLabel::Class(c) => {
            k[8] = 1;
            k[9..41].copy_from_slice(&c.to_bytes());
        }
    }
    match t.output {
        OutputLabel::Epsilon => k[41] = 0,
        OutputLabel::Byte(b) => {
            k[41] = 1;
            k[42] = b;
        }
    }
    k
}

/// Severity of a [`Diagnostic`]. Errors make a machine unusable; warnings
/// point at suspicious but legal structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

/// One finding from [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Diagnostic { severity: Severity::Error, message }
    }

    fn warning(message: String) -> Self {
        Diagnostic { severity: Severity::Warning, message }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "error: {}", self.message),
            Severity::Warning => write!(f, "warning: {}", self.message),
        }
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Structural validation. Returns an empty list iff all invariants hold and
/// every state is reachable from the start state.
///
/// Errors: out-of-range state references, empty symbol classes (dead edges),
/// and ε-input transitions that emit a byte (those have no place in the
/// one-in-one-out overlay model and are rejected everywhere).
/// Warnings: states unreachable from the start.
pub fn validate(fst: &Fst) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let n = fst.state_count;
    if n == 0 {
        diags.push(Diagnostic::error("state count must be positive".into()));
    }
    if fst.start.0 >= n {
        diags.push(Diagnostic::error(format!(
            "start state {} out of range (state count {n})",
            fst.start
        )));
    }
    for q in &fst.accepting {
        if q.0 >= n {
            diags.push(Diagnostic::error(format!(
                "accepting state {q} out of range (state count {n})"
            )));
        }
    }
    for (i, t) in fst.transitions.iter().enumerate() {
        if t.src.0 >= n {
            diags.push(Diagnostic::error(format!(
                "transition {i}: source state {} out of range (state count {n})",
                t.src
            )));
        }
        if t.dst.0 >= n {
            diags.push(Diagnostic::error(format!(
                "transition {i}: destination state {} out of range (state count {n})",
                t.dst
            )));
        }
        match t.input {
            InputLabel::Class(c) if c.is_empty() => {
                diags.push(Diagnostic::error(format!(
                    "transition {i}: empty symbol class (dead edge)"
                )));
            }
            InputLabel::Epsilon if !t.output.is_epsilon() => {
                diags.push(Diagnostic::error(format!(
                    "transition {i}: ε-input transition with a byte output is unsupported"
                )));
            }
            _ => {}
        }
    }
    if !has_errors(&diags) {
        let reach = fst.reachable_states();
        for (i, r) in reach.iter().enumerate() {
            if !r {
                diags.push(Diagnostic::warning(format!(
                    "state {i} is unreachable from the start state"
                )));
            }
        }
    }
    diags
}
