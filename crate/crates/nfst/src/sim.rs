//! Cycle-level engine for the PE array.
//!
//! Streams one sub-sequence (window) at a time: every consumed symbol costs
//! two clocks (match + enable propagation), activations are logged to a
//! bounded vector, and a report-PE match at the final position flushes the
//! vector through the FIFO to the transduction RAM. Cycle accounting per
//! window is exactly [`cycle_model`]:
//!
//! - matched window:   n (stream in) + 2n (transitions) + 1 (vector flush)
//!   + m (transduction) + n (stream out) = 4n + m + 1
//! - discarded window: n + 2n + 1 (discard) = 3n + 1
//!
//! One `EngineState` runs one window at a time; run several engines over
//! the same image to process windows in parallel, then reassemble results
//! in stream order (which is what [`run_stream`] does).

use std::collections::VecDeque;

use rayon::prelude::*;
use thiserror::Error;

use crate::bitset::BitSet;
use crate::oracle::split_windows;
use crate::overlay::{OverlayImage, PeId};

pub const DEFAULT_FIFO_CAPACITY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    /// The activation vector hit its m² entry bound mid-window.
    #[error("activation vector overflow at position {position} (bound {limit} entries)")]
    ActivationOverflow { position: u32, limit: u64 },
    #[error("FIFO overflow (capacity {capacity} vectors)")]
    FifoOverflow { capacity: usize },
    /// A window was flagged matched but path reconstruction found nothing:
    /// the image or engine state is internally inconsistent.
    #[error("matched window has no reconstructible accepting path")]
    NoAcceptingPath,
    #[error("path crosses PE {pe} whose transduction RAM entry is unused")]
    UnusedTramEntry { pe: PeId },
}

/// An [`EngineError`] tagged with the window it occurred in.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("window {window_index}: {source}")]
pub struct StreamError {
    pub window_index: usize,
    pub source: EngineError,
}

/// Outcome of one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSequenceResult {
    pub window_index: usize,
    pub outcome: SubSequenceOutcome,
    pub cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubSequenceOutcome {
    Matched {
        /// Transduced outputs, lexicographically sorted and deduplicated.
        outputs: Vec<Vec<u8>>,
        /// Accepting PE paths, ordered by (transduced output, path).
        paths: Vec<Vec<PeId>>,
    },
    Discarded,
}

impl SubSequenceOutcome {
    pub fn is_matched(&self) -> bool {
        matches!(self, SubSequenceOutcome::Matched { .. })
    }

    pub fn outputs(&self) -> &[Vec<u8>] {
        match self {
            SubSequenceOutcome::Matched { outputs, .. } => outputs,
            SubSequenceOutcome::Discarded => &[],
        }
    }
}

/// Whether a matched window reports every output or only the smallest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputPolicy {
    All,
    First,
}

/// Bounded queue between the match engine and the transduction RAM.
#[derive(Debug, Clone)]
pub struct Fifo {
    capacity: usize,
    contents: VecDeque<Vec<(u32, PeId)>>,
}

impl Fifo {
    pub fn new(capacity: usize) -> Fifo {
        assert!(capacity > 0, "FIFO capacity must be positive");
        Fifo { capacity, contents: VecDeque::new() }
    }

    pub fn push(&mut self, vector: Vec<(u32, PeId)>) -> Result<(), EngineError> {
        if self.contents.len() >= self.capacity {
            return Err(EngineError::FifoOverflow { capacity: self.capacity });
        }
        self.contents.push_back(vector);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<Vec<(u32, PeId)>> {
        self.contents.pop_front()
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }
}

/// Live simulator state over a read-only image.
pub struct EngineState<'a> {
    image: &'a OverlayImage,
    /// enable_targets[pe] = PEs that an active `pe` enables next step.
    enable_targets: Vec<Vec<PeId>>,
    start_pes: Vec<PeId>,
    report: BitSet,
    enabled: BitSet,
    active: BitSet,
    position: u32,
    activation_vector: Vec<(u32, PeId)>,
    cycles: u64,
    fifo: Fifo,
    trace: Option<Vec<String>>,
}

impl<'a> EngineState<'a> {
    /// Fresh engine: start PEs enabled, nothing active, counters zeroed.
    pub fn reset(image: &'a OverlayImage) -> EngineState<'a> {
        Self::with_fifo(image, Fifo::new(DEFAULT_FIFO_CAPACITY))
    }

    pub fn with_fifo(image: &'a OverlayImage, fifo: Fifo) -> EngineState<'a> {
        let m = image.pe_count();
        let mut enable_targets = vec![Vec::new(); m];
        let mut report = BitSet::new(m);
        let mut start_pes = Vec::new();
        for (pe, cfg) in image.occupied() {
            if cfg.is_start {
                start_pes.push(pe);
            }
            if cfg.is_report {
                report.insert(pe.index());
            }
            for d in cfg.in_switch.iter() {
                if let Some(n) = image.grid.neighbor(pe, d) {
                    enable_targets[n.index()].push(pe);
                }
            }
        }
        for targets in &mut enable_targets {
            targets.sort_unstable();
            targets.dedup();
        }
        let mut state = EngineState {
            image,
            enable_targets,
            start_pes,
            report,
            enabled: BitSet::new(m),
            active: BitSet::new(m),
            position: 0,
            activation_vector: Vec::new(),
            cycles: 0,
            fifo,
            trace: None,
        };
        state.rewind();
        state
    }

    /// Per-window reset: does not touch the FIFO or trace setting.
    fn rewind(&mut self) {
        self.enabled.clear();
        self.active.clear();
        for &pe in &self.start_pes {
            self.enabled.insert(pe.index());
        }
        self.position = 0;
        self.activation_vector.clear();
        self.cycles = 0;
    }

    pub fn set_trace(&mut self, on: bool) {
        self.trace = if on { Some(Vec::new()) } else { None };
    }

    /// Trace lines accumulated so far (one per consumed symbol):
    /// `cyc=<k> pos=<i> sym=0xNN active=[pe,...] enabled=[pe,...]`
    /// where `cyc` is the counter after the step and `enabled` is the set
    /// for the next position.
    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn position(&self) -> u32 {
        self.position
    }

    pub fn activation_vector(&self) -> &[(u32, PeId)] {
        &self.activation_vector
    }

    pub fn enabled_pes(&self) -> Vec<PeId> {
        self.enabled.iter().map(|i| PeId(i as u32)).collect()
    }

    pub fn active_pes(&self) -> Vec<PeId> {
        self.active.iter().map(|i| PeId(i as u32)).collect()
    }

    /// Consumes one symbol: enabled PEs whose match RAM contains it become
    /// active and are logged; their switch targets become enabled for the
    /// next position. Costs two clocks.
    pub fn step(&mut self, symbol: u8) -> Result<(), EngineError> {
        let limit = self.activation_limit();
        self.active.clear();
        let mut actives: Vec<PeId> = Vec::new();
        for i in self.enabled.iter() {
            if self.image.pes[i].match_class.contains(symbol) {
                self.active.insert(i);
                actives.push(PeId(i as u32));
            }
        }
        for &pe in &actives {
            if self.activation_vector.len() as u64 >= limit {
                return Err(EngineError::ActivationOverflow { position: self.position, limit });
            }
            self.activation_vector.push((self.position, pe));
        }
        self.enabled.clear();
        for &pe in &actives {
            for &t in &self.enable_targets[pe.index()] {
                self.enabled.insert(t.index());
            }
        }
        let pos = self.position;
        self.position += 1;
        self.cycles += 2;
        if let Some(trace) = &mut self.trace {
            trace.push(format!(
                "cyc={} pos={} sym=0x{:02x} active={} enabled={}",
                self.cycles,
                pos,
                symbol,
                render_pes(&actives),
                render_pes(&self.enabled.iter().map(|i| PeId(i as u32)).collect::<Vec<_>>()),
            ));
        }
        Ok(())
    }

    /// m², the activation vector's hard entry bound.
    pub fn activation_limit(&self) -> u64 {
        let m = self.image.pe_count() as u64;
        m * m
    }

    /// Runs one whole window and leaves the engine reset for the next one.
    /// The result carries window index 0; [`run_stream`] renumbers.
    pub fn run_subsequence(&mut self, window: &[u8]) -> Result<SubSequenceResult, EngineError> {
        let n = window.len() as u64;
        let m = self.image.pe_count() as u64;
        self.cycles += n; // stream the sub-sequence in
        for &sym in window {
            // no early exit on dead windows: the stream still clocks through
            self.step(sym)?;
        }
        let matched = !window.is_empty() && self.active.intersects(&self.report);
        let outcome = if matched {
            let vector = std::mem::take(&mut self.activation_vector);
            self.fifo.push(vector)?;
            let vector = self.fifo.pop().expect("just pushed");
            self.cycles += 1 + m + n; // vector flush + transduction + stream out
            let paths = reconstruct_paths(&vector, self.image, window.len())?;
            let mut outputs: Vec<Vec<u8>> = paths
                .iter()
                .map(|p| transduce(p, &self.image.tram))
                .collect::<Result<_, _>>()?;
            outputs.sort();
            outputs.dedup();
            SubSequenceOutcome::Matched { outputs, paths }
        } else {
            self.cycles += 1; // discard the vector
            SubSequenceOutcome::Discarded
        };
        let result = SubSequenceResult { window_index: 0, outcome, cycles: self.cycles };
        self.rewind();
        Ok(result)
    }
}

fn render_pes(pes: &[PeId]) -> String {
    let inner: Vec<String> = pes.iter().map(|p| p.to_string()).collect();
    format!("[{}]", inner.join(","))
}

/// Clock cost of one window under the timing model. `matched` selects the
/// full flush-and-transduce pipeline; a discarded window stops after the
/// transition phase plus one discard clock.
pub fn cycle_model(n: u64, m: u64, matched: bool) -> u64 {
    if matched {
        4 * n + m + 1
    } else {
        3 * n + 1
    }
}

/// Enumerates every accepting PE path recorded in an activation vector:
/// sequences `p0..p(n-1)` where `p(n-1)` is a report PE logged at the final
/// position, each `p(i)` was logged at position `i`, and each `p(i)` may
/// enable `p(i+1)` through its switch. Paths are deduplicated and ordered
/// by (transduced output, path).
pub fn reconstruct_paths(
    vector: &[(u32, PeId)],
    image: &OverlayImage,
    window_len: usize,
) -> Result<Vec<Vec<PeId>>, EngineError> {
    if window_len == 0 {
        return Err(EngineError::NoAcceptingPath);
    }
    let mut by_pos: Vec<Vec<PeId>> = vec![Vec::new(); window_len];
    for &(pos, pe) in vector {
        if (pos as usize) < window_len {
            by_pos[pos as usize].push(pe);
        }
    }

    // enable_sources[pe] = logged predecessors allowed to enable pe
    let enable_sources = |pe: PeId| -> Vec<PeId> {
        image.pes[pe.index()]
            .in_switch
            .iter()
            .filter_map(|d| image.grid.neighbor(pe, d))
            .collect()
    };

    let mut paths: std::collections::BTreeSet<Vec<PeId>> = Default::default();
    let final_pos = window_len - 1;
    for &last in &by_pos[final_pos] {
        if !image.pes[last.index()].is_report {
            continue;
        }
        // depth-first backwards extension
        let mut stack: Vec<Vec<PeId>> = vec![vec![last]];
        while let Some(suffix) = stack.pop() {
            let pos = final_pos + 1 - suffix.len();
            if pos == 0 {
                let mut path = suffix.clone();
                path.reverse();
                paths.insert(path);
                continue;
            }
            let head = *suffix.last().expect("suffix is never empty");
            for pred in enable_sources(head) {
                if by_pos[pos - 1].contains(&pred) {
                    let mut next = suffix.clone();
                    next.push(pred);
                    stack.push(next);
                }
            }
        }
    }
    if paths.is_empty() {
        return Err(EngineError::NoAcceptingPath);
    }
    let mut ordered: Vec<(Vec<u8>, Vec<PeId>)> = paths
        .into_iter()
        .map(|p| Ok((transduce(&p, &image.tram)?, p)))
        .collect::<Result<_, EngineError>>()?;
    ordered.sort();
    Ok(ordered.into_iter().map(|(_, p)| p).collect())
}

/// Looks every PE of a path up in the transduction RAM. Length-preserving
/// by construction: one output byte per path element.
pub fn transduce(path: &[PeId], tram: &crate::overlay::TransductionRam) -> Result<Vec<u8>, EngineError> {
    path.iter()
        .map(|&pe| tram.get(pe).ok_or(EngineError::UnusedTramEntry { pe }))
        .collect()
}

/// Splits `input` into windows of `n` (trailing remainder included as a
/// shorter window), simulates each independently, and returns results in
/// stream order with the summed cycle count.
///
/// Windows are processed in parallel; results and errors are reported in
/// deterministic stream order regardless.
pub fn run_stream(
    image: &OverlayImage,
    input: &[u8],
    n: usize,
    policy: OutputPolicy,
) -> Result<(Vec<SubSequenceResult>, u64), StreamError> {
    assert!(n >= 1, "window length must be at least 1");
    let windows: Vec<&[u8]> = split_windows(input, n).collect();
    let outcomes: Vec<Result<SubSequenceResult, EngineError>> = windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let mut engine = EngineState::reset(image);
            engine.run_subsequence(w).map(|r| apply_output_policy(
                SubSequenceResult { window_index: i, ..r },
                policy,
                image,
            ))
        })
        .collect();
    let mut results = Vec::with_capacity(outcomes.len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => results.push(r),
            Err(source) => return Err(StreamError { window_index: i, source }),
        }
    }
    let total = results.iter().map(|r| r.cycles).sum();
    Ok((results, total))
}

/// Restricts a matched result to its smallest output under
/// [`OutputPolicy::First`]; no-op otherwise.
pub fn apply_output_policy(
    mut result: SubSequenceResult,
    policy: OutputPolicy,
    image: &OverlayImage,
) -> SubSequenceResult {
    if policy == OutputPolicy::First {
        if let SubSequenceOutcome::Matched { outputs, paths } = &mut result.outcome {
            outputs.truncate(1); // canonical order: first = smallest
            let first = outputs[0].clone();
            paths.retain(|p| transduce(p, &image.tram).as_deref() == Ok(&first));
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::SymbolClass;
    use crate::overlay::{compile, GridSpec, OverlayImage};
    use crate::ruleset::parse_ruleset;

    const HELLO_LP: &str = "\
states: 6
start: 0
accept: 5
trans: 0 1 h:h
trans: 1 2 e:i
trans: 2 3 l:\\x20
trans: 3 4 l:\\x20
trans: 4 5 o:\\x20
";

    fn golden_image() -> OverlayImage {
        let fst = parse_ruleset(HELLO_LP).unwrap();
        compile(&fst, &GridSpec::moore(4, 4)).unwrap()
    }

    /// Two mutually-enabling PEs that match every symbol; overflows the
    /// 4-entry activation bound on long windows.
    fn adversarial_two_pe_image() -> OverlayImage {
        let fst = parse_ruleset(
            "states: 2\nstart: 0\naccept: 0 1\ntrans: 0 1 [\\x00-\\xff]:a\ntrans: 1 0 [\\x00-\\xff]:a\n",
        )
        .unwrap();
        let image = compile(&fst, &GridSpec::moore(1, 2)).unwrap();
        assert_eq!(image.pe_count(), 2);
        image
    }

    #[test]
    fn reset_enables_exactly_the_start_pes() {
        let image = golden_image();
        let engine = EngineState::reset(&image);
        let start_pe = image.instances_of(0).next().unwrap().pe;
        assert_eq!(engine.enabled_pes(), vec![start_pe]);
        assert!(engine.active_pes().is_empty());
        assert_eq!(engine.activation_vector().len(), 0);
        assert_eq!(engine.cycles(), 0);
        assert_eq!(engine.position(), 0);
    }

    #[test]
    fn reset_on_empty_image_is_all_zero() {
        let image = OverlayImage::empty(GridSpec::moore(2, 2));
        let engine = EngineState::reset(&image);
        assert!(engine.enabled_pes().is_empty());
        assert!(engine.active_pes().is_empty());
    }

    #[test]
    fn step_matches_and_advances() {
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        let pe0 = image.instances_of(0).next().unwrap().pe;
        let pe1 = image.instances_of(1).next().unwrap().pe;
        engine.step(b'h').unwrap();
        assert_eq!(engine.active_pes(), vec![pe0]);
        assert_eq!(engine.activation_vector(), &[(0, pe0)]);
        assert_eq!(engine.enabled_pes(), vec![pe1]);
        assert_eq!(engine.cycles(), 2);
        assert_eq!(engine.position(), 1);
    }

    #[test]
    fn step_on_mismatch_kills_the_window() {
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        engine.step(b'x').unwrap();
        assert!(engine.active_pes().is_empty());
        assert!(engine.enabled_pes().is_empty());
    }

    #[test]
    fn golden_window_matches_with_exact_cycles() {
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        let r = engine.run_subsequence(b"hello").unwrap();
        match &r.outcome {
            SubSequenceOutcome::Matched { outputs, paths } => {
                assert_eq!(outputs, &[b"hi   ".to_vec()]);
                assert_eq!(paths.len(), 1);
                assert_eq!(paths[0].len(), 5);
            }
            other => panic!("expected match, got {other:?}"),
        }
        assert_eq!(r.cycles, 37); // 4*5 + 16 + 1
        assert_eq!(r.cycles, cycle_model(5, 16, true));
        // engine came back reset
        assert_eq!(engine.cycles(), 0);
        assert_eq!(engine.position(), 0);
    }

    #[test]
    fn near_miss_window_is_discarded_with_exact_cycles() {
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        let r = engine.run_subsequence(b"hella").unwrap();
        assert_eq!(r.outcome, SubSequenceOutcome::Discarded);
        assert_eq!(r.cycles, 16); // 3*5 + 1
        assert_eq!(r.cycles, cycle_model(5, 16, false));
    }

    #[test]
    fn dead_window_still_clocks_every_symbol() {
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        // dies at position 0, but all five symbols still stream through
        let r = engine.run_subsequence(b"xxxxx").unwrap();
        assert_eq!(r.cycles, cycle_model(5, 16, false));
    }

    #[test]
    fn empty_image_discards_everything() {
        let image = OverlayImage::empty(GridSpec::moore(2, 2));
        let mut engine = EngineState::reset(&image);
        let r = engine.run_subsequence(b"abc").unwrap();
        assert_eq!(r.outcome, SubSequenceOutcome::Discarded);
    }

    #[test]
    fn activation_overflow_fires_exactly_at_the_bound() {
        let image = adversarial_two_pe_image();
        let mut engine = EngineState::reset(&image);
        // m = 2, bound = 4: one activation per position, so a 4-symbol
        // window just fits and the fifth entry overflows
        for i in 0..4 {
            engine.step(b'q').unwrap_or_else(|e| panic!("step {i} overflowed early: {e}"));
        }
        assert_eq!(engine.activation_vector().len(), 4);
        let err = engine.step(b'q').unwrap_err();
        assert_eq!(err, EngineError::ActivationOverflow { position: 4, limit: 4 });
    }

    #[test]
    fn fifo_overflow_is_reported() {
        let mut fifo = Fifo::new(4);
        for _ in 0..4 {
            fifo.push(vec![(0, PeId(0))]).unwrap();
        }
        assert_eq!(fifo.push(Vec::new()), Err(EngineError::FifoOverflow { capacity: 4 }));
        assert_eq!(fifo.len(), 4);
        assert!(fifo.pop().is_some());
        fifo.push(Vec::new()).unwrap();
    }

    #[test]
    fn reconstructs_the_single_golden_path() {
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        let r = engine.run_subsequence(b"hello").unwrap();
        let SubSequenceOutcome::Matched { paths, .. } = r.outcome else { panic!() };
        let expected: Vec<PeId> =
            (0..5).map(|e| image.instances_of(e).next().unwrap().pe).collect();
        assert_eq!(paths, vec![expected]);
    }

    #[test]
    fn parallel_paths_order_by_output() {
        let fst = parse_ruleset(
            "states: 4\nstart: 0\naccept: 2\n\
             trans: 0 1 a:x\ntrans: 1 2 b:y\ntrans: 0 3 a:p\ntrans: 3 2 b:q\n",
        )
        .unwrap();
        let image = compile(&fst, &GridSpec::moore(4, 4)).unwrap();
        let mut engine = EngineState::reset(&image);
        let r = engine.run_subsequence(b"ab").unwrap();
        let SubSequenceOutcome::Matched { outputs, paths } = r.outcome else { panic!() };
        assert_eq!(outputs, vec![b"pq".to_vec(), b"xy".to_vec()]);
        assert_eq!(paths.len(), 2);
        assert_eq!(transduce(&paths[0], &image.tram).unwrap(), b"pq".to_vec());
        assert_eq!(transduce(&paths[1], &image.tram).unwrap(), b"xy".to_vec());
    }

    #[test]
    fn single_pe_single_symbol_path() {
        let fst = parse_ruleset("states: 2\nstart: 0\naccept: 1\ntrans: 0 1 a:z\n").unwrap();
        let image = compile(&fst, &GridSpec::moore(1, 1)).unwrap();
        let mut engine = EngineState::reset(&image);
        let r = engine.run_subsequence(b"a").unwrap();
        let SubSequenceOutcome::Matched { paths, outputs } = r.outcome else { panic!() };
        assert_eq!(paths, vec![vec![PeId(0)]]);
        assert_eq!(outputs, vec![b"z".to_vec()]);
        assert_eq!(r.cycles, cycle_model(1, 1, true)); // 6
    }

    #[test]
    fn transduce_empty_path_is_empty() {
        let image = golden_image();
        assert_eq!(transduce(&[], &image.tram).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn transduce_unused_slot_errors() {
        let image = golden_image();
        let free = (0..16).map(PeId).find(|p| image.tram.get(*p).is_none()).unwrap();
        assert_eq!(
            transduce(&[free], &image.tram),
            Err(EngineError::UnusedTramEntry { pe: free })
        );
    }

    #[test]
    fn cycle_model_frozen_values() {
        assert_eq!(cycle_model(5, 16, true), 37);
        assert_eq!(cycle_model(8, 64, true), 97);
        assert_eq!(cycle_model(5, 16, false), 16);
        assert_eq!(cycle_model(1, 1, true), 6);
        assert_eq!(cycle_model(1, 1, false), 4);
    }

    #[test]
    fn stream_sums_window_cycles() {
        let image = golden_image();
        let (rs, total) = run_stream(&image, b"hellohello", 5, OutputPolicy::First).unwrap();
        assert_eq!(rs.len(), 2);
        assert!(rs.iter().all(|r| r.outcome.outputs() == [b"hi   ".to_vec()]));
        assert_eq!(total, 74);

        let (rs, total) = run_stream(&image, b"helloworld", 5, OutputPolicy::First).unwrap();
        assert!(rs[0].outcome.is_matched());
        assert_eq!(rs[1].outcome, SubSequenceOutcome::Discarded);
        assert_eq!(total, 37 + 16);
    }

    #[test]
    fn empty_stream_is_empty() {
        let image = golden_image();
        let (rs, total) = run_stream(&image, b"", 3, OutputPolicy::All).unwrap();
        assert!(rs.is_empty());
        assert_eq!(total, 0);
    }

    #[test]
    fn first_policy_keeps_the_minimum_output() {
        let fst = parse_ruleset(
            "states: 4\nstart: 0\naccept: 2\n\
             trans: 0 1 a:x\ntrans: 1 2 b:y\ntrans: 0 3 a:p\ntrans: 3 2 b:q\n",
        )
        .unwrap();
        let image = compile(&fst, &GridSpec::moore(4, 4)).unwrap();
        let (all, _) = run_stream(&image, b"ab", 2, OutputPolicy::All).unwrap();
        let (first, _) = run_stream(&image, b"ab", 2, OutputPolicy::First).unwrap();
        let SubSequenceOutcome::Matched { outputs: all_outs, .. } = &all[0].outcome else {
            panic!()
        };
        let SubSequenceOutcome::Matched { outputs: first_outs, paths } = &first[0].outcome else {
            panic!()
        };
        assert_eq!(first_outs, &vec![all_outs[0].clone()]);
        assert_eq!(paths.len(), 1);
    }

    #[test]
    fn stream_error_reports_first_failing_window() {
        let image = adversarial_two_pe_image();
        let err = run_stream(&image, b"aaaaaaaaaaaa", 6, OutputPolicy::All).unwrap_err();
        assert_eq!(err.window_index, 0);
        assert!(matches!(err.source, EngineError::ActivationOverflow { .. }));
    }

    #[test]
    fn trace_is_stable_and_formatted() {
        let image = golden_image();
        let mut a = EngineState::reset(&image);
        a.set_trace(true);
        a.run_subsequence(b"hel").unwrap();
        let ta = a.take_trace();
        let mut b = EngineState::reset(&image);
        b.set_trace(true);
        b.run_subsequence(b"hel").unwrap();
        assert_eq!(ta, b.take_trace());
        assert_eq!(ta.len(), 3);
        let pe0 = image.instances_of(0).next().unwrap().pe;
        let pe1 = image.instances_of(1).next().unwrap().pe;
        assert_eq!(ta[0], format!("cyc=5 pos=0 sym=0x68 active=[{pe0}] enabled=[{pe1}]"));
    }

    #[test]
    fn windows_are_isolated() {
        // same window always gives the same result, regardless of siblings
        let image = golden_image();
        let (solo, _) = run_stream(&image, b"hello", 5, OutputPolicy::All).unwrap();
        let (mixed, _) = run_stream(&image, b"xxxxxhello", 5, OutputPolicy::All).unwrap();
        assert_eq!(solo[0].outcome, mixed[1].outcome);
        assert_eq!(solo[0].cycles, mixed[1].cycles);
    }

    #[test]
    fn match_detection_requires_report_at_final_position() {
        // "hell" passes through report-free PEs only; "hello" reports at 4
        let image = golden_image();
        let mut engine = EngineState::reset(&image);
        assert_eq!(engine.run_subsequence(b"hell").unwrap().outcome, SubSequenceOutcome::Discarded);
        // a window that touches the report PE mid-window but not at the end
        let fst = parse_ruleset(
            "states: 3\nstart: 0\naccept: 1\ntrans: 0 1 a:a\ntrans: 1 2 b:b\n",
        )
        .unwrap();
        let image = compile(&fst, &GridSpec::moore(2, 2)).unwrap();
        let (rs, _) = run_stream(&image, b"ab", 2, OutputPolicy::All).unwrap();
        assert_eq!(rs[0].outcome, SubSequenceOutcome::Discarded);
        let (rs, _) = run_stream(&image, b"a", 1, OutputPolicy::All).unwrap();
        assert!(rs[0].outcome.is_matched());
    }

    #[test]
    fn all_match_classes_are_honest() {
        // sanity for the adversarial machine: the full class really matches
        let c = SymbolClass::FULL;
        assert!(c.contains(0) && c.contains(255) && c.contains(b'q'));
    }
}
