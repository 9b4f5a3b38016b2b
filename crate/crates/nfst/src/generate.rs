//! Seeded random machine and input generation, used by the verification
//! command and the property suites.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fst::{Fst, InputLabel, OutputLabel, StateId, SymbolClass, Transition};
use crate::overlay::{compile, GridSpec, OverlayImage};

/// Shape of the machines to generate.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub states: RangeInclusive<u32>,
    pub edges: RangeInclusive<usize>,
    /// Symbols edge classes draw from.
    pub alphabet: Vec<u8>,
    /// Bytes edge outputs draw from.
    pub outputs: Vec<u8>,
    /// Probability an edge matches a small class instead of one symbol.
    pub class_prob: f64,
    /// Probability an edge is ε:ε. Zero for overlay-bound machines.
    pub epsilon_prob: f64,
    /// Allow ε outputs on consuming edges (makes machines
    /// non-length-preserving; oracle-only).
    pub epsilon_outputs: bool,
}

impl Default for GenConfig {
    /// Overlay-compatible machines: 2..=10 states, 1..=16 edges, singleton
    /// or small-class labels over a three-symbol alphabet.
    fn default() -> Self {
        GenConfig {
            states: 2..=10,
            edges: 1..=16,
            alphabet: b"abc".to_vec(),
            outputs: b"xyz".to_vec(),
            class_prob: 0.2,
            epsilon_prob: 0.0,
            epsilon_outputs: false,
        }
    }
}

impl GenConfig {
    /// Small machines with ε-transitions for elimination testing.
    pub fn with_epsilons() -> Self {
        GenConfig {
            states: 2..=6,
            edges: 1..=8,
            epsilon_prob: 0.3,
            epsilon_outputs: true,
            ..GenConfig::default()
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a machine that validates without errors and has at least one
/// reachable accepting state and at least one edge leaving the start state.
///
/// One normalization applies: the start state is dropped from the accepting
/// set when no reachable edge leads back to it. Such acceptance only
/// affects the empty window, which no stream ever produces, and it cannot
/// be represented in a compiled image.
pub fn random_fst(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Fst {
    assert!(*cfg.edges.start() >= 1, "machines need at least one edge");
    let state_count = rng.random_range(cfg.states.clone());
    let edge_count = rng.random_range(cfg.edges.clone());

    let mut transitions = Vec::with_capacity(edge_count);
    for i in 0..edge_count {
        let src = if i == 0 { 0 } else { rng.random_range(0..state_count) };
        let dst = rng.random_range(0..state_count);
        let (input, output) = if cfg.epsilon_prob > 0.0 && rng.random_bool(cfg.epsilon_prob) {
            (InputLabel::Epsilon, OutputLabel::Epsilon)
        } else {
            let class = if rng.random_bool(cfg.class_prob) && cfg.alphabet.len() >= 2 {
                let size = rng.random_range(2..=cfg.alphabet.len().min(3));
                let mut c = SymbolClass::EMPTY;
                while c.len() < size {
                    c.insert(*cfg.alphabet.choose(rng).expect("non-empty alphabet"));
                }
                c
            } else {
                SymbolClass::singleton(*cfg.alphabet.choose(rng).expect("non-empty alphabet"))
            };
            let output = if cfg.epsilon_outputs && rng.random_bool(0.3) {
                OutputLabel::Epsilon
            } else {
                OutputLabel::Byte(*cfg.outputs.choose(rng).expect("non-empty outputs"))
            };
            (InputLabel::Class(class), output)
        };
        transitions.push(Transition { src: StateId(src), dst: StateId(dst), input, output });
    }

    let mut accepting: BTreeSet<StateId> = BTreeSet::new();
    let want = rng.random_range(1..=2u32.min(state_count));
    while (accepting.len() as u32) < want {
        accepting.insert(StateId(rng.random_range(0..state_count)));
    }

    let mut fst = Fst { state_count, transitions, start: StateId(0), accepting };

    let reach = fst.reachable_states();
    let start_has_reachable_incoming = fst
        .transitions
        .iter()
        .any(|t| t.dst == fst.start && reach[t.src.index()]);
    if !start_has_reachable_incoming {
        fst.accepting.remove(&fst.start);
    }
    let any_reachable_accepting = fst.accepting.iter().any(|q| reach[q.index()]);
    if !any_reachable_accepting {
        // the first edge leaves the start state, so its target is reachable;
        // if that target is the start itself the edge doubles as a reachable
        // incoming edge, so the normalization above cannot re-trigger
        fst.accepting.insert(fst.transitions[0].dst);
    }

    debug_assert!(!crate::fst::has_errors(&crate::fst::validate(&fst)));
    fst
}

/// Smallest square Moore grid with at least four PEs per reachable edge,
/// leaving room for replication.
pub fn grid_for(fst: &Fst) -> GridSpec {
    let reach = fst.reachable_states();
    let edges = fst
        .transitions
        .iter()
        .filter(|t| t.src.index() < reach.len() && reach[t.src.index()])
        .count()
        .max(1);
    let side = ((4 * edges) as f64).sqrt().ceil() as u16;
    GridSpec::moore(side.max(2), side.max(2))
}

/// Draws machines until one compiles onto its default grid. Congestion
/// rejections are rare at these sizes; the attempt cap only guards against
/// pathological configurations.
pub fn random_compiled(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    max_attempts: usize,
) -> (Fst, OverlayImage) {
    for _ in 0..max_attempts {
        let fst = random_fst(rng, cfg);
        let grid = grid_for(&fst);
        if let Ok(image) = compile(&fst, &grid) {
            return (fst, image);
        }
    }
    panic!("no machine compiled within {max_attempts} attempts");
}

/// All symbols any edge of the machine matches.
pub fn machine_alphabet(fst: &Fst) -> Vec<u8> {
    let mut set = SymbolClass::EMPTY;
    for t in &fst.transitions {
        if let InputLabel::Class(c) = t.input {
            set = set.union(c);
        }
    }
    set.iter().collect()
}

/// Random input drawn mostly from `alphabet`, with occasional arbitrary
/// bytes, length up to `max_len` inclusive (possibly empty).
pub fn random_input(rng: &mut ChaCha8Rng, alphabet: &[u8], max_len: usize) -> Vec<u8> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            if !alphabet.is_empty() && rng.random_bool(0.9) {
                *alphabet.choose(rng).expect("non-empty")
            } else {
                rng.random::<u8>()
            }
        })
        .collect()
}

/// A random walk of `n` consuming steps from the start state. Returns the
/// consumed symbols; `None` if the walk dies. ε-free machines only.
fn random_walk(rng: &mut ChaCha8Rng, fst: &Fst, n: usize) -> Option<(Vec<u8>, StateId)> {
    let mut state = fst.start;
    let mut input = Vec::with_capacity(n);
    for _ in 0..n {
        let options: Vec<&Transition> = fst.transitions_from(state).collect();
        let t = options.choose(rng)?;
        let InputLabel::Class(c) = t.input else { return None };
        let symbols: Vec<u8> = c.iter().collect();
        input.push(*symbols.choose(rng)?);
        state = t.dst;
    }
    Some((input, state))
}

/// Builds a stream of `windows` windows of length `n`, biased so that a
/// good share of windows actually match: half the windows retry a few
/// random accepting walks, the rest are noise over the machine's alphabet.
pub fn biased_stream(rng: &mut ChaCha8Rng, fst: &Fst, n: usize, windows: usize) -> Vec<u8> {
    let alphabet = machine_alphabet(fst);
    let mut out = Vec::with_capacity(n * windows);
    for _ in 0..windows {
        let accepting_attempt = rng.random_bool(0.5);
        let mut window: Option<Vec<u8>> = None;
        if accepting_attempt {
            for _ in 0..4 {
                if let Some((w, end)) = random_walk(rng, fst, n) {
                    let keep = fst.accepting.contains(&end);
                    window = Some(w);
                    if keep {
                        break;
                    }
                }
            }
        }
        match window {
            Some(w) => out.extend_from_slice(&w),
            None => {
                for _ in 0..n {
                    if !alphabet.is_empty() && rng.random_bool(0.8) {
                        out.push(*alphabet.choose(rng).expect("non-empty"));
                    } else {
                        out.push(rng.random::<u8>());
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{has_errors, validate};

    #[test]
    fn generated_machines_validate_cleanly() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let fst = random_fst(&mut rng, &GenConfig::default());
            assert!(!has_errors(&validate(&fst)));
            assert!(fst.is_length_preserving());
            let reach = fst.reachable_states();
            assert!(fst.accepting.iter().any(|q| reach[q.index()]));
            assert!(fst.transitions_from(fst.start).next().is_some());
        }
    }

    #[test]
    fn epsilon_config_produces_epsilon_edges() {
        let mut rng = rng_from_seed(5);
        let found = (0..50).any(|_| {
            random_fst(&mut rng, &GenConfig::with_epsilons()).has_epsilon_inputs()
        });
        assert!(found);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let cfg = GenConfig::default();
        let a: Vec<Fst> =
            (0..10).scan(rng_from_seed(42), |r, _| Some(random_fst(r, &cfg))).collect();
        let b: Vec<Fst> =
            (0..10).scan(rng_from_seed(42), |r, _| Some(random_fst(r, &cfg))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn compiled_machines_come_with_images() {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let (fst, image) = random_compiled(&mut rng, &GenConfig::default(), 100);
            assert!(image.occupied_count() > 0);
            assert_eq!(image.source_fst_digest, fst.digest());
        }
    }

    #[test]
    fn biased_stream_has_matching_windows() {
        let mut rng = rng_from_seed(3);
        let fst = crate::ruleset::parse_ruleset(
            "states: 3\nstart: 0\naccept: 2\ntrans: 0 1 a:x\ntrans: 1 2 b:y\n",
        )
        .unwrap();
        let input = biased_stream(&mut rng, &fst, 2, 40);
        assert_eq!(input.len(), 80);
        let matched = crate::oracle::oracle_stream(&fst, &input, 2)
            .iter()
            .filter(|r| r.outcome.is_matched())
            .count();
        assert!(matched > 5, "bias should produce matches, got {matched}");
    }
}
