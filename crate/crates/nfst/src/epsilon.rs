//! ε-transition elimination.
//!
//! The core model admits ε-input transitions (always with ε output); the
//! overlay does not, so they are removed before compilation. The standard
//! construction applies: pull every non-ε transition of the ε-closure of a
//! state up to that state, and accept at any state whose closure touches an
//! accepting state.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::fst::{Fst, StateId, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpsilonError {
    /// An ε-input transition carries a byte output. These are rejected
    /// outright: they would break the one-output-byte-per-input-byte model.
    #[error("transition {index}: ε-input transition with a byte output cannot be eliminated")]
    UnsupportedEpsilonOutput { index: usize },
}

/// Returns an equivalent machine with no ε-input transitions. The
/// transduction relation is unchanged on every input; the accepting set
/// grows to cover trailing ε-moves.
pub fn eliminate_epsilon(fst: &Fst) -> Result<Fst, EpsilonError> {
    for (index, t) in fst.transitions.iter().enumerate() {
        if t.input.is_epsilon() && !t.output.is_epsilon() {
            return Err(EpsilonError::UnsupportedEpsilonOutput { index });
        }
    }
    if !fst.has_epsilon_inputs() {
        return Ok(fst.clone());
    }

    let n = fst.state_count as usize;
    let closures: Vec<Vec<StateId>> = (0..n).map(|q| closure_of(fst, StateId(q as u32))).collect();

    let mut seen = BTreeSet::new();
    let mut transitions = Vec::new();
    for (q, closure) in closures.iter().enumerate() {
        for &p in closure {
            for t in fst.transitions.iter().filter(|t| t.src == p) {
                if t.input.is_epsilon() {
                    continue;
                }
                let nt = Transition { src: StateId(q as u32), ..*t };
                if seen.insert((nt.src, nt.dst, class_bits(&nt), out_byte(&nt))) {
                    transitions.push(nt);
                }
            }
        }
    }

    let accepting = (0..n)
        .map(|q| StateId(q as u32))
        .filter(|q| closures[q.index()].iter().any(|p| fst.accepting.contains(p)))
        .collect();

    Ok(Fst {
        state_count: fst.state_count,
        transitions,
        start: fst.start,
        accepting,
    })
}

/// States reachable from `q` via ε-input transitions, `q` included,
/// ascending.
pub fn closure_of(fst: &Fst, q: StateId) -> Vec<StateId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![q];
    seen.insert(q);
    while let Some(p) = stack.pop() {
        for t in fst.transitions.iter().filter(|t| t.src == p && t.input.is_epsilon()) {
            if t.dst.index() < fst.state_count as usize && seen.insert(t.dst) {
                stack.push(t.dst);
            }
        }
    }
    seen.into_iter().collect()
}

fn class_bits(t: &Transition) -> [u8; 32] {
    match t.input {
        crate::fst::InputLabel::Epsilon => [0; 32],
        crate::fst::InputLabel::Class(c) => c.to_bytes(),
    }
}

fn out_byte(t: &Transition) -> Option<u8> {
    match t.output {
        crate::fst::OutputLabel::Epsilon => None,
        crate::fst::OutputLabel::Byte(b) => Some(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{InputLabel, OutputLabel, SymbolClass};

    fn eps(src: u32, dst: u32) -> Transition {
        Transition {
            src: StateId(src),
            dst: StateId(dst),
            input: InputLabel::Epsilon,
            output: OutputLabel::Epsilon,
        }
    }

    fn sym(src: u32, dst: u32, input: u8, output: u8) -> Transition {
        Transition {
            src: StateId(src),
            dst: StateId(dst),
            input: InputLabel::Class(SymbolClass::singleton(input)),
            output: OutputLabel::Byte(output),
        }
    }

    #[test]
    fn identity_when_epsilon_free() {
        let fst = Fst::new(2, StateId(0), [StateId(1)], vec![sym(0, 1, b'a', b'x')]);
        assert_eq!(eliminate_epsilon(&fst).unwrap(), fst);
    }

    #[test]
    fn pulls_transitions_through_closure() {
        // 0 -ε-> 1 -a:x-> 2 becomes 0 -a:x-> 2 plus the original 1 -a:x-> 2
        let fst = Fst::new(3, StateId(0), [StateId(2)], vec![eps(0, 1), sym(1, 2, b'a', b'x')]);
        let out = eliminate_epsilon(&fst).unwrap();
        assert_eq!(out.transitions, vec![sym(0, 2, b'a', b'x'), sym(1, 2, b'a', b'x')]);
        assert_eq!(out.accepting, fst.accepting);
        assert!(!out.has_epsilon_inputs());
    }

    #[test]
    fn closure_extends_accepting_set() {
        let fst = Fst::new(2, StateId(0), [StateId(1)], vec![eps(0, 1)]);
        let out = eliminate_epsilon(&fst).unwrap();
        assert!(out.accepting.contains(&StateId(0)));
        assert!(out.accepting.contains(&StateId(1)));
        assert!(out.transitions.is_empty());
    }

    #[test]
    fn rejects_epsilon_input_with_byte_output() {
        let fst = Fst::new(
            2,
            StateId(0),
            [StateId(1)],
            vec![Transition {
                src: StateId(0),
                dst: StateId(1),
                input: InputLabel::Epsilon,
                output: OutputLabel::Byte(b'x'),
            }],
        );
        assert_eq!(
            eliminate_epsilon(&fst),
            Err(EpsilonError::UnsupportedEpsilonOutput { index: 0 })
        );
    }

    #[test]
    fn epsilon_cycles_terminate() {
        let fst = Fst::new(
            3,
            StateId(0),
            [StateId(2)],
            vec![eps(0, 1), eps(1, 0), sym(1, 2, b'b', b'y')],
        );
        let out = eliminate_epsilon(&fst).unwrap();
        assert!(!out.has_epsilon_inputs());
        assert!(out.transitions.contains(&sym(0, 2, b'b', b'y')));
    }
}
