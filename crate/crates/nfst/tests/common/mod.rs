//! Shared helpers for the integration suites: golden machines, exhaustive
//! input enumeration, and an independent graph-isomorphism check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use nfst::fst::{Fst, InputLabel, OutputLabel};
use nfst::ruleset::parse_ruleset;

pub const HELLO_RULES: &str = include_str!("../../../../rulesets/hello.rules");
pub const HELLO_LP_RULES: &str = include_str!("../../../../rulesets/hello_lp.rules");

pub fn hello() -> Fst {
    parse_ruleset(HELLO_RULES).expect("shipped ruleset parses")
}

pub fn hello_lp() -> Fst {
    parse_ruleset(HELLO_LP_RULES).expect("shipped ruleset parses")
}

/// Every byte string over `alphabet` of length 0..=max_len.
pub fn all_inputs(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &s in alphabet {
                let mut w2 = w.clone();
                w2.push(s);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

type Edge = (u32, u32, [u8; 32], Option<u8>);

fn edge_set(fst: &Fst) -> BTreeSet<Edge> {
    fst.transitions
        .iter()
        .map(|t| {
            let label = match t.input {
                InputLabel::Epsilon => [0u8; 32],
                InputLabel::Class(c) => c.to_bytes(),
            };
            let out = match t.output {
                OutputLabel::Epsilon => None,
                OutputLabel::Byte(b) => Some(b),
            };
            (t.src.0, t.dst.0, label, out)
        })
        .collect()
}

/// Structural isomorphism: a bijection on states preserving the start
/// state, the accepting set, and the (deduplicated) labeled edge set.
/// Brute-force backtracking with signature pruning; independent of the
/// compiler and decompiler under test.
pub fn isomorphic(a: &Fst, b: &Fst) -> bool {
    let n = a.state_count as usize;
    if b.state_count as usize != n {
        return false;
    }
    let ea = edge_set(a);
    let eb = edge_set(b);
    if ea.len() != eb.len() || a.accepting.len() != b.accepting.len() {
        return false;
    }

    // per-state signature: start flag, accepting flag, sorted out/in labels
    let sig = |fst: &Fst, edges: &BTreeSet<Edge>, q: u32| {
        let mut outs: Vec<([u8; 32], Option<u8>, bool)> = edges
            .iter()
            .filter(|e| e.0 == q)
            .map(|e| (e.2, e.3, e.1 == q))
            .collect();
        outs.sort();
        let mut ins: Vec<([u8; 32], Option<u8>)> =
            edges.iter().filter(|e| e.1 == q).map(|e| (e.2, e.3)).collect();
        ins.sort();
        (fst.start.0 == q, fst.accepting.iter().any(|s| s.0 == q), outs, ins)
    };
    let sig_a: Vec<_> = (0..n as u32).map(|q| sig(a, &ea, q)).collect();
    let sig_b: Vec<_> = (0..n as u32).map(|q| sig(b, &eb, q)).collect();
    {
        let mut sa = sig_a.clone();
        let mut sb = sig_b.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return false;
        }
    }

    type Sig = (bool, bool, Vec<([u8; 32], Option<u8>, bool)>, Vec<([u8; 32], Option<u8>)>);

    struct Search<'a> {
        n: usize,
        sig_a: &'a [Sig],
        sig_b: &'a [Sig],
        ea: &'a BTreeSet<Edge>,
        eb: &'a BTreeSet<Edge>,
    }

    impl Search<'_> {
        fn backtrack(&self, q: usize, mapping: &mut Vec<Option<u32>>, used: &mut Vec<bool>) -> bool {
            if q == self.n {
                return self.ea.iter().all(|&(s, d, l, o)| {
                    self.eb.contains(&(
                        mapping[s as usize].unwrap(),
                        mapping[d as usize].unwrap(),
                        l,
                        o,
                    ))
                });
            }
            'cand: for cand in 0..self.n {
                if used[cand] || self.sig_a[q] != self.sig_b[cand] {
                    continue;
                }
                // partial consistency: edges between already-mapped states
                // must map into eb
                for &(s, d, l, o) in self.ea.iter() {
                    let (s, d) = (s as usize, d as usize);
                    let ms = if s == q { Some(cand as u32) } else { mapping[s] };
                    let md = if d == q { Some(cand as u32) } else { mapping[d] };
                    if let (Some(ms), Some(md)) = (ms, md) {
                        if !self.eb.contains(&(ms, md, l, o)) {
                            continue 'cand;
                        }
                    }
                }
                mapping[q] = Some(cand as u32);
                used[cand] = true;
                if self.backtrack(q + 1, mapping, used) {
                    return true;
                }
                mapping[q] = None;
                used[cand] = false;
            }
            false
        }
    }

    let mut mapping = vec![None; n];
    let mut used = vec![false; n];
    Search { n, sig_a: &sig_a, sig_b: &sig_b, ea: &ea, eb: &eb }
        .backtrack(0, &mut mapping, &mut used)
}

#[cfg(test)]
mod self_tests {
    use super::*;
    use nfst::fst::{StateId, SymbolClass, Transition};

    fn sym(src: u32, dst: u32, input: u8, output: u8) -> Transition {
        Transition {
            src: StateId(src),
            dst: StateId(dst),
            input: InputLabel::Class(SymbolClass::singleton(input)),
            output: OutputLabel::Byte(output),
        }
    }

    #[test]
    fn isomorphism_accepts_a_relabeling() {
        let a = Fst::new(
            3,
            StateId(0),
            [StateId(2)],
            vec![sym(0, 1, b'a', b'x'), sym(1, 2, b'b', b'y')],
        );
        // states 1 and 2 swapped
        let b = Fst::new(
            3,
            StateId(0),
            [StateId(1)],
            vec![sym(0, 2, b'a', b'x'), sym(2, 1, b'b', b'y')],
        );
        assert!(isomorphic(&a, &b));
        assert!(isomorphic(&b, &a));
    }

    #[test]
    fn isomorphism_rejects_structural_changes() {
        let a = Fst::new(
            3,
            StateId(0),
            [StateId(2)],
            vec![sym(0, 1, b'a', b'x'), sym(1, 2, b'b', b'y')],
        );
        let mut wrong_label = a.clone();
        wrong_label.transitions[1] = sym(1, 2, b'b', b'z');
        assert!(!isomorphic(&a, &wrong_label));
        let mut wrong_accept = a.clone();
        wrong_accept.accepting = [StateId(1)].into_iter().collect();
        assert!(!isomorphic(&a, &wrong_accept));
        let mut wrong_shape = a.clone();
        wrong_shape.transitions[1] = sym(0, 2, b'b', b'y');
        assert!(!isomorphic(&a, &wrong_shape));
    }

    #[test]
    fn all_inputs_counts() {
        assert_eq!(all_inputs(b"abc", 2).len(), 1 + 3 + 9);
        assert_eq!(all_inputs(b"a", 0), vec![Vec::<u8>::new()]);
    }
}
