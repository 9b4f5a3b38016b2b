//! Compilation of a transducer into an overlay image, and the inverse
//! reconstruction used for round-trip verification.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fst::{
    self, Diagnostic, Fst, InputLabel, OutputLabel, StateId, Transition,
};

use super::place::{place, PlacementOptions};
use super::{EdgeInstance, GridSpec, OverlayImage, PeConfig, PeId, TransductionRam};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("machine failed validation: {}", format_diags(.0))]
    InvalidFst(Vec<Diagnostic>),
    #[error("machine has ε-input transitions; eliminate them before compiling")]
    EpsilonPresent,
    #[error("machine is not length-preserving: every edge must emit exactly one output byte")]
    NotLengthPreserving,
    #[error("{edges} edge instances exceed the grid capacity of {capacity} PEs")]
    CapacityExceeded { edges: usize, capacity: usize },
    #[error(
        "adjacency unsatisfiable within replication budget {budget} for edge pairs {pairs:?}"
    )]
    AdjacencyUnsatisfiable { pairs: Vec<(u32, u32)>, budget: u32 },
}

fn format_diags(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// An image that violates its own structural invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed image: {0}")]
pub struct MalformedImage(pub String);

/// Compiles a validated, ε-free, length-preserving machine onto the grid.
///
/// Each reachable edge becomes one or more PEs (see [`place`]); match RAMs
/// take the edge's symbol class, the transduction RAM takes its output
/// byte, and switch masks connect every adjacent pair of consecutive edge
/// instances. Deterministic: identical inputs produce identical images.
pub fn compile(fst: &Fst, grid: &GridSpec) -> Result<OverlayImage, CompileError> {
    compile_with(fst, grid, &PlacementOptions::default())
}

pub fn compile_with(
    fst: &Fst,
    grid: &GridSpec,
    options: &PlacementOptions,
) -> Result<OverlayImage, CompileError> {
    let diags = fst::validate(fst);
    if fst::has_errors(&diags) {
        return Err(CompileError::InvalidFst(
            diags.into_iter().filter(|d| d.severity == fst::Severity::Error).collect(),
        ));
    }
    if fst.has_epsilon_inputs() {
        return Err(CompileError::EpsilonPresent);
    }
    if !fst.is_length_preserving() {
        return Err(CompileError::NotLengthPreserving);
    }

    let edge_map = place(fst, grid, options)?;
    let m = grid.pe_count();
    let mut pes = vec![PeConfig::UNOCCUPIED; m];
    let mut tram = TransductionRam::unused(m);

    for inst in &edge_map {
        let t = &fst.transitions[inst.edge_index as usize];
        let InputLabel::Class(class) = t.input else { unreachable!("ε checked above") };
        let OutputLabel::Byte(out) = t.output else { unreachable!("LP checked above") };
        pes[inst.pe.index()] = PeConfig {
            match_class: class,
            is_start: t.src == fst.start,
            is_report: fst.accepting.contains(&t.dst),
            in_switch: super::DirectionSet::EMPTY,
            occupied: true,
        };
        tram.entries[inst.pe.index()] = Some(out);
    }

    // switch pass: connect every adjacent (predecessor, successor) instance
    // pair; extra connections beyond the placement's guarantees are sound,
    // since they only mirror real consecutive-edge relations
    for a in &edge_map {
        for b in &edge_map {
            if a.dst != b.src {
                continue;
            }
            if let Some(d) = grid.direction_between(b.pe, a.pe) {
                pes[b.pe.index()].in_switch.insert(d);
            }
        }
    }

    Ok(OverlayImage {
        grid: *grid,
        pes,
        tram,
        edge_map,
        source_fst_digest: fst.digest(),
    })
}

/// Rebuilds the transducer a well-formed image encodes, checking every
/// image invariant on the way. For an image produced by [`compile`] this
/// returns exactly the source machine restricted to its reachable states
/// (states renumbered compactly, duplicate edges merged).
pub fn decompile(image: &OverlayImage) -> Result<Fst, MalformedImage> {
    check_invariants(image)?;

    if image.edge_map.is_empty() {
        return Ok(Fst::new(1, StateId(0), [], Vec::new()));
    }

    // compact renumbering of the state ids recorded in the edge map
    let mut ids: Vec<u32> = image.edge_map.iter().flat_map(|i| [i.src.0, i.dst.0]).collect();
    ids.sort_unstable();
    ids.dedup();
    let remap: BTreeMap<u32, u32> =
        ids.iter().enumerate().map(|(new, &old)| (old, new as u32)).collect();

    let mut edges: BTreeMap<u32, Transition> = BTreeMap::new();
    let mut accepting = std::collections::BTreeSet::new();
    let mut start: Option<u32> = None;
    for inst in &image.edge_map {
        let pe = &image.pes[inst.pe.index()];
        let out = image.tram.get(inst.pe).expect("checked: occupied slots are used");
        edges.entry(inst.edge_index).or_insert(Transition {
            src: StateId(remap[&inst.src.0]),
            dst: StateId(remap[&inst.dst.0]),
            input: InputLabel::Class(pe.match_class),
            output: OutputLabel::Byte(out),
        });
        if pe.is_report {
            accepting.insert(StateId(remap[&inst.dst.0]));
        }
        if pe.is_start {
            start = Some(remap[&inst.src.0]);
        }
    }
    let start = start.ok_or_else(|| MalformedImage("occupied image has no start PE".into()))?;

    // merge transitions that are identical in every respect
    let mut seen = std::collections::BTreeSet::new();
    let mut transitions = Vec::new();
    for (_, t) in edges {
        let key = (t.src, t.dst, class_key(&t), out_key(&t));
        if seen.insert(key) {
            transitions.push(t);
        }
    }

    Ok(Fst::new(ids.len() as u32, StateId(start), accepting, transitions))
}

fn class_key(t: &Transition) -> [u8; 32] {
    match t.input {
        InputLabel::Class(c) => c.to_bytes(),
        InputLabel::Epsilon => [0; 32],
    }
}

fn out_key(t: &Transition) -> Option<u8> {
    match t.output {
        OutputLabel::Byte(b) => Some(b),
        OutputLabel::Epsilon => None,
    }
}

/// Full invariant sweep over an image. Everything [`decompile`] relies on
/// is verified here first.
fn check_invariants(image: &OverlayImage) -> Result<(), MalformedImage> {
    let m = image.grid.pe_count();
    if image.pes.len() != m {
        return Err(MalformedImage(format!(
            "PE array length {} does not match grid size {m}",
            image.pes.len()
        )));
    }
    if image.tram.entries.len() != m {
        return Err(MalformedImage(format!(
            "transduction RAM length {} does not match grid size {m}",
            image.tram.entries.len()
        )));
    }

    for (i, pe) in image.pes.iter().enumerate() {
        let id = PeId(i as u32);
        if pe.occupied {
            if pe.match_class.is_empty() {
                return Err(MalformedImage(format!("occupied PE {id} has an empty match RAM")));
            }
            if image.tram.get(id).is_none() {
                return Err(MalformedImage(format!(
                    "occupied PE {id} has no transduction RAM entry"
                )));
            }
        } else if !pe.match_class.is_empty()
            || pe.is_start
            || pe.is_report
            || !pe.in_switch.is_empty()
            || image.tram.get(id).is_some()
        {
            return Err(MalformedImage(format!("unoccupied PE {id} carries configuration")));
        }
        for d in pe.in_switch.iter() {
            match image.grid.neighbor(id, d) {
                None => {
                    return Err(MalformedImage(format!(
                        "PE {id} switch direction {d:?} points off the grid"
                    )))
                }
                Some(n) if !image.pes[n.index()].occupied => {
                    return Err(MalformedImage(format!(
                        "PE {id} switch direction {d:?} points at unoccupied PE {n}"
                    )))
                }
                Some(_) => {}
            }
        }
    }

    // edge map <-> occupied PEs is a bijection
    let mut seen_pe = vec![false; m];
    let mut seen_inst = std::collections::BTreeSet::new();
    for inst in &image.edge_map {
        if inst.pe.index() >= m {
            return Err(MalformedImage(format!("edge map references PE {} off grid", inst.pe)));
        }
        if !image.pes[inst.pe.index()].occupied {
            return Err(MalformedImage(format!(
                "edge map references unoccupied PE {}",
                inst.pe
            )));
        }
        if seen_pe[inst.pe.index()] {
            return Err(MalformedImage(format!("PE {} mapped to two edge instances", inst.pe)));
        }
        seen_pe[inst.pe.index()] = true;
        if !seen_inst.insert((inst.edge_index, inst.replica)) {
            return Err(MalformedImage(format!(
                "edge instance ({}, {}) mapped twice",
                inst.edge_index, inst.replica
            )));
        }
    }
    if image.edge_map.len() != image.occupied_count() {
        return Err(MalformedImage(format!(
            "{} occupied PEs but {} edge instances",
            image.occupied_count(),
            image.edge_map.len()
        )));
    }

    // per-edge consistency: replicas agree on endpoints, match, output,
    // and flags; flags agree with the start/accepting structure
    let mut per_edge: BTreeMap<u32, Vec<&EdgeInstance>> = BTreeMap::new();
    for inst in &image.edge_map {
        per_edge.entry(inst.edge_index).or_default().push(inst);
    }
    let mut start_state: Option<StateId> = None;
    let mut report_dsts = std::collections::BTreeSet::new();
    for insts in per_edge.values() {
        let first = insts[0];
        let fpe = &image.pes[first.pe.index()];
        for inst in insts {
            let pe = &image.pes[inst.pe.index()];
            if (inst.src, inst.dst) != (first.src, first.dst)
                || pe.match_class != fpe.match_class
                || image.tram.get(inst.pe) != image.tram.get(first.pe)
                || pe.is_start != fpe.is_start
                || pe.is_report != fpe.is_report
            {
                return Err(MalformedImage(format!(
                    "replicas of edge {} disagree on configuration",
                    inst.edge_index
                )));
            }
        }
        if fpe.is_start {
            match start_state {
                Some(s) if s != first.src => {
                    return Err(MalformedImage(
                        "start PEs disagree on the start state".into(),
                    ))
                }
                _ => start_state = Some(first.src),
            }
        }
        if fpe.is_report {
            report_dsts.insert(first.dst);
        }
    }
    for insts in per_edge.values() {
        let first = insts[0];
        let fpe = &image.pes[first.pe.index()];
        if let Some(q0) = start_state {
            if (first.src == q0) != fpe.is_start {
                return Err(MalformedImage(format!(
                    "edge {} start flag disagrees with its source state",
                    first.edge_index
                )));
            }
        }
        if report_dsts.contains(&first.dst) != fpe.is_report {
            return Err(MalformedImage(format!(
                "edge {} report flag disagrees with the accepting set",
                first.edge_index
            )));
        }
    }

    // switch soundness: every connection joins consecutive edges
    let by_pe: BTreeMap<PeId, &EdgeInstance> =
        image.edge_map.iter().map(|i| (i.pe, i)).collect();
    for inst in &image.edge_map {
        for d in image.pes[inst.pe.index()].in_switch.iter() {
            let n = image.grid.neighbor(inst.pe, d).expect("checked above");
            let pred = by_pe[&n];
            if pred.dst != inst.src {
                return Err(MalformedImage(format!(
                    "PE {} accepts enables from PE {} but their edges are not consecutive",
                    inst.pe, n
                )));
            }
        }
    }

    // adjacency realization: each consecutive edge pair has at least one
    // connected instance pair
    for a in per_edge.values() {
        for b in per_edge.values() {
            if a[0].dst != b[0].src {
                continue;
            }
            let realized = b.iter().any(|ib| {
                image.pes[ib.pe.index()].in_switch.iter().any(|d| {
                    image
                        .grid
                        .neighbor(ib.pe, d)
                        .is_some_and(|n| a.iter().any(|ia| ia.pe == n))
                })
            });
            if !realized {
                return Err(MalformedImage(format!(
                    "consecutive edges {} and {} share no adjacent instance pair",
                    a[0].edge_index, b[0].edge_index
                )));
            }
        }
    }

    Ok(())
}
