//! Edge placement onto the PE grid.
//!
//! PEs can only enable their immediate grid neighbors, so placement must
//! arrange edge instances such that wherever a thread of execution sits, a
//! grid-adjacent instance of every legal successor edge exists. The
//! strategy is a breadth-first traversal from the start edges: cells are
//! handed out in snake order, and when an already-placed instance needs a
//! successor it cannot reach, the successor edge is replicated into a free
//! adjacent cell. Replication is capped per edge; running past the cap or
//! out of adjacent cells is a congestion failure, reported with the edge
//! pairs that could not be realized.

use std::collections::VecDeque;

use crate::fst::Fst;

use super::compile::CompileError;
use super::{EdgeInstance, GridSpec, PeId};

/// Hard ceiling on instances per edge before placement gives up.
pub const DEFAULT_REPLICATION_BUDGET: u32 = 4;

#[derive(Debug, Clone, Copy)]
pub struct PlacementOptions {
    /// Maximum instances of a single edge.
    pub replication_budget: u32,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        PlacementOptions { replication_budget: DEFAULT_REPLICATION_BUDGET }
    }
}

/// Assigns every reachable edge of `fst` to one or more grid cells.
///
/// Guarantees on success, for every placed instance `i` of edge `e`:
/// - every edge `e2` with `e2.src == e.dst` has an instance grid-adjacent
///   to `i` (so no thread ever strands mid-path), and
/// - placement is a pure function of `(fst, grid, options)`: ties are broken
///   by edge index and by the fixed direction order of the grid.
///
/// Unreachable edges are not placed; callers surface that through
/// validation warnings. The returned instances are sorted by
/// `(edge_index, replica)`.
pub fn place(
    fst: &Fst,
    grid: &GridSpec,
    options: &PlacementOptions,
) -> Result<Vec<EdgeInstance>, CompileError> {
    let m = grid.pe_count();
    let reach = fst.reachable_states();
    let edge_reachable: Vec<bool> = fst
        .transitions
        .iter()
        .map(|t| t.src.index() < reach.len() && reach[t.src.index()])
        .collect();
    let edge_count = edge_reachable.iter().filter(|&&r| r).count();
    if edge_count > m {
        return Err(CompileError::CapacityExceeded { edges: edge_count, capacity: m });
    }

    // successors[e] = reachable edges leaving e's destination state
    let successors: Vec<Vec<u32>> = fst
        .transitions
        .iter()
        .enumerate()
        .map(|(e, t)| {
            if !edge_reachable[e] {
                return Vec::new();
            }
            fst.transitions
                .iter()
                .enumerate()
                .filter(|(e2, t2)| edge_reachable[*e2] && t2.src == t.dst)
                .map(|(e2, _)| e2 as u32)
                .collect()
        })
        .collect();

    let snake = grid.snake_order();
    let mut snake_cursor = 0usize;
    let mut board = Board {
        cell_owner: vec![None; m],
        instances: vec![Vec::new(); fst.transitions.len()],
        placed_total: 0,
        queue: VecDeque::new(),
    };
    let mut failures: Vec<(u32, u32)> = Vec::new();

    // roots: every reachable edge leaving the start state, in index order
    for (e, t) in fst.transitions.iter().enumerate() {
        if edge_reachable[e] && t.src == fst.start {
            while snake_cursor < m && board.cell_owner[snake[snake_cursor].index()].is_some() {
                snake_cursor += 1;
            }
            // edge_count <= m and roots are distinct edges, so a cell exists
            board.place_at(e as u32, snake[snake_cursor]);
        }
    }

    // Cell choice for a successor of the instance on `pe`: the globally
    // next free snake cell when it is adjacent (chains then follow the
    // snake exactly), otherwise the first free neighbor in direction
    // order.
    let choose_cell = |pe: PeId, board: &Board| -> Option<PeId> {
        let first_free = snake.iter().copied().find(|c| board.cell_owner[c.index()].is_none());
        match first_free {
            Some(c) if grid.adjacent(pe, c) => Some(c),
            _ => grid
                .directions()
                .iter()
                .filter_map(|d| grid.neighbor(pe, *d))
                .find(|n| board.cell_owner[n.index()].is_none()),
        }
    };

    while let Some((edge, pe)) = board.queue.pop_front() {
        for &succ in &successors[edge as usize] {
            if board.instances[succ as usize].iter().any(|&p| grid.adjacent(pe, p)) {
                continue; // already reachable from this instance
            }
            if board.instances[succ as usize].len() as u32 >= options.replication_budget {
                push_unique(&mut failures, (edge, succ));
                continue;
            }
            match choose_cell(pe, &board) {
                Some(c) => board.place_at(succ, c),
                None if board.placed_total >= m => {
                    // grid completely full: one more replica would overflow it
                    return Err(CompileError::CapacityExceeded {
                        edges: board.placed_total + 1,
                        capacity: m,
                    });
                }
                // free cells exist elsewhere but none adjacent: congestion
                None => push_unique(&mut failures, (edge, succ)),
            }
        }
    }

    if !failures.is_empty() {
        return Err(CompileError::AdjacencyUnsatisfiable {
            pairs: failures,
            budget: options.replication_budget,
        });
    }

    let mut out = Vec::with_capacity(board.placed_total);
    for (e, pes) in board.instances.iter().enumerate() {
        for (replica, &pe) in pes.iter().enumerate() {
            let t = &fst.transitions[e];
            out.push(EdgeInstance {
                edge_index: e as u32,
                replica: replica as u32,
                src: t.src,
                dst: t.dst,
                pe,
            });
        }
    }
    Ok(out)
}

/// Mutable placement state: who owns each cell, instances per edge, and
/// the BFS worklist of instances whose successors still need attention.
struct Board {
    cell_owner: Vec<Option<(u32, u32)>>,
    instances: Vec<Vec<PeId>>,
    placed_total: usize,
    queue: VecDeque<(u32, PeId)>,
}

impl Board {
    fn place_at(&mut self, edge: u32, pe: PeId) {
        let replica = self.instances[edge as usize].len() as u32;
        self.cell_owner[pe.index()] = Some((edge, replica));
        self.instances[edge as usize].push(pe);
        self.placed_total += 1;
        self.queue.push_back((edge, pe));
    }
}

fn push_unique(v: &mut Vec<(u32, u32)>, pair: (u32, u32)) {
    if !v.contains(&pair) {
        v.push(pair);
    }
}
