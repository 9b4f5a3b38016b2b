//! PE-array overlay: grid geometry, per-PE configuration, and the compiled
//! image that a simulator or reconfiguration stream consumes.
//!
//! The overlay is a 2-D array of processor elements. Each occupied PE
//! represents one transducer edge instance: a 256-bit match table (which
//! input bytes fire the edge), start/report flags, a switch mask naming
//! which grid neighbors may enable it, and one output byte in the
//! transduction RAM. Edges may be replicated onto several PEs so that every
//! predecessor instance has a grid-adjacent successor under neighbor-only
//! interconnect.

mod compile;
mod format;
mod place;

pub use compile::{compile, decompile, CompileError, MalformedImage};
pub use format::{image_to_json, load_image, save_image, ImageFormatError, FORMAT_VERSION};
pub use place::{place, PlacementOptions, DEFAULT_REPLICATION_BUDGET};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fst::{StateId, SymbolClass};

/// Index of a PE: row-major position in the grid, `0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PeId(pub u32);

impl PeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which cells count as neighbors of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighborhood {
    /// All eight surrounding cells.
    Moore8,
    /// The four orthogonal cells.
    VonNeumann4,
}

/// Compass direction to an adjacent cell. The discriminant is the bit
/// position in the wire-format switch mask (N,NE,E,SE,S,SW,W,NW).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N = 0,
    NE = 1,
    E = 2,
    SE = 3,
    S = 4,
    SW = 5,
    W = 6,
    NW = 7,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];
    const ORTHOGONAL: [Direction; 4] =
        [Direction::N, Direction::E, Direction::S, Direction::W];

    /// (row, col) offset of the neighbor this direction points at.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (-1, 0),
            Direction::NE => (-1, 1),
            Direction::E => (0, 1),
            Direction::SE => (1, 1),
            Direction::S => (1, 0),
            Direction::SW => (1, -1),
            Direction::W => (0, -1),
            Direction::NW => (-1, -1),
        }
    }

    pub fn bit(self) -> u8 {
        1u8 << (self as u8)
    }

    pub fn from_bit_index(i: u8) -> Option<Direction> {
        Direction::ALL.get(i as usize).copied()
    }
}

/// Set of directions, stored as the wire-format switch mask byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DirectionSet(pub u8);

impl DirectionSet {
    pub const EMPTY: DirectionSet = DirectionSet(0);

    pub fn insert(&mut self, d: Direction) {
        self.0 |= d.bit();
    }

    pub fn contains(self, d: Direction) -> bool {
        self.0 & d.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Direction> {
        Direction::ALL.into_iter().filter(move |d| self.contains(*d))
    }
}

/// Grid shape. `m = rows * cols` is the PE count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: u16,
    pub cols: u16,
    pub neighborhood: Neighborhood,
}

impl GridSpec {
    pub fn new(rows: u16, cols: u16, neighborhood: Neighborhood) -> GridSpec {
        assert!(rows > 0 && cols > 0, "grid dimensions must be positive");
        GridSpec { rows, cols, neighborhood }
    }

    pub fn moore(rows: u16, cols: u16) -> GridSpec {
        GridSpec::new(rows, cols, Neighborhood::Moore8)
    }

    /// Total PE count, the paper's `m`.
    pub fn pe_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn cell_of(&self, pe: PeId) -> (u16, u16) {
        let cols = self.cols as u32;
        ((pe.0 / cols) as u16, (pe.0 % cols) as u16)
    }

    pub fn pe_at(&self, row: u16, col: u16) -> PeId {
        PeId(row as u32 * self.cols as u32 + col as u32)
    }

    /// Directions that participate in this grid's neighborhood, in switch
    /// mask bit order.
    pub fn directions(&self) -> &'static [Direction] {
        match self.neighborhood {
            Neighborhood::Moore8 => &Direction::ALL,
            Neighborhood::VonNeumann4 => &Direction::ORTHOGONAL,
        }
    }

    /// The PE adjacent to `pe` in direction `d`, if it exists on the grid
    /// and `d` belongs to the neighborhood.
    pub fn neighbor(&self, pe: PeId, d: Direction) -> Option<PeId> {
        if !self.directions().contains(&d) {
            return None;
        }
        let (r, c) = self.cell_of(pe);
        let (dr, dc) = d.delta();
        let nr = r as i32 + dr;
        let nc = c as i32 + dc;
        if nr < 0 || nc < 0 || nr >= self.rows as i32 || nc >= self.cols as i32 {
            return None;
        }
        Some(self.pe_at(nr as u16, nc as u16))
    }

    /// Direction from `from` to `to` if they are grid-adjacent under the
    /// neighborhood.
    pub fn direction_between(&self, from: PeId, to: PeId) -> Option<Direction> {
        self.directions()
            .iter()
            .copied()
            .find(|&d| self.neighbor(from, d) == Some(to))
    }

    pub fn adjacent(&self, a: PeId, b: PeId) -> bool {
        self.direction_between(a, b).is_some()
    }

    /// All PEs in boustrophedon (snake) order: row 0 left to right, row 1
    /// right to left, and so on. Consecutive cells in this order are always
    /// grid-adjacent, under both neighborhoods.
    pub fn snake_order(&self) -> Vec<PeId> {
        let mut out = Vec::with_capacity(self.pe_count());
        for r in 0..self.rows {
            if r % 2 == 0 {
                for c in 0..self.cols {
                    out.push(self.pe_at(r, c));
                }
            } else {
                for c in (0..self.cols).rev() {
                    out.push(self.pe_at(r, c));
                }
            }
        }
        out
    }
}

/// Configuration of one PE. Unoccupied PEs carry an empty match table and
/// cleared flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeConfig {
    /// The 256x1-bit match RAM image: which input bytes fire this edge.
    pub match_class: SymbolClass,
    /// Enabled at position 0 of every window (edge leaves the start state).
    pub is_start: bool,
    /// A match here at the final position reports (edge enters an accepting
    /// state).
    pub is_report: bool,
    /// Directions of adjacent PEs allowed to enable this one.
    pub in_switch: DirectionSet,
    pub occupied: bool,
}

impl PeConfig {
    pub const UNOCCUPIED: PeConfig = PeConfig {
        match_class: SymbolClass::EMPTY,
        is_start: false,
        is_report: false,
        in_switch: DirectionSet::EMPTY,
        occupied: false,
    };
}

/// Output-byte table, one slot per PE. `None` marks an unused slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransductionRam {
    pub entries: Vec<Option<u8>>,
}

impl TransductionRam {
    pub fn unused(m: usize) -> TransductionRam {
        TransductionRam { entries: vec![None; m] }
    }

    pub fn get(&self, pe: PeId) -> Option<u8> {
        self.entries.get(pe.index()).copied().flatten()
    }
}

/// One placed edge instance: edge `edge_index` of the source machine,
/// replica `replica`, sitting on PE `pe`. `src`/`dst` carry the edge's
/// endpoint states so the machine can be reconstructed from the image
/// alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeInstance {
    pub edge_index: u32,
    pub replica: u32,
    pub src: StateId,
    pub dst: StateId,
    pub pe: PeId,
}

/// A compiled overlay: everything the engine needs to run, plus the
/// edge-instance map tying PEs back to source edges.
///
/// The wire format (see [`save_image`]/[`load_image`]) carries the grid, PE
/// configurations, and transduction RAM; `edge_map` and `source_fst_digest`
/// are derived metadata. [`load_image`] reconstructs them canonically from
/// the PE connectivity, so a loaded image is always self-consistent but may
/// number edges and states differently from the compiler that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlayImage {
    pub grid: GridSpec,
    /// One entry per PE, indexed by `PeId`, length `m`.
    pub pes: Vec<PeConfig>,
    pub tram: TransductionRam,
    /// Sorted by (edge_index, replica); one record per occupied PE.
    pub edge_map: Vec<EdgeInstance>,
    pub source_fst_digest: u32,
}

impl OverlayImage {
    pub fn pe_count(&self) -> usize {
        self.grid.pe_count()
    }

    pub fn occupied(&self) -> impl Iterator<Item = (PeId, &PeConfig)> {
        self.pes
            .iter()
            .enumerate()
            .filter(|(_, pe)| pe.occupied)
            .map(|(i, pe)| (PeId(i as u32), pe))
    }

    pub fn occupied_count(&self) -> usize {
        self.pes.iter().filter(|pe| pe.occupied).count()
    }

    /// Instances above the first per edge, i.e. how many extra PEs
    /// replication cost.
    pub fn replication_count(&self) -> usize {
        self.edge_map.iter().filter(|inst| inst.replica > 0).count()
    }

    pub fn instance_at(&self, pe: PeId) -> Option<&EdgeInstance> {
        self.edge_map.iter().find(|inst| inst.pe == pe)
    }

    pub fn instances_of(&self, edge_index: u32) -> impl Iterator<Item = &EdgeInstance> {
        self.edge_map.iter().filter(move |inst| inst.edge_index == edge_index)
    }

    /// An image with no occupied PEs.
    pub fn empty(grid: GridSpec) -> OverlayImage {
        let m = grid.pe_count();
        OverlayImage {
            grid,
            pes: vec![PeConfig::UNOCCUPIED; m],
            tram: TransductionRam::unused(m),
            edge_map: Vec::new(),
            source_fst_digest: crate::fst::Fst::new(1, StateId(0), [], Vec::new()).digest(),
        }
    }
}
