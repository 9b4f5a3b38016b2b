//! Overlay image wire format.
//!
//! Layout (all multi-byte integers little-endian):
//!
//! ```text
//! magic   8 bytes  "NFSTOVLY"
//! version u16      = 1
//! rows    u16
//! cols    u16
//! nbhd    u8       0 = Moore8, 1 = VonNeumann4
//! per PE, rows*cols records in pe-id order:
//!   match   32 bytes  bitmap; byte k bit j (LSB first) = symbol 8k+j
//!   flags   u8        bit0 start, bit1 report, bit2 occupied
//!   switch  u8        one bit per direction, N,NE,E,SE,S,SW,W,NW order
//!   tram    u8        output byte (0 when unused)
//!   used    u8        1 if the tram entry is used
//! crc     u32      CRC-32 of all preceding bytes
//! ```
//!
//! The edge-instance map is not part of the payload; [`load_image`]
//! re-derives it from PE connectivity (switch connections identify shared
//! states, identically-configured connected PEs merge into edge replicas).

use thiserror::Error;

use crate::crc32;
use crate::fst::{Fst, InputLabel, OutputLabel, StateId, SymbolClass, Transition};

use super::{
    DirectionSet, EdgeInstance, GridSpec, Neighborhood, OverlayImage, PeConfig, PeId,
    TransductionRam,
};

pub const FORMAT_VERSION: u16 = 1;
const MAGIC: &[u8; 8] = b"NFSTOVLY";
const HEADER_LEN: usize = 8 + 2 + 2 + 2 + 1;
const PE_RECORD_LEN: usize = 32 + 1 + 1 + 1 + 1;

const FLAG_START: u8 = 1 << 0;
const FLAG_REPORT: u8 = 1 << 1;
const FLAG_OCCUPIED: u8 = 1 << 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageFormatError {
    #[error("not an overlay image (bad magic)")]
    BadMagic,
    #[error("unsupported image version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u16 },
    #[error("payload checksum mismatch (expected {expected:#010x}, found {found:#010x})")]
    ChecksumMismatch { expected: u32, found: u32 },
    #[error("truncated payload")]
    TruncatedInput,
    #[error("trailing bytes after payload")]
    TrailingInput,
    #[error("malformed payload: {0}")]
    Malformed(&'static str),
}

/// Serializes an image to the wire format. Deterministic.
pub fn save_image(image: &OverlayImage) -> Vec<u8> {
    let m = image.pe_count();
    let mut out = Vec::with_capacity(HEADER_LEN + m * PE_RECORD_LEN + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&image.grid.rows.to_le_bytes());
    out.extend_from_slice(&image.grid.cols.to_le_bytes());
    out.push(match image.grid.neighborhood {
        Neighborhood::Moore8 => 0,
        Neighborhood::VonNeumann4 => 1,
    });
    for (i, pe) in image.pes.iter().enumerate() {
        out.extend_from_slice(&pe.match_class.to_bytes());
        let mut flags = 0u8;
        if pe.is_start {
            flags |= FLAG_START;
        }
        if pe.is_report {
            flags |= FLAG_REPORT;
        }
        if pe.occupied {
            flags |= FLAG_OCCUPIED;
        }
        out.push(flags);
        out.push(pe.in_switch.0);
        match image.tram.entries[i] {
            Some(b) => {
                out.push(b);
                out.push(1);
            }
            None => {
                out.push(0);
                out.push(0);
            }
        }
    }
    let crc = crc32::checksum(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses the wire format back into an image. The version is checked before
/// the checksum, so a bumped version field reports [`VersionMismatch`] even
/// though the checksum no longer matches.
///
/// [`VersionMismatch`]: ImageFormatError::VersionMismatch
pub fn load_image(bytes: &[u8]) -> Result<OverlayImage, ImageFormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(ImageFormatError::TruncatedInput);
    }
    if &bytes[0..8] != MAGIC {
        return Err(ImageFormatError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(ImageFormatError::VersionMismatch { found: version });
    }
    let rows = u16::from_le_bytes([bytes[10], bytes[11]]);
    let cols = u16::from_le_bytes([bytes[12], bytes[13]]);
    if rows == 0 || cols == 0 {
        return Err(ImageFormatError::Malformed("grid dimensions must be positive"));
    }
    let neighborhood = match bytes[14] {
        0 => Neighborhood::Moore8,
        1 => Neighborhood::VonNeumann4,
        _ => return Err(ImageFormatError::Malformed("unknown neighborhood code")),
    };
    let grid = GridSpec { rows, cols, neighborhood };
    let m = grid.pe_count();
    let expected_len = HEADER_LEN + m * PE_RECORD_LEN + 4;
    if bytes.len() < expected_len {
        return Err(ImageFormatError::TruncatedInput);
    }
    if bytes.len() > expected_len {
        return Err(ImageFormatError::TrailingInput);
    }
    let body = &bytes[..expected_len - 4];
    let expected = crc32::checksum(body);
    let found = u32::from_le_bytes(bytes[expected_len - 4..].try_into().unwrap());
    if expected != found {
        return Err(ImageFormatError::ChecksumMismatch { expected, found });
    }

    let mut pes = Vec::with_capacity(m);
    let mut tram = TransductionRam::unused(m);
    for i in 0..m {
        let rec = &bytes[HEADER_LEN + i * PE_RECORD_LEN..HEADER_LEN + (i + 1) * PE_RECORD_LEN];
        let match_class = SymbolClass::from_bytes(rec[0..32].try_into().unwrap());
        let flags = rec[32];
        if flags & !(FLAG_START | FLAG_REPORT | FLAG_OCCUPIED) != 0 {
            return Err(ImageFormatError::Malformed("unknown flag bits"));
        }
        let switch = rec[33];
        let tram_byte = rec[34];
        let used = match rec[35] {
            0 => false,
            1 => true,
            _ => return Err(ImageFormatError::Malformed("tram used flag must be 0 or 1")),
        };
        if !used && tram_byte != 0 {
            return Err(ImageFormatError::Malformed("unused tram entry carries a byte"));
        }
        let occupied = flags & FLAG_OCCUPIED != 0;
        let pe = PeConfig {
            match_class,
            is_start: flags & FLAG_START != 0,
            is_report: flags & FLAG_REPORT != 0,
            in_switch: DirectionSet(switch),
            occupied,
        };
        if !occupied
            && (!pe.match_class.is_empty()
                || pe.is_start
                || pe.is_report
                || switch != 0
                || used
                || tram_byte != 0)
        {
            return Err(ImageFormatError::Malformed("unoccupied PE carries configuration"));
        }
        if used {
            tram.entries[i] = Some(tram_byte);
        }
        pes.push(pe);
    }

    let edge_map = derive_edge_map(&grid, &pes, &tram);
    let source_fst_digest = digest_of(&grid, &pes, &tram, &edge_map);
    Ok(OverlayImage { grid, pes, tram, edge_map, source_fst_digest })
}

/// Reconstructs edge instances from raw PE configuration.
///
/// Endpoint states are recovered by unifying, over every switch connection,
/// the predecessor's destination with the successor's source, and all start
/// PEs' sources with each other. PEs with identical configuration and
/// unified endpoints collapse into replicas of one edge. Switch connections
/// pointing at unoccupied PEs are ignored here and rejected later by
/// invariant checks.
fn derive_edge_map(grid: &GridSpec, pes: &[PeConfig], tram: &TransductionRam) -> Vec<EdgeInstance> {
    let occupied: Vec<PeId> = pes
        .iter()
        .enumerate()
        .filter(|(_, pe)| pe.occupied)
        .map(|(i, _)| PeId(i as u32))
        .collect();
    if occupied.is_empty() {
        return Vec::new();
    }
    let slot_of = |pe: PeId| occupied.binary_search(&pe).expect("occupied PE");

    // union-find over endpoint nodes: 2*slot = src node, 2*slot+1 = dst node
    let mut uf = UnionFind::new(occupied.len() * 2);
    for (slot, &pe) in occupied.iter().enumerate() {
        for d in pes[pe.index()].in_switch.iter() {
            if let Some(n) = grid.neighbor(pe, d) {
                if pes[n.index()].occupied {
                    uf.union(slot_of(n) * 2 + 1, slot * 2);
                }
            }
        }
    }
    let mut first_start: Option<usize> = None;
    for (slot, &pe) in occupied.iter().enumerate() {
        if pes[pe.index()].is_start {
            match first_start {
                None => first_start = Some(slot),
                Some(s) => uf.union(s * 2, slot * 2),
            }
        }
    }

    // Replicas of an edge whose destination state has no outgoing edges
    // never unify through successors, so identically-configured PEs sharing
    // a source endpoint and dead destination endpoints are merged here.
    // (Dead ends carry no onward structure, so this is always sound.)
    type TwinKey = (usize, [u8; 32], Option<u8>, bool, bool);
    let src_roots: std::collections::BTreeSet<usize> =
        (0..occupied.len()).map(|slot| uf.find(slot * 2)).collect();
    let mut twins: std::collections::BTreeMap<TwinKey, usize> = Default::default();
    for (slot, &pe) in occupied.iter().enumerate() {
        if src_roots.contains(&uf.find(slot * 2 + 1)) {
            continue; // destination feeds successors; unification handled above
        }
        let cfg = &pes[pe.index()];
        let key = (
            uf.find(slot * 2),
            cfg.match_class.to_bytes(),
            tram.get(pe),
            cfg.is_start,
            cfg.is_report,
        );
        match twins.get(&key) {
            Some(&first) => uf.union(first * 2 + 1, slot * 2 + 1),
            None => {
                twins.insert(key, slot);
            }
        }
    }

    // number states by first appearance over (src0, dst0, src1, dst1, ...)
    let mut state_of_root: std::collections::BTreeMap<usize, u32> = Default::default();
    let mut next_state = 0u32;
    let mut endpoints = Vec::with_capacity(occupied.len());
    for slot in 0..occupied.len() {
        let mut id_for = |node: usize, uf: &mut UnionFind| {
            let root = uf.find(node);
            *state_of_root.entry(root).or_insert_with(|| {
                let s = next_state;
                next_state += 1;
                s
            })
        };
        let src = id_for(slot * 2, &mut uf);
        let dst = id_for(slot * 2 + 1, &mut uf);
        endpoints.push((StateId(src), StateId(dst)));
    }

    // group identical connected PEs into edges, numbered by first appearance
    let mut edge_of: std::collections::BTreeMap<(StateId, StateId, [u8; 32], Option<u8>), u32> =
        Default::default();
    let mut replicas: Vec<u32> = Vec::new();
    let mut out = Vec::with_capacity(occupied.len());
    for (slot, &pe) in occupied.iter().enumerate() {
        let (src, dst) = endpoints[slot];
        let key = (src, dst, pes[pe.index()].match_class.to_bytes(), tram.get(pe));
        let next_edge = edge_of.len() as u32;
        let edge_index = *edge_of.entry(key).or_insert(next_edge);
        if edge_index as usize >= replicas.len() {
            replicas.push(0);
        }
        let replica = replicas[edge_index as usize];
        replicas[edge_index as usize] += 1;
        out.push(EdgeInstance { edge_index, replica, src, dst, pe });
    }
    out.sort_by_key(|i| (i.edge_index, i.replica));
    out
}

/// Digest of the machine the PE configuration encodes, independent of how
/// the image was produced. Mirrors the reconstruction in `decompile` but
/// never fails: malformed structure still hashes to something stable.
fn digest_of(
    _grid: &GridSpec,
    pes: &[PeConfig],
    tram: &TransductionRam,
    edge_map: &[EdgeInstance],
) -> u32 {
    if edge_map.is_empty() {
        return Fst::new(1, StateId(0), [], Vec::new()).digest();
    }
    let mut transitions = Vec::new();
    let mut accepting = std::collections::BTreeSet::new();
    let mut start = StateId(0);
    let mut max_state = 0;
    for inst in edge_map {
        if inst.replica > 0 {
            continue;
        }
        let pe = &pes[inst.pe.index()];
        transitions.push(Transition {
            src: inst.src,
            dst: inst.dst,
            input: InputLabel::Class(pe.match_class),
            output: match tram.get(inst.pe) {
                Some(b) => OutputLabel::Byte(b),
                None => OutputLabel::Epsilon,
            },
        });
        if pe.is_report {
            accepting.insert(inst.dst);
        }
        if pe.is_start {
            start = inst.src;
        }
        max_state = max_state.max(inst.src.0).max(inst.dst.0);
    }
    Fst::new(max_state + 1, start, accepting, transitions).digest()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // smaller root wins, keeping numbering stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Human-readable JSON rendering of an image: same information as the wire
/// format plus the derived edge map, with match RAMs shown as class ranges.
pub fn image_to_json(image: &OverlayImage) -> String {
    use serde::Serialize;

    #[derive(Serialize)]
    struct PeView {
        pe_id: u32,
        #[serde(rename = "match")]
        match_class: String,
        start: bool,
        report: bool,
        occupied: bool,
        in_switch: Vec<String>,
        tram: Option<String>,
    }

    #[derive(Serialize)]
    struct GridView {
        rows: u16,
        cols: u16,
        neighborhood: &'static str,
    }

    #[derive(Serialize)]
    struct EdgeView {
        edge_index: u32,
        replica: u32,
        src: u32,
        dst: u32,
        pe: u32,
    }

    #[derive(Serialize)]
    struct ImageView {
        version: u16,
        grid: GridView,
        pes: Vec<PeView>,
        edge_map: Vec<EdgeView>,
        source_fst_digest: String,
    }

    let view = ImageView {
        version: FORMAT_VERSION,
        grid: GridView {
            rows: image.grid.rows,
            cols: image.grid.cols,
            neighborhood: match image.grid.neighborhood {
                Neighborhood::Moore8 => "moore8",
                Neighborhood::VonNeumann4 => "vonneumann4",
            },
        },
        pes: image
            .pes
            .iter()
            .enumerate()
            .map(|(i, pe)| PeView {
                pe_id: i as u32,
                match_class: format!("{:?}", pe.match_class),
                start: pe.is_start,
                report: pe.is_report,
                occupied: pe.occupied,
                in_switch: pe.in_switch.iter().map(|d| format!("{d:?}")).collect(),
                tram: image.tram.entries[i].map(|b| format!("0x{b:02x}")),
            })
            .collect(),
        edge_map: image
            .edge_map
            .iter()
            .map(|e| EdgeView {
                edge_index: e.edge_index,
                replica: e.replica,
                src: e.src.0,
                dst: e.dst.0,
                pe: e.pe.0,
            })
            .collect(),
        source_fst_digest: format!("{:#010x}", image.source_fst_digest),
    };
    serde_json::to_string_pretty(&view).expect("view serialization cannot fail")
}
