//! Non-deterministic finite state transducers on a simulated PE-array
//! overlay.
//!
//! The pipeline, end to end:
//!
//! 1. [`ruleset`] parses a rule file into an [`fst::Fst`] and [`fst::validate`]
//!    checks it; [`epsilon::eliminate_epsilon`] removes ε-transitions.
//! 2. [`overlay::compile`] places every edge onto a 2-D grid of processor
//!    elements, each holding a 256-bit match RAM, start/report flags, a
//!    neighbor switch mask, and one transduction output byte. Images
//!    serialize to a checksummed binary format.
//! 3. [`sim`] streams input through the array in fixed-length sub-sequence
//!    windows, logging activations, reconstructing accepting paths, and
//!    accounting clock cycles exactly.
//! 4. [`oracle`] is the reference interpreter the overlay is verified
//!    against ([`verify`]); [`resource`] reports memory-bit costs per grid.

pub mod bitset;
pub mod crc32;
pub mod epsilon;
pub mod fst;
pub mod generate;
pub mod oracle;
pub mod overlay;
pub mod resource;
pub mod ruleset;
pub mod sim;
pub mod verify;

pub use fst::{Fst, InputLabel, OutputLabel, StateId, Symbol, SymbolClass, Transition};
pub use overlay::{GridSpec, Neighborhood, OverlayImage, PeId};
