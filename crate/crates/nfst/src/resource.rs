//! Memory-bit accounting for overlay configurations.
//!
//! Reports raw storage requirements as exact bit counts: per-PE match RAM
//! (256x1 bit each), transduction RAM (one byte per PE), the activation
//! vector (m² entries of PE-id width), and the FIFO (that vector, times its
//! depth). Vendor-toolchain LUT/register/power figures are deliberately out
//! of scope; bit counts are the honest, reproducible proxy.

use serde::Serialize;

use crate::overlay::{GridSpec, OverlayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub m: u64,
    pub occupied: u64,
    pub match_ram_bits: u64,
    pub tram_bits: u64,
    pub vector_bits: u64,
    pub fifo_bits: u64,
    pub total_bits: u64,
}

/// Bits needed to store one PE id: ceil(log2(max(m, 2))).
pub fn pe_id_width(m: u64) -> u64 {
    let m = m.max(2);
    64 - (m - 1).leading_zeros() as u64
}

/// Closed-form report for a grid of `m` PEs with `occupied` of them in use.
pub fn report_for(m: u64, occupied: u64, fifo_capacity: u64) -> ResourceReport {
    let match_ram_bits = 256 * m;
    let tram_bits = 8 * m;
    let vector_bits = m * m * pe_id_width(m);
    let fifo_bits = fifo_capacity * vector_bits;
    ResourceReport {
        m,
        occupied,
        match_ram_bits,
        tram_bits,
        vector_bits,
        fifo_bits,
        total_bits: match_ram_bits + tram_bits + vector_bits + fifo_bits,
    }
}

pub fn estimate(image: &OverlayImage, fifo_capacity: u64) -> ResourceReport {
    report_for(image.pe_count() as u64, image.occupied_count() as u64, fifo_capacity)
}

/// One report per grid size, in the given order. Sizes carry no occupancy
/// information, so `occupied` is reported as 0.
pub fn scaling_sweep(sizes: &[GridSpec], fifo_capacity: u64) -> Vec<ResourceReport> {
    sizes.iter().map(|g| report_for(g.pe_count() as u64, 0, fifo_capacity)).collect()
}

/// CSV rendering: fixed header, LF line endings.
pub fn to_csv(reports: &[ResourceReport]) -> String {
    let mut out =
        String::from("m,occupied,match_ram_bits,tram_bits,vector_bits,fifo_bits,total_bits\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m, r.occupied, r.match_ram_bits, r.tram_bits, r.vector_bits, r.fifo_bits, r.total_bits
        ));
    }
    out
}
