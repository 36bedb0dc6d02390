//! Fixtures shared by the benchmarks.

use nli_core::formats::builtin;
use nli_core::{FiberParams, LinkSpec, SymbolSource, WdmGrid};

/// `n_ch` channels of 45 GBd on a 46 GHz grid over one 100 km SSMF span.
pub fn desk_link(n_ch: usize, cr: f64) -> LinkSpec {
    let grid = WdmGrid::uniform(n_ch, 0.045, 0.046, 0.01, 1e-3).expect("valid grid");
    LinkSpec::new(FiberParams::ssmf(cr, 100.0, 1), grid).expect("valid link")
}

/// One i.i.d. source per channel.
pub fn sources(format: &str, n_ch: usize, seed: u64) -> Vec<SymbolSource> {
    let c = builtin(format).expect("built-in format");
    (0..n_ch).map(|k| SymbolSource::iid(c.clone(), seed, k as u64)).collect()
}
