//! Benchmarks live in `benches/`. Shared fixtures are here.

use widder_core::{Catalog, CatalogEntry, C64};

pub fn entry(name: &str) -> &'static CatalogEntry {
    Catalog::builtin().get(name).expect("builtin entry")
}

pub fn real(xs: &[f64]) -> Vec<C64> {
    xs.iter().map(|&x| C64::new(x, 0.0)).collect()
}
