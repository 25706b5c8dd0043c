//! Shared fixtures for the benchmarks.

use std::path::PathBuf;

use gseq::logic::{Signature, SymbolDecl};

/// The directory of hand-written machines used by the core tests.
pub fn machines_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/machines")
}

/// Standard symbols plus one of each kind.
pub fn mixed_signature() -> Signature {
    Signature::standard()
        .with(SymbolDecl::constant("c"))
        .and_then(|s| s.with(SymbolDecl::relation("P", 1)))
        .and_then(|s| s.with(SymbolDecl::relation("R", 2)))
        .and_then(|s| s.with(SymbolDecl::function("f", 1)))
        .expect("distinct names")
}
