//! Fixture loading shared by the benchmarks.

use std::path::PathBuf;

use designforge_core::ingest::GroupRegistry;

pub fn registry() -> GroupRegistry {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/registry.json");
    GroupRegistry::open(&path).expect("fixture registry")
}
