//! Acceptance suite over the bundled experiment configs; see `tests/acceptance.rs`.
