//! Bundled example documents.

/// Two functions over five directives, no sharing.
pub const TOY6: &str = include_str!("../fixtures/toy6.json");

/// Thirty-directive library system with a shared-directive pair.
pub const LIBRARY30: &str = include_str!("../fixtures/library30.json");

/// Synthesis input for a single directive with seven candidate functions.
pub const SYNTH_D1: &str = include_str!("../fixtures/synth_d1.json");
