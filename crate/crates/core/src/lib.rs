pub mod cli;
pub mod enumeration;
pub mod gaussian;
pub mod laws;
pub mod montecarlo;
pub(crate) mod serde_big;
pub mod words;

/// Generator behind every seeded estimate.
pub const RNG_NAME: &str = "ChaCha8Rng";
