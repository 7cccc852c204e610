//! Seed derivation for nested random stages.
//!
//! One root seed drives every random stage of a run. Sub-stages (pilot
//! draw, main draw, replication r) get their own seed via a SplitMix64
//! mix of the root and a stream index, so changing one stage never
//! perturbs another. The scheme is fixed: outputs are stable across
//! versions and platforms.

/// Derive the seed for sub-stream `stream` of a root seed.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    // SplitMix64 finalizer applied to root ^ golden-ratio-scaled stream.
    let mut z = root ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
