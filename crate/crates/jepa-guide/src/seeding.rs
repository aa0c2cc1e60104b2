//! Deterministic derivation of per-chain and per-step RNG seeds.
//!
//! Parallel fan-out and in-chain side channels (like the per-step sketch
//! draws during guidance) must never consume from a chain's own noise stream,
//! or enabling a feature would silently change every later draw. Instead each
//! consumer gets an independent seed mixed from (base, stream index).

/// SplitMix64-style finalizer over `base` xor a golden-ratio-spread stream.
/// Distinct `(base, stream)` pairs land on well-separated seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tag separating guidance sketch seeds from chain seeds.
pub const GUIDANCE_STREAM: u64 = 0x6A65_7061_5F67_7569;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_streams_do_not_collide_cheaply() {
        let base = 42;
        let mut seen = std::collections::HashSet::new();
        for stream in 0..10_000_u64 {
            assert!(seen.insert(derive_seed(base, stream)));
        }
        // Mixing is not the identity on stream 0.
        assert_ne!(derive_seed(base, 0), base);
    }

    #[test]
    fn derivation_is_pure() {
        assert_eq!(derive_seed(7, 9), derive_seed(7, 9));
        assert_ne!(derive_seed(7, 9), derive_seed(8, 9));
    }
}
