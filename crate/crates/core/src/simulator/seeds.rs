//! Splittable seed derivation. A child seed depends only on its parent and a
//! stream tag, so adding a stream never shifts the others.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `tag` under `parent`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    mix(parent.wrapping_add(GOLDEN).wrapping_add(mix(tag.wrapping_mul(GOLDEN))))
}
