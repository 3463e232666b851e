use std::hash::Hasher;

use fnv::FnvHasher;

/// FNV-1a 64-bit over raw bytes (no length suffix or terminator).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hasher = FnvHasher::default();
    hasher.write(bytes);
    hasher.finish()
}

/// Bucket of `bytes` in a feature space of `dim` slots; `dim` must be a power of two.
pub fn bucket(bytes: &[u8], dim: usize) -> usize {
    debug_assert!(dim.is_power_of_two());
    (fnv1a64(bytes) & (dim as u64 - 1)) as usize
}

/// Merges bucket hits into counts and scales to unit L2 norm.
pub fn sparse_normalized(mut buckets: Vec<usize>) -> Vec<(usize, f64)> {
    buckets.sort_unstable();
    let mut out: Vec<(usize, f64)> = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((idx, count)) if *idx == b => *count += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    let norm = out.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, v) in &mut out {
            *v /= norm;
        }
    }
    out
}
