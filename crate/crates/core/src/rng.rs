//! Seeded PCG32 generator with pinned bounded-sampling and shuffling
//! algorithms, so every split and sample is reproducible across platforms
//! and dependency upgrades.

use rand_core::RngCore;
use rand_pcg::Pcg32;

/// Stream selector from the PCG reference implementation.
const PCG_STREAM: u64 = 0xda3e_39cb_94b9_5bdb;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Pcg32,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Pcg32::new(seed, PCG_STREAM),
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)` by rejection (PCG `boundedrand`).
    pub fn below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u32();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform index in `[0, len)`. Lengths above `u32::MAX` are not supported.
    pub fn index(&mut self, len: usize) -> usize {
        let bound = u32::try_from(len).expect("collection too large for PCG32 sampling");
        self.below(bound) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// In-place Fisher-Yates shuffle (Durstenfeld, descending).
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Fisher-Yates prefix selection: the first `count` slots of `items` become
    /// a uniform sample without replacement. Returns that prefix.
    pub fn select_prefix<'a, T>(&mut self, items: &'a mut [T], count: usize) -> &'a mut [T] {
        let count = count.min(items.len());
        for i in 0..count {
            let j = i + self.index(items.len() - i);
            items.swap(i, j);
        }
        &mut items[..count]
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }
}
