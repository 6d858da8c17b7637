//! Seeded randomness for data-set composition and fold assignment.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. Only raw `next_u64` outputs are consumed, and the two
//! derived procedures are fixed here so other implementations can replay them:
//!
//! * `below(n)`: draw `x = next_u64()` until `x >= 2^64 mod n`, return `x % n`.
//! * `shuffle(v)`: Fisher–Yates from the back; for `i` in `len-1 ..= 1`,
//!   swap `v[i]` with `v[below(i + 1)]`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Unbiased integer in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.0.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
