//! Stable seed derivation for lazily generated tables and policies.
//!
//! `std::hash` makes no cross-release stability promise, so keys are folded
//! with splitmix64 instead.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::primitives::History;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KeyHasher(u64);

impl KeyHasher {
    pub(crate) fn new(seed: u64) -> Self {
        KeyHasher(splitmix64(seed))
    }

    pub(crate) fn word(self, w: u64) -> Self {
        KeyHasher(splitmix64(
            self.0 ^ splitmix64(w.wrapping_add(0x5851_F42D_4C95_7F2D)),
        ))
    }

    /// Folds the first `limit` cycles and the pending action, if any.
    pub(crate) fn history(self, history: &History, limit: usize) -> Self {
        let mut h = self.word(0xC0FFEE);
        for &(a, e) in history.steps().iter().take(limit) {
            h = h.word(a.0 as u64).word(e.0 as u64 | 1 << 32);
        }
        if let Some(a) = history.pending() {
            h = h.word(a.0 as u64 | 1 << 33);
        }
        h
    }

    pub(crate) fn finish(self) -> u64 {
        self.0
    }

    pub(crate) fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{ActionId, PerceptId};

    #[test]
    fn keys_are_stable_and_distinct() {
        let h = History::new().append(ActionId(1), PerceptId(0)).unwrap();
        let a = KeyHasher::new(7).history(&h, 8).finish();
        assert_eq!(a, KeyHasher::new(7).history(&h, 8).finish());
        assert_ne!(a, KeyHasher::new(8).history(&h, 8).finish());
        assert_ne!(a, KeyHasher::new(7).history(&History::new(), 8).finish());
    }
}
