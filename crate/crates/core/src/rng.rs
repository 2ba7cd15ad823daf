//! Counter-based random streams.
//!
//! All randomness is drawn from ChaCha20 used as a counter-based generator.
//! The 256-bit key is the 64-bit run seed in little-endian order followed by
//! 24 zero bytes; the 64-bit ChaCha stream (nonce) selects an independent
//! substream; the block counter starts at zero. Output words are read as
//! little-endian `u64`s. Any ChaCha20 implementation reproduces the streams.
//!
//! Stream ids carry a tag in the top byte so distinct consumers never share
//! a substream:
//!
//! | tag | index                                   | consumer               |
//! |-----|-----------------------------------------|------------------------|
//! | 1   | base edge `i * c + j`                   | lift permutations      |
//! | 2   | constraint vertex `j * n + b`           | negation signs         |
//! | 3   | 0                                       | Ihara-Bass `t` samples |

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub const TAG_PERMUTATION: u8 = 1;
pub const TAG_NEGATION: u8 = 2;
pub const TAG_T_SAMPLES: u8 = 3;

pub fn stream_id(tag: u8, index: u64) -> u64 {
    debug_assert!(index < (1 << 56));
    ((tag as u64) << 56) | index
}

/// One substream of the counter-based generator.
pub struct Stream {
    inner: ChaCha20Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn tagged(seed: u64, tag: u8, index: u64) -> Self {
        Self::new(seed, stream_id(tag, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Unbiased integer in `0..bound` by rejection: draws below
    /// `2^64 mod bound` are discarded, then the remainder is returned.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let reject = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= reject {
                return x % bound;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair sign from the lowest bit.
    pub fn sign(&mut self) -> i8 {
        if self.next_u64() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Uniform permutation of `0..n` by Fisher-Yates (descending swap index).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }
}
