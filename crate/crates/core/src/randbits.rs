//! Random bits with exact accounting.
//!
//! The canonical stream of a [`BitSource`] seeded with `s` is the sequence of
//! 64-bit outputs of xoshiro256++ seeded through `SeedableRng::seed_from_u64(s)`
//! (SplitMix64 state expansion), with each 64-bit block delivered most
//! significant bit first. Every sampler is written against [`RandomBits`] so
//! a [`ScriptedBits`] replay runs the same code as the seeded stream.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const UNIFORM_BITS: u32 = 53;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// A stream of unbiased bits that counts how many it has delivered.
pub trait RandomBits {
    fn next_bit(&mut self) -> bool;

    /// Bits delivered so far.
    fn position(&self) -> u64;

    /// The next `count` bits (at most 64) as an integer, first bit most
    /// significant.
    fn next_bits(&mut self, count: u32) -> u64 {
        debug_assert!(count <= 64);
        (0..count).fold(0u64, |acc, _| (acc << 1) | self.next_bit() as u64)
    }

    /// Uniform dyadic rational in `[0, 1)` with 53 fractional bits.
    fn next_uniform53(&mut self) -> f64 {
        self.next_bits(UNIFORM_BITS) as f64 * (-(UNIFORM_BITS as f64)).exp2()
    }

    /// Returns `true` with probability exactly `2^-t`.
    ///
    /// Draws bits until a 1 appears (failure) or `t` zeros have been seen
    /// (success). `t = 0` succeeds without drawing.
    fn bernoulli_pow2(&mut self, t: u64) -> bool {
        for _ in 0..t {
            if self.next_bit() {
                return false;
            }
        }
        true
    }
}

/// Seeded deterministic bit source.
#[derive(Debug, Clone)]
pub struct BitSource {
    seed: u64,
    rng: Xoshiro256PlusPlus,
    // unread bits, left-aligned
    block: u64,
    available: u32,
    position: u64,
}

impl BitSource {
    pub fn new(seed: u64) -> Self {
        BitSource {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            block: 0,
            available: 0,
            position: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn refill(&mut self) {
        self.block = self.rng.next_u64();
        self.available = 64;
    }

    /// Takes `count` in `1..=available` bits from the buffered block.
    #[inline]
    fn take(&mut self, count: u32) -> u64 {
        debug_assert!(count >= 1 && count <= self.available);
        let value = self.block >> (64 - count);
        self.block = self.block.checked_shl(count).unwrap_or(0);
        self.available -= count;
        value
    }
}

impl RandomBits for BitSource {
    #[inline]
    fn next_bit(&mut self) -> bool {
        if self.available == 0 {
            self.refill();
        }
        self.position += 1;
        self.take(1) == 1
    }

    fn position(&self) -> u64 {
        self.position
    }

    fn next_bits(&mut self, count: u32) -> u64 {
        assert!(count <= 64, "at most 64 bits per call");
        if count == 0 {
            return 0;
        }
        self.position += count as u64;
        if count <= self.available {
            return self.take(count);
        }
        let head_len = self.available;
        let head = if head_len > 0 { self.take(head_len) } else { 0 };
        self.refill();
        let tail_len = count - head_len;
        let tail = self.take(tail_len);
        head.checked_shl(tail_len).unwrap_or(0) | tail
    }
}

/// Replays a fixed bit string. Panics when the script runs out.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBits {
    bits: Vec<bool>,
    position: usize,
}

impl ScriptedBits {
    pub fn new(bits: Vec<bool>) -> Self {
        ScriptedBits { bits, position: 0 }
    }

    /// Builds a script from a string of `0`/`1` characters; other characters
    /// are ignored.
    pub fn from_str_bits(text: &str) -> Self {
        ScriptedBits::new(
            text.chars()
                .filter_map(|c| match c {
                    '0' => Some(false),
                    '1' => Some(true),
                    _ => None,
                })
                .collect(),
        )
    }

    /// The `width` low bits of `value`, most significant first.
    pub fn from_word(value: u64, width: u32) -> Self {
        ScriptedBits::new((0..width).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.position
    }
}

impl RandomBits for ScriptedBits {
    fn next_bit(&mut self) -> bool {
        let bit = *self
            .bits
            .get(self.position)
            .expect("scripted bit source exhausted");
        self.position += 1;
        bit
    }

    fn position(&self) -> u64 {
        self.position as u64
    }
}

/// Seed of the `index`-th child stream: the `(index + 1)`-th output of a
/// SplitMix64 generator started at `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_core::RngCore;

    #[test]
    fn fresh_source() {
        let src = BitSource::new(0);
        assert_eq!(src.position(), 0);
        assert_eq!(src.seed(), 0);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = BitSource::new(42);
        let mut b = BitSource::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_bit(), b.next_bit());
        }
    }

    #[test]
    fn different_seeds_differ_early() {
        let mut a = BitSource::new(1);
        let mut b = BitSource::new(2);
        let differs = (0..128).any(|_| a.next_bit() != b.next_bit());
        assert!(differs);
    }

    #[test]
    fn bits_are_msb_first_from_blocks() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        let first = rng.next_u64();
        let second = rng.next_u64();
        let mut src = BitSource::new(9);
        let bits: Vec<bool> = (0..128).map(|_| src.next_bit()).collect();
        for i in 0..64 {
            assert_eq!(bits[i], (first >> (63 - i)) & 1 == 1);
            assert_eq!(bits[64 + i], (second >> (63 - i)) & 1 == 1);
        }
    }

    #[test]
    fn bit_accounting() {
        let mut src = BitSource::new(3);
        src.next_bit();
        assert_eq!(src.position(), 1);
        for _ in 0..10 {
            let u = src.next_uniform53();
            assert!((0.0..1.0).contains(&u));
        }
        assert_eq!(src.position(), 531);
    }

    #[test]
    fn bit_mean() {
        let mut src = BitSource::new(7);
        let ones = (0..1_000_000).filter(|_| src.next_bit()).count();
        let mean = ones as f64 / 1e6;
        assert!((0.498..=0.502).contains(&mean), "{mean}");
    }

    #[test]
    fn uniform_mean() {
        let mut src = BitSource::new(7);
        let sum: f64 = (0..100_000).map(|_| src.next_uniform53()).sum();
        let mean = sum / 1e5;
        assert!((0.494..=0.506).contains(&mean), "{mean}");
    }

    #[test]
    fn bernoulli_zero_is_free() {
        let mut src = BitSource::new(5);
        assert!(src.bernoulli_pow2(0));
        assert_eq!(src.position(), 0);
    }

    #[test]
    fn bernoulli_t1_uses_one_bit() {
        let mut zero = ScriptedBits::from_str_bits("0");
        assert!(zero.bernoulli_pow2(1));
        let mut one = ScriptedBits::from_str_bits("1");
        assert!(!one.bernoulli_pow2(1));
        assert_eq!(one.position(), 1);
    }

    #[test]
    fn bernoulli_exhaustive_prefixes() {
        for t in 0..=12u32 {
            let mut successes = 0;
            for prefix in 0..(1u64 << t) {
                let mut script = ScriptedBits::from_word(prefix, t);
                let success = script.bernoulli_pow2(t as u64);
                let used = script.position();
                if success {
                    successes += 1;
                    assert_eq!(prefix, 0);
                    assert_eq!(used, t as u64);
                } else {
                    // first 1 sits at position i (1-based) of the prefix
                    let i = t - (63 - prefix.leading_zeros());
                    assert_eq!(used, i as u64);
                }
            }
            assert_eq!(successes, 1, "t = {t}");
        }
    }

    #[test]
    fn bernoulli_t3_statistics() {
        let mut src = BitSource::new(11);
        let calls = 1_000_000;
        let hits = (0..calls).filter(|_| src.bernoulli_pow2(3)).count();
        let freq = hits as f64 / calls as f64;
        assert!((0.1237..=0.1263).contains(&freq), "{freq}");
        let per_call = src.position() as f64 / calls as f64;
        assert!((per_call - 1.75).abs() <= 0.0175, "{per_call}");
    }

    #[test]
    fn child_seeds_are_stable() {
        // first SplitMix64 output for state 0
        assert_eq!(child_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(child_seed(1, 0), child_seed(1, 1));
    }

    proptest! {
        #[test]
        fn block_reads_match_bitwise_reads(seed: u64, widths in prop::collection::vec(0u32..=64, 1..40)) {
            let mut fast = BitSource::new(seed);
            let mut slow = BitSource::new(seed);
            for w in widths {
                let expected = (0..w).fold(0u64, |acc, _| (acc << 1) | slow.next_bit() as u64);
                prop_assert_eq!(fast.next_bits(w), expected);
                prop_assert_eq!(fast.position(), slow.position());
            }
        }
    }
}
