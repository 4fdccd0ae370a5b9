//! Deterministic counter-based random generator.
//!
//! Output `i` of stream `(seed, stream)` is the SplitMix64 finalizer applied
//! to `key(seed, stream) + (i+1)·0x9E3779B97F4A7C15`, so the whole sequence
//! is a pure function of `(seed, stream, i)` and is reproducible from the
//! documented constants alone (no platform or library state involved).
//! Constants are the classic Vigna SplitMix64 set.

use crate::math;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;
/// Separates stream derivation from counter advancement.
const STREAM_SALT: u64 = 0xD6E8_FEB8_6659_FD93;

fn finalize(state: u64) -> u64 {
    let mut x = state;
    x = (x ^ (x >> 30)).wrapping_mul(MIX_1);
    x = (x ^ (x >> 27)).wrapping_mul(MIX_2);
    x ^ (x >> 31)
}

/// Counter-mode generator: `(key, counter)` state, SplitMix64 output function.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Stream 0 of `seed`.
    pub fn new(seed: u64) -> Self {
        Self::stream(seed, 0)
    }

    /// Independent stream `stream` of `seed` (used to split work across
    /// samples or suites without sharing state).
    pub fn stream(seed: u64, stream: u64) -> Self {
        let key = finalize(seed ^ stream.wrapping_mul(STREAM_SALT));
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        finalize(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 significant bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform in `0..bound` (`bound > 0`), by rejection-free modulo of a
    /// 64-bit draw; bias is negligible for the desk-scale bounds used here.
    pub fn index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }

    /// Standard normal via Box–Muller (two uniform draws per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(core::f64::consts::TAU * u2)
    }
}
