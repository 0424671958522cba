//! Seeded pseudo-random generator shared by every deterministic step.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood 2014): a 64-bit state
//! advanced by the golden-ratio increment `0x9E3779B97F4A7C15` and finalized
//! with the `(30, 27, 31)` xor-shift/multiply mix. All derived draws below are
//! specified exactly so another implementation can reproduce outputs:
//!
//! * `below(n)`: rejection sampling on `next_u64`, discarding draws
//!   `>= u64::MAX - (u64::MAX % n)`, then `draw % n`.
//! * `next_f64`: top 53 bits of `next_u64` scaled by `2^-53`.
//! * `shuffle`: Fisher-Yates from the last index down, swapping `i` with
//!   `below(i + 1)`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Seed from a base seed plus a stream of labels, so independent
    /// consumers (groups, participants) get decorrelated sequences.
    pub fn derive(seed: u64, labels: &[u64]) -> Self {
        let mut state = mix(seed);
        for &label in labels {
            state = mix(state ^ mix(label.wrapping_add(GOLDEN_GAMMA)));
        }
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let draw = self.next_u64();
            if draw < zone {
                return draw % n;
            }
        }
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal draw (Box-Muller, cosine branch only).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; used to fold string salts into a seed label.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01B3);
    }
    hash
}
