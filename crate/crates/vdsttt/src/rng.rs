//! Counter-based random streams.
//!
//! Every random decision in the crate is a pure function of a key tuple
//! (seed, domain, identifiers..., counter). Streams never share mutable
//! state, so results do not depend on evaluation order or thread schedule,
//! and candidate pools nest across pool sizes by construction: stream `j`
//! draws the same values whether the pool has 4 or 16 members.

/// Domain tags keep independent uses of the same seed from colliding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Sampler = 1,
    NoisyVerifier = 2,
    ParamInit = 3,
    DataGen = 4,
    Shuffle = 5,
    EvalSampler = 6,
    AdapterInit = 7,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Good enough statistically for sampling and
/// initialization; not a cryptographic primitive.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a list of key parts into a single 64-bit stream key.
fn fold_key(seed: u64, parts: &[u64]) -> u64 {
    let mut state = mix64(seed);
    for &p in parts {
        state = mix64(state ^ p.wrapping_mul(GOLDEN));
    }
    state
}

/// A stateless-keyed stream: the n-th draw is `mix64(key + n)`, so any draw
/// can be reproduced from (key parts, draw index) alone.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, domain: Domain, parts: &[u64]) -> Self {
        let mut all = Vec::with_capacity(parts.len() + 1);
        all.push(domain as u64);
        all.extend_from_slice(parts);
        StreamRng { key: fold_key(seed, &all), counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). n must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        // Multiply-shift; bias is negligible for the small n used here.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn range_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Deterministic Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below((i + 1) as u64) as usize;
            items.swap(i, j);
        }
    }
}

/// One-shot uniform draw for fully keyed decisions (e.g. a verifier flip for
/// candidate k of query q): no stream state to thread around.
pub fn keyed_unit_f64(seed: u64, domain: Domain, parts: &[u64]) -> f64 {
    let mut all = Vec::with_capacity(parts.len() + 1);
    all.push(domain as u64);
    all.extend_from_slice(parts);
    (mix64(fold_key(seed, &all)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derive a sub-seed, e.g. a per-iteration sampler seed.
pub fn derive_seed(seed: u64, domain: Domain, parts: &[u64]) -> u64 {
    let mut all = Vec::with_capacity(parts.len() + 1);
    all.push(domain as u64);
    all.extend_from_slice(parts);
    fold_key(seed, &all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = StreamRng::new(7, Domain::Sampler, &[3, 1]);
        let mut b = StreamRng::new(7, Domain::Sampler, &[3, 1]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_keys_decorrelate() {
        let mut a = StreamRng::new(7, Domain::Sampler, &[3, 1]);
        let mut b = StreamRng::new(7, Domain::Sampler, &[3, 2]);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn unit_draws_cover_unit_interval() {
        let mut r = StreamRng::new(0, Domain::DataGen, &[]);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| r.next_f64()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let mut r = StreamRng::new(1, Domain::Shuffle, &[]);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[r.below(5) as usize] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 600.0, "counts {counts:?}");
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut r = StreamRng::new(2, Domain::ParamInit, &[]);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
