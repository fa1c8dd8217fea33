//! Deterministic PRNG stack: splitmix64 seeds xoshiro256++ streams.
//!
//! Every stochastic operation in the crate draws from an explicitly passed
//! [`Stream`]. Streams are derived from (seed, salt...) tuples, never from
//! thread identity or global state, so identical inputs reproduce identical
//! outputs bit for bit.

/// splitmix64 (Steele, Lea, Flood 2014). Used only to expand small seeds
/// into xoshiro state and to combine seed components.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

/// xoshiro256++ (Blackman, Vigna 2019), state expanded from a u64 seed via
/// four splitmix64 draws.
#[derive(Clone, Debug)]
pub struct Stream {
    s: [u64; 4],
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        Stream {
            s: [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Lemire multiply-shift; the tiny modulo
    /// bias is irrelevant at the bounds used here and keeps the draw a
    /// fixed one-word consumption, which the reference oracle mirrors.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// A shuffled index vector 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

/// Combines seed components into a new stream seed. Simple splitmix64
/// sponge over the parts; order-sensitive.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut st: u64 = 0x243F6A8885A308D3;
    for &p in parts {
        st = SplitMix64::new(st ^ p).next_u64();
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    // Golden values frozen from an independent reference implementation
    // of splitmix64 / xoshiro256++ (see the published algorithms; the
    // splitmix64(0) value 0xe220a8397b1dcdaf is the canonical test vector).

    #[test]
    fn splitmix64_golden() {
        let mut sm = SplitMix64::new(0);
        assert_eq!(sm.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(sm.next_u64(), 0x6e789e6aa1b965f4);
        let mut sm = SplitMix64::new(42);
        assert_eq!(sm.next_u64(), 0xbdd732262feb6e95);
        assert_eq!(sm.next_u64(), 0x28efe333b266f103);
        assert_eq!(sm.next_u64(), 0x47526757130f9f52);
    }

    #[test]
    fn xoshiro_golden() {
        let mut x = Stream::from_seed(42);
        assert_eq!(x.next_u64(), 0xd0764d4f4476689f);
        assert_eq!(x.next_u64(), 0x519e4174576f3791);
        assert_eq!(x.next_u64(), 0xfbe07cfb0c24ed8c);
        assert_eq!(x.next_u64(), 0xb37d9f600cd835b8);
        let mut x0 = Stream::from_seed(0);
        assert_eq!(x0.next_u64(), 0x53175d61490b23df);
        assert_eq!(x0.next_u64(), 0x61da6f3dc380d507);
    }

    #[test]
    fn f64_golden_and_range() {
        let mut x = Stream::from_seed(42);
        assert_eq!(x.next_f64(), 0.8143051451229099);
        assert_eq!(x.next_f64(), 0.3188210400616611);
        assert_eq!(x.next_f64(), 0.9838941681774888);
        for _ in 0..1000 {
            let v = x.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn below_golden() {
        let mut x = Stream::from_seed(7);
        let draws: Vec<u64> = (0..8).map(|_| x.below(10)).collect();
        assert_eq!(draws, vec![0, 1, 7, 4, 9, 4, 7, 3]);
    }

    #[test]
    fn shuffle_golden() {
        let mut x = Stream::from_seed(2);
        let mut xs: Vec<usize> = (0..10).collect();
        x.shuffle(&mut xs);
        assert_eq!(xs, vec![8, 0, 9, 1, 3, 6, 2, 5, 4, 7]);

        let mut x = Stream::from_seed(2);
        let mut xs: Vec<usize> = (0..16).collect();
        x.shuffle(&mut xs);
        assert_eq!(xs, vec![0, 1, 4, 2, 11, 7, 10, 13, 6, 15, 14, 5, 3, 9, 8, 12]);
    }

    #[test]
    fn shuffle_preserves_multiset() {
        let mut x = Stream::from_seed(99);
        let mut xs: Vec<usize> = (0..257).collect();
        x.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..257).collect::<Vec<_>>());
    }

    #[test]
    fn derive_seed_golden() {
        assert_eq!(derive_seed(&[]), 0x243f6a8885a308d3);
        assert_eq!(derive_seed(&[42]), 0x64d910c6f79a9e85);
        assert_eq!(derive_seed(&[42, 7]), 0x004a47728290cf3a);
        // order matters
        assert_ne!(derive_seed(&[7, 42]), derive_seed(&[42, 7]));
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let mut a = Stream::from_seed(123);
        let mut b = Stream::from_seed(123);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
