//! Counter-based random numbers.
//!
//! Every random quantity in the crate is a pure function of a seed and a
//! short list of integer coordinates (cycle index, site, walker, step). The
//! mixing function is the SplitMix64 finalizer, applied once per word, so a
//! value can be recomputed anywhere without replaying a stream.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function applied to `x + GOLDEN`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a seed together with a sequence of words.
#[inline]
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &w in words {
        h = splitmix64(h ^ w);
    }
    h
}

/// Map 64 random bits to a double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derive a child seed from a parent seed and a textual label.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    // FNV-1a over the label keeps the derivation readable and stable.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix(parent, &[h])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval() {
        for i in 0..10_000u64 {
            let u = unit_f64(mix(3, &[i]));
            assert!((0.0..1.0).contains(&u));
        }
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }

    #[test]
    fn mixing_is_order_sensitive() {
        assert_ne!(mix(1, &[2, 3]), mix(1, &[3, 2]));
        assert_eq!(mix(1, &[2, 3]), mix(1, &[2, 3]));
        assert_ne!(derive_seed(42, "walkers"), derive_seed(42, "test-functions"));
    }

    #[test]
    fn uniform_mean_is_half() {
        let n = 200_000u64;
        let s: f64 = (0..n).map(|i| unit_f64(mix(99, &[i]))).sum();
        let mean = s / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4e-3, "{mean}");
    }
}
