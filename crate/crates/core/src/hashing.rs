//! Seeded hash functions used by the branching process and the baselines.
//!
//! [`TabulationHash`] is simple tabulation (Zobrist) hashing: one table of
//! 256 random words per input byte position, output is the XOR of the looked
//! up words. Tables are filled from a SplitMix64 stream started at the seed:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! word = z ^ (z >> 31)
//! ```
//!
//! filling position 0 entries 0..256 first, then position 1, and so on, so
//! any implementation given the same seed reproduces the same tables.
//!
//! Path hashing reads a 12-byte input: the 64-bit parent fingerprint
//! (little-endian, positions 0..8) followed by the 32-bit vertex
//! (little-endian, positions 8..12).

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function (a bijection on u64).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator, used to expand seeds into tables and sub-seeds.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }
}

/// Input width of path hashes: 8 fingerprint bytes + 4 vertex bytes.
pub const PATH_INPUT_BYTES: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TabulationHash {
    seed: u64,
    tables: Box<[[u64; 256]]>,
}

impl TabulationHash {
    /// A hash over 12-byte path inputs.
    pub fn new(seed: u64) -> Self {
        TabulationHash::with_width(seed, PATH_INPUT_BYTES)
    }

    /// A hash over inputs of up to `width` bytes.
    pub fn with_width(seed: u64, width: usize) -> Self {
        let mut rng = SplitMix64::new(seed);
        let tables = (0..width)
            .map(|_| {
                let mut table = [0u64; 256];
                table.iter_mut().for_each(|w| *w = rng.next_u64());
                table
            })
            .collect();
        TabulationHash { seed, tables }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn width(&self) -> usize {
        self.tables.len()
    }

    /// XOR of one table word per input byte; the empty input hashes to 0.
    ///
    /// Panics if `bytes` is longer than the table width.
    pub fn hash_bytes(&self, bytes: &[u8]) -> u64 {
        assert!(bytes.len() <= self.tables.len(), "input wider than tables");
        bytes
            .iter()
            .zip(self.tables.iter())
            .fold(0, |acc, (&b, table)| acc ^ table[b as usize])
    }

    /// Contribution of the fingerprint bytes (positions 0..8).
    #[inline]
    pub fn prefix_part(&self, fingerprint: u64) -> u64 {
        let t = &self.tables;
        let b = fingerprint.to_le_bytes();
        t[0][b[0] as usize]
            ^ t[1][b[1] as usize]
            ^ t[2][b[2] as usize]
            ^ t[3][b[3] as usize]
            ^ t[4][b[4] as usize]
            ^ t[5][b[5] as usize]
            ^ t[6][b[6] as usize]
            ^ t[7][b[7] as usize]
    }

    /// Contribution of the vertex bytes (positions 8..12).
    #[inline]
    pub fn vertex_part(&self, vertex: u32) -> u64 {
        let t = &self.tables;
        let b = vertex.to_le_bytes();
        t[8][b[0] as usize] ^ t[9][b[1] as usize] ^ t[10][b[2] as usize] ^ t[11][b[3] as usize]
    }

    /// Hash of the 12-byte input `(fingerprint, vertex)`.
    #[inline]
    pub fn hash_path(&self, fingerprint: u64, vertex: u32) -> u64 {
        self.prefix_part(fingerprint) ^ self.vertex_part(vertex)
    }
}

/// Compressed identity of a path in the branching process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathFingerprint {
    pub value: u64,
    pub depth: u32,
}

impl PathFingerprint {
    /// The level-0 path starting at `start`.
    pub fn root(start: u32) -> Self {
        PathFingerprint {
            value: u64::from(start),
            depth: 0,
        }
    }
}

/// `h(fp ∘ vertex)` read as the binary fraction `u / 2^64`.
pub fn threshold_value(h: &TabulationHash, fp: PathFingerprint, vertex: u32) -> f64 {
    h.hash_path(fp.value, vertex) as f64 * (-64f64).exp2()
}

/// Child fingerprint: the path hash passed through [`mix64`], so the child
/// identity is decorrelated from the threshold draw that admitted it.
pub fn extend_fingerprint(h: &TabulationHash, fp: PathFingerprint, vertex: u32) -> PathFingerprint {
    PathFingerprint {
        value: child_fingerprint(h.hash_path(fp.value, vertex)),
        depth: fp.depth + 1,
    }
}

#[inline]
pub(crate) fn child_fingerprint(path_hash: u64) -> u64 {
    mix64(path_hash)
}

/// `ceil(theta * 2^64)`, so that `u < cutoff` iff `u / 2^64 < theta`.
/// `None` means every value passes (`theta >= 1`).
pub fn fraction_cutoff(theta: f64) -> Option<u64> {
    if theta >= 1.0 {
        return None;
    }
    if theta <= 0.0 || theta.is_nan() {
        return Some(0);
    }
    Some((theta * 64f64.exp2()).ceil() as u64)
}

/// Strongly universal multiply-shift hashing of 32-bit keys to 64 bits:
/// `((a * x + b) mod 2^128) >> 64` with random 128-bit `a`, `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiplyShift {
    a: u128,
    b: u128,
}

impl MultiplyShift {
    pub fn from_rng(rng: &mut SplitMix64) -> Self {
        let word = |rng: &mut SplitMix64| (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64());
        MultiplyShift {
            a: word(rng),
            b: word(rng),
        }
    }

    #[inline]
    pub fn hash(&self, key: u32) -> u64 {
        (self.a.wrapping_mul(u128::from(key)).wrapping_add(self.b) >> 64) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0 (reference implementation).
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn tables_are_determined_by_seed() {
        assert_eq!(TabulationHash::new(0), TabulationHash::new(0));
        let a = TabulationHash::new(0);
        let b = TabulationHash::new(1);
        assert_ne!(a.tables, b.tables);
        assert_eq!(a.hash_bytes(&[]), 0);
    }

    #[test]
    fn path_hash_matches_byte_hash() {
        let h = TabulationHash::new(7);
        let fp = 0x0123_4567_89AB_CDEFu64;
        let v = 0xDEAD_BEEFu32;
        let mut bytes = fp.to_le_bytes().to_vec();
        bytes.extend_from_slice(&v.to_le_bytes());
        assert_eq!(h.hash_path(fp, v), h.hash_bytes(&bytes));
    }

    #[test]
    fn threshold_value_is_deterministic() {
        let h = TabulationHash::new(3);
        let fp = PathFingerprint::root(2);
        assert_eq!(threshold_value(&h, fp, 9), threshold_value(&h, fp, 9));
        let child = extend_fingerprint(&h, fp, 9);
        assert_eq!(child, extend_fingerprint(&h, fp, 9));
        assert_eq!(child.depth, 1);
    }

    #[test]
    fn threshold_value_is_uniform() {
        let h = TabulationHash::new(11);
        let mut rng = SplitMix64::new(99);
        let trials = 1_000_000;
        let (mut sum, mut below) = (0.0, 0usize);
        for _ in 0..trials {
            let fp = PathFingerprint {
                value: rng.next_u64(),
                depth: 1,
            };
            let u = threshold_value(&h, fp, rng.next_u64() as u32);
            sum += u;
            below += usize::from(u < 0.25);
        }
        let mean = sum / trials as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
        let frac = below as f64 / trials as f64;
        assert!((frac - 0.25).abs() < 0.002, "cdf {frac}");
    }

    #[test]
    fn distinct_children_do_not_collide() {
        let h = TabulationHash::new(5);
        let fp = PathFingerprint::root(0);
        let mut seen: Vec<u64> = (0..100_000u32).map(|v| extend_fingerprint(&h, fp, v).value).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 100_000);
    }

    #[test]
    fn pairwise_joint_probability() {
        // Pr[h(a) < alpha and h(b) < alpha'] over random table seeds.
        let (alpha, alpha2) = (0.3, 0.6);
        let trials = 40_000;
        let mut seeds = SplitMix64::new(2024);
        let hits = (0..trials)
            .filter(|_| {
                let h = TabulationHash::new(seeds.next_u64());
                let ua = threshold_value(&h, PathFingerprint::root(4), 17);
                let ub = threshold_value(&h, PathFingerprint::root(4), 18);
                ua < alpha && ub < alpha2
            })
            .count();
        let p = alpha * alpha2;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let observed = hits as f64 / trials as f64;
        assert!((observed - p).abs() < 3.0 * sigma, "{observed} vs {p}");
    }

    #[test]
    fn cutoff_is_exact_comparison() {
        assert_eq!(fraction_cutoff(1.0), None);
        assert_eq!(fraction_cutoff(2.5), None);
        assert_eq!(fraction_cutoff(0.5), Some(1 << 63));
        assert_eq!(fraction_cutoff(0.0), Some(0));
    }

    #[test]
    fn multiply_shift_is_roughly_uniform() {
        let mut rng = SplitMix64::new(1);
        let h = MultiplyShift::from_rng(&mut rng);
        let below = (0..100_000u32).filter(|&k| h.hash(k) < u64::MAX / 4).count();
        assert!((below as f64 / 100_000.0 - 0.25).abs() < 0.01);
    }
}
