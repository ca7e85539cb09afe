//! Reductions around the Chosen Path map: turning a locality-sensitive map
//! into a single-valued hash, mapping dense Hamming-space vectors to sparse
//! sets, splitting inputs into size classes, translating thresholds of
//! symmetric measures into intersection sizes, and OR-based dimension
//! reduction.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chosen_path::ChosenPath;
use crate::error::{Error, Result};
use crate::hashing::{mix64, SplitMix64, TabulationHash};
use crate::measure::MeasureKind;
use crate::set::SparseSet;

/// Vertex slot used when ordering map fingerprints; sentinel counters stay
/// below it so the two kinds of padded element never share an input.
const PATH_SLOT: u32 = u32::MAX;

/// An element of the padded map output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaddedElement {
    Path(u64),
    Sentinel { point: u64, counter: u32 },
}

/// 64-bit identity of a set, used to key its sentinels.
pub fn point_fingerprint(x: &SparseSet) -> u64 {
    x.iter()
        .fold(mix64(x.len() as u64), |h, v| mix64(h ^ u64::from(v)).rotate_left(17))
}

/// A single-valued hash derived from a map: pad `M(x)` to exactly `m`
/// elements with per-point sentinels and return the element that comes
/// first in a random order `pi`. If `|M(x)| >= m` the map output is dropped
/// and `m` sentinels are used instead.
#[derive(Clone, Debug)]
pub struct PaddedMapHash {
    map: ChosenPath,
    m: usize,
    order: TabulationHash,
}

impl PaddedMapHash {
    /// Padding size `m = ceil(8 * m1)` for a map with expected size bound `m1`.
    pub fn new(map: ChosenPath, m1: f64, order_seed: u64) -> Result<Self> {
        let m = (8.0 * m1).ceil();
        if !(m >= 1.0 && m < f64::from(PATH_SLOT)) {
            return Err(Error::parameter(format!("padding size {m} out of range")));
        }
        Ok(PaddedMapHash {
            map,
            m: m as usize,
            order: TabulationHash::new(order_seed),
        })
    }

    pub fn padding(&self) -> usize {
        self.m
    }

    pub fn map(&self) -> &ChosenPath {
        &self.map
    }

    fn rank(&self, e: PaddedElement) -> u64 {
        match e {
            PaddedElement::Path(fp) => self.order.hash_path(fp, PATH_SLOT),
            PaddedElement::Sentinel { point, counter } => self.order.hash_path(point, counter),
        }
    }

    /// The order-minimum of the padded set built from `paths` for the point
    /// with fingerprint `point`.
    pub fn hash_paths(&self, paths: &[u64], point: u64) -> PaddedElement {
        let (kept, pad) = if paths.len() < self.m {
            (paths, self.m - paths.len())
        } else {
            (&paths[..0], self.m)
        };
        let sentinels = (1..=pad as u32).map(|counter| PaddedElement::Sentinel { point, counter });
        kept.iter()
            .map(|&fp| PaddedElement::Path(fp))
            .chain(sentinels)
            .min_by_key(|&e| (self.rank(e), e_key(e)))
            .expect("padded set has m >= 1 elements")
    }

    pub fn hash(&self, x: &SparseSet) -> Result<PaddedElement> {
        let paths = self.map.evaluate(x)?;
        Ok(self.hash_paths(&paths.fingerprints, point_fingerprint(x)))
    }
}

/// Total tie-break for equal ranks.
fn e_key(e: PaddedElement) -> (u8, u64, u32) {
    match e {
        PaddedElement::Path(fp) => (0, fp, 0),
        PaddedElement::Sentinel { point, counter } => (1, point, counter),
    }
}

/// A dense bit vector. Coordinate `i` is bit `7 - i % 8` of byte `i / 8`,
/// so the hex form reads coordinates left to right, most significant bit
/// of the first digit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DenseBits {
    dim: usize,
    bytes: Vec<u8>,
}

impl DenseBits {
    pub fn zeros(dim: usize) -> Self {
        DenseBits {
            dim,
            bytes: vec![0; dim.div_ceil(8)],
        }
    }

    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut v = DenseBits::zeros(dim);
        rng.fill(v.bytes.as_mut_slice());
        v.clear_padding();
        v
    }

    fn clear_padding(&mut self) {
        let rem = self.dim % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= 0xFFu8 << (8 - rem);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.dim, "coordinate out of range");
        self.bytes[i / 8] ^= 1 << (7 - i % 8);
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &DenseBits) -> usize {
        self.bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Parses `ceil(dim / 4)` hex digits; bits past `dim` must be zero.
    pub fn from_hex(line: &str, dim: usize, line_no: usize) -> Result<Self> {
        let line = line.trim();
        let err = |message: String| Error::Parse { line: line_no, message };
        let digits = dim.div_ceil(4);
        if line.len() != digits {
            return Err(err(format!("expected {digits} hex digits, found {}", line.len())));
        }
        let mut v = DenseBits::zeros(dim);
        for (i, c) in line.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| err(format!("invalid hex digit {c:?}")))? as u8;
            v.bytes[i / 2] |= if i % 2 == 0 { nibble << 4 } else { nibble };
        }
        let padded = v.clone();
        v.clear_padding();
        if v != padded {
            return Err(err("bits beyond the dimension are set".into()));
        }
        Ok(v)
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.dim.div_ceil(4));
        for i in 0..self.dim.div_ceil(4) {
            let byte = self.bytes[i / 2];
            let nibble = if i % 2 == 0 { byte >> 4 } else { byte & 0xF };
            write!(s, "{nibble:x}").expect("writing to a String");
        }
        s
    }
}

/// Parameters of the dense-to-sparse transform `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    /// Input dimension `D`.
    pub source_dim: usize,
    /// Samples per block, `floor(sqrt(D) ln(1 / (b1 + eps)))`.
    pub tau: usize,
    /// Block width, `ceil(8 / eps)`.
    pub l: usize,
    /// Number of blocks, `floor(d / l)`.
    pub t: usize,
    pub b1: f64,
    pub eps: f64,
}

impl TransformParams {
    /// Parameters for input dimension `source_dim` and output dimension
    /// `target_dim`.
    pub fn new(source_dim: usize, target_dim: usize, b1: f64, eps: f64) -> Result<Self> {
        if source_dim == 0 || target_dim == 0 {
            return Err(Error::parameter("dimensions must be positive"));
        }
        if !(eps >= 1.0 / target_dim as f64 && b1 > 0.0 && b1 + eps < 1.0) {
            return Err(Error::parameter(format!(
                "need 1/d <= eps and 0 < b1 < b1 + eps < 1, got b1={b1}, eps={eps}"
            )));
        }
        let tau = ((source_dim as f64).sqrt() * (1.0 / (b1 + eps)).ln()).floor() as usize;
        let l = (8.0 / eps).ceil() as usize;
        let t = target_dim / l;
        if tau == 0 {
            return Err(Error::parameter("source dimension too small: tau = 0"));
        }
        if t == 0 {
            return Err(Error::parameter(format!(
                "target dimension {target_dim} is below the block width {l}"
            )));
        }
        Ok(TransformParams {
            source_dim,
            tau,
            l,
            t,
            b1,
            eps,
        })
    }

    /// Output dimension `t * l`.
    pub fn output_dim(&self) -> usize {
        self.t * self.l
    }
}

/// A sampled transform: per block, `tau` coordinates drawn with
/// replacement from `[D]` and a random function from `tau`-bit strings to
/// `[l]`.
///
/// The block function is a tabulation hash of the packed sample bits,
/// mixed with a per-block key before reduction to `[l]` so that blocks
/// collide independently.
#[derive(Clone, Debug)]
pub struct TransformT {
    params: TransformParams,
    indices: Vec<u32>,
    block_keys: Vec<u64>,
    g: TabulationHash,
}

impl TransformT {
    pub fn new(params: TransformParams, seed: u64) -> Result<Self> {
        if params.source_dim > u32::MAX as usize + 1 {
            return Err(Error::parameter("source dimension exceeds 2^32"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let indices = (0..params.t * params.tau)
            .map(|_| rng.gen_range(0..params.source_dim) as u32)
            .collect();
        let mut keys = SplitMix64::new(rng.gen());
        let block_keys = (0..params.t).map(|_| keys.next_u64()).collect();
        let g = TabulationHash::with_width(rng.gen(), params.tau.div_ceil(8));
        Ok(TransformT {
            params,
            indices,
            block_keys,
            g,
        })
    }

    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    /// The packed sample bits of block `b`.
    fn block_content(&self, x: &DenseBits, b: usize, buf: &mut Vec<u8>) {
        let tau = self.params.tau;
        buf.clear();
        buf.resize(tau.div_ceil(8), 0);
        for (i, &idx) in self.indices[b * tau..(b + 1) * tau].iter().enumerate() {
            if x.get(idx as usize) {
                buf[i / 8] |= 1 << (7 - i % 8);
            }
        }
    }

    /// `T(x)`: one element `b * l + g_b(x_b)` per block `b`.
    pub fn apply(&self, x: &DenseBits) -> Result<SparseSet> {
        if x.dim() != self.params.source_dim {
            return Err(Error::parameter(format!(
                "input has dimension {}, transform expects {}",
                x.dim(),
                self.params.source_dim
            )));
        }
        let l = self.params.l as u64;
        let mut buf = Vec::new();
        let dims = (0..self.params.t)
            .map(|b| {
                self.block_content(x, b, &mut buf);
                let h = mix64(self.g.hash_bytes(&buf) ^ self.block_keys[b]);
                let slot = ((u128::from(h) * u128::from(l)) >> 64) as u64;
                (b as u64 * l + slot) as u32
            })
            .collect();
        SparseSet::new(dims)
    }

    /// Fraction of blocks where `x` and `y` read identical sample bits.
    pub fn sample_agreement(&self, x: &DenseBits, y: &DenseBits) -> f64 {
        let (mut bx, mut by) = (Vec::new(), Vec::new());
        let same = (0..self.params.t)
            .filter(|&b| {
                self.block_content(x, b, &mut bx);
                self.block_content(y, b, &mut by);
                bx == by
            })
            .count();
        same as f64 / self.params.t as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeClass {
    /// `floor(log2 |x|)` shared by the members.
    pub class: u32,
    /// Original positions of the members, increasing.
    pub ids: Vec<usize>,
    pub points: Vec<SparseSet>,
}

/// Partitions points by `floor(log2 |x|)`; classes come out in increasing
/// order.
pub fn split_by_size(points: &[SparseSet]) -> Result<Vec<SizeClass>> {
    let mut classes: std::collections::BTreeMap<u32, SizeClass> = Default::default();
    for (id, x) in points.iter().enumerate() {
        if x.is_empty() {
            return Err(Error::EmptyPoint { id });
        }
        let class = x.len().ilog2();
        let entry = classes.entry(class).or_insert_with(|| SizeClass {
            class,
            ids: Vec::new(),
            points: Vec::new(),
        });
        entry.ids.push(id);
        entry.points.push(x.clone());
    }
    Ok(classes.into_values().collect())
}

/// Inverse of [`split_by_size`]: the points back in original order.
pub fn merge_size_classes(classes: &[SizeClass]) -> Vec<SparseSet> {
    let mut tagged: Vec<(usize, &SparseSet)> = classes
        .iter()
        .flat_map(|c| c.ids.iter().copied().zip(c.points.iter()))
        .collect();
    tagged.sort_by_key(|(id, _)| *id);
    tagged.into_iter().map(|(_, x)| x.clone()).collect()
}

/// `(i1, i2)` with `i1 = min{i : f(i) >= s1}` and `i2 = min{i : f(i) > s2}`
/// over `i = 0..=max_overlap`, for `f` nondecreasing.
pub fn threshold_translate(
    f: impl Fn(usize) -> f64,
    max_overlap: usize,
    s1: f64,
    s2: f64,
) -> Result<(usize, usize)> {
    if s2.partial_cmp(&s1) != Some(std::cmp::Ordering::Less) {
        return Err(Error::parameter(format!("need s2 < s1, got s1={s1}, s2={s2}")));
    }
    let i1 = (0..=max_overlap)
        .find(|&i| f(i) >= s1)
        .ok_or(Error::Infeasible { threshold: s1 })?;
    let i2 = (0..=max_overlap)
        .find(|&i| f(i) > s2)
        .expect("f(i1) >= s1 > s2");
    Ok((i1, i2))
}

/// Similarity as a function of the overlap for sets of sizes `tq`, `tx`.
/// Normalized Hamming is reported as the similarity `1 - r`.
pub fn overlap_profile(measure: MeasureKind, tq: usize, tx: usize) -> impl Fn(usize) -> f64 {
    let (tq, tx) = (tq as f64, tx as f64);
    move |i| {
        let i = i as f64;
        match measure {
            MeasureKind::BraunBlanquet => i / tq.max(tx),
            MeasureKind::Jaccard => i / (tq + tx - i),
            MeasureKind::Cosine => i / (tq * tx).sqrt(),
            MeasureKind::NormalizedHamming => 1.0 - (tq + tx - 2.0 * i) / (tq + tx),
        }
    }
}

/// `|I_j| = ceil(d / (2^(class+1) ln n))`, at least 1.
pub fn or_group_size(d: u32, class: u32, n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::parameter("n must be at least 2"));
    }
    let denom = 2f64.powi(class as i32 + 1) * (n as f64).ln();
    Ok(((f64::from(d) / denom).ceil() as usize).clamp(1, d.max(1) as usize))
}

/// Maps points of size class `class` from `[d]` to `[d_out]`: output
/// coordinate `j` is the OR of the input coordinates in a random set `I_j`.
pub fn dimension_reduce(
    points: &[SparseSet],
    class: u32,
    d: u32,
    d_out: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<SparseSet>> {
    if d_out < 1 {
        return Err(Error::parameter("target dimension must be at least 1"));
    }
    if d == 0 {
        return Err(Error::parameter("source dimension must be positive"));
    }
    if let Some(v) = points.iter().flat_map(|x| x.iter()).find(|&v| v >= d) {
        return Err(Error::parameter(format!("element {v} outside [0, {d})")));
    }
    let size = or_group_size(d, class, n)?;
    // inverted map: input coordinate -> output coordinates whose group holds it
    let mut inverse: Vec<Vec<u32>> = vec![Vec::new(); d as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..d_out {
        for v in sample(&mut rng, d as usize, size) {
            inverse[v].push(j as u32);
        }
    }
    Ok(points
        .iter()
        .map(|x| x.iter().flat_map(|v| inverse[v as usize].iter().copied()).collect())
        .collect())
}
