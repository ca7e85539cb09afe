//! The Chosen Path locality-sensitive map.
//!
//! A map instance is defined by `k` level hash functions and a width `w`.
//! Evaluation on a set `x` starts from the `w` root paths and, at each level
//! `i`, extends every surviving path `p` by every `j ∈ x` for which
//! `h_i(p ∘ j) < min(1, 1 / (b1 |x|))`. The paths alive after level `k` are
//! the output. Each path is carried as a 64-bit fingerprint, so the output
//! is a sorted list of fingerprints.
//!
//! Two sets share a path only through vertices in their intersection, and
//! the admission test for a given `p ∘ j` sees the same hash value for both
//! sets, which is what makes overlapping outputs likely for similar sets.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{child_fingerprint, fraction_cutoff, TabulationHash};
use crate::set::SparseSet;

/// Default cap on live paths during one evaluation.
pub const DEFAULT_FRONTIER_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChosenPathParams {
    pub b1: f64,
    pub k: usize,
    pub w: usize,
    pub master_seed: u64,
    pub level_seeds: Vec<u64>,
}

impl ChosenPathParams {
    /// Parameters with level seeds derived from `master_seed`:
    /// level `i` (1-based) uses `master_seed ^ i`.
    pub fn new(b1: f64, k: usize, w: usize, master_seed: u64) -> Result<Self> {
        if !(b1 > 0.0 && b1 < 1.0) {
            return Err(Error::parameter(format!("b1 must lie in (0, 1), got {b1}")));
        }
        if k == 0 || w == 0 {
            return Err(Error::parameter("depth and width must be positive"));
        }
        if w > u32::MAX as usize {
            return Err(Error::parameter("width must fit in 32 bits"));
        }
        Ok(ChosenPathParams {
            b1,
            k,
            w,
            master_seed,
            level_seeds: level_seeds(master_seed, k),
        })
    }

    /// Exponent `log(1/b1) / log(1/b2)` implied by the thresholds.
    pub fn rho(b1: f64, b2: f64) -> f64 {
        b1.ln() / b2.ln()
    }
}

pub fn level_seeds(master_seed: u64, k: usize) -> Vec<u64> {
    (1..=k as u64).map(|i| master_seed ^ i).collect()
}

/// `k = ceil(ln n / ln(1/b2))` clamped to at least 1, `w = 2k`.
pub fn params_for(n: usize, b1: f64, b2: f64, master_seed: u64) -> Result<ChosenPathParams> {
    if !(0.0 < b2 && b2 < b1 && b1 < 1.0) {
        return Err(Error::parameter(format!(
            "thresholds need 0 < b2 < b1 < 1, got b1={b1}, b2={b2}"
        )));
    }
    if n == 0 {
        return Err(Error::parameter("n must be positive"));
    }
    let k = ceil_log_ratio(n as f64, b2);
    ChosenPathParams::new(b1, k, 2 * k, master_seed)
}

/// `ceil(ln n / ln(1/b))`, at least 1. Ratios within 1e-12 of an integer
/// count as that integer, so exact powers (`n = 10^3`, `b = 1/10`) are not
/// pushed up a level by rounding in the logarithms.
pub(crate) fn ceil_log_ratio(n: f64, b: f64) -> usize {
    snapped_ceil(n.ln() / (1.0 / b).ln()).max(1)
}

/// Ceiling that treats values within a relative 1e-12 of an integer as
/// that integer.
pub(crate) fn snapped_ceil(v: f64) -> usize {
    let nearest = v.round();
    let v = if (v - nearest).abs() <= 1e-12 * nearest.abs().max(1.0) { nearest } else { v };
    v.ceil() as usize
}

/// The sorted, duplicate-free fingerprints of the depth-`k` paths.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    pub depth: usize,
    pub fingerprints: Vec<u64>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.fingerprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fingerprints.is_empty()
    }

    pub fn intersection_size(&self, other: &PathSet) -> usize {
        sorted_intersection_size(&self.fingerprints, &other.fingerprints)
    }
}

pub(crate) fn sorted_intersection_size(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Fingerprints of every path that some probe keeps alive, level by level,
/// plus the union of the probes' elements. Evaluating a set against it
/// yields exactly the part of its output shared with at least one probe.
#[derive(Clone, Debug, Default)]
pub struct ProbeFilter {
    levels: Vec<HashSet<u64>>,
    elements: Vec<u32>,
}

impl ProbeFilter {
    pub fn elements(&self) -> &[u32] {
        &self.elements
    }

    pub fn final_level(&self) -> &HashSet<u64> {
        self.levels.last().expect("filter has at least one level")
    }
}

/// A sampled map: parameters plus the materialized level hash functions.
#[derive(Clone, Debug)]
pub struct ChosenPath {
    params: ChosenPathParams,
    levels: Vec<TabulationHash>,
    frontier_cap: usize,
}

impl PartialEq for ChosenPath {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.frontier_cap == other.frontier_cap
    }
}

impl ChosenPath {
    pub fn new(params: ChosenPathParams) -> Self {
        let levels = params.level_seeds.iter().map(|&s| TabulationHash::new(s)).collect();
        ChosenPath {
            params,
            levels,
            frontier_cap: DEFAULT_FRONTIER_CAP,
        }
    }

    pub fn with_frontier_cap(mut self, cap: usize) -> Self {
        self.frontier_cap = cap;
        self
    }

    pub fn params(&self) -> &ChosenPathParams {
        &self.params
    }

    pub fn frontier_cap(&self) -> usize {
        self.frontier_cap
    }

    fn cutoff(&self, set_len: usize) -> Option<u64> {
        fraction_cutoff(1.0 / (self.params.b1 * set_len as f64))
    }

    fn roots(&self) -> Vec<u64> {
        (0..self.params.w as u64).collect()
    }

    /// Runs levels `1..=k` over `vertices`, admitting children against the
    /// threshold for a set of size `set_len`. `keep` can drop children after
    /// admission (used for probe filtering).
    fn expand(
        &self,
        vertices: &[u32],
        set_len: usize,
        keep: impl Fn(usize, u64) -> bool,
        mut on_level: impl FnMut(usize, &[u64]),
    ) -> Result<Vec<u64>> {
        let cutoff = self.cutoff(set_len);
        let mut frontier = self.roots();
        on_level(0, &frontier);
        let mut parts = Vec::with_capacity(vertices.len());
        let mut next = Vec::new();
        for (depth, h) in self.levels.iter().enumerate() {
            let level = depth + 1;
            parts.clear();
            parts.extend(vertices.iter().map(|&v| h.vertex_part(v)));
            next.clear();
            for &fp in &frontier {
                let prefix = h.prefix_part(fp);
                match cutoff {
                    Some(cut) => {
                        for &part in &parts {
                            let u = prefix ^ part;
                            if u < cut {
                                let child = child_fingerprint(u);
                                if keep(level, child) {
                                    next.push(child);
                                }
                            }
                        }
                    }
                    None => {
                        for &part in &parts {
                            let child = child_fingerprint(prefix ^ part);
                            if keep(level, child) {
                                next.push(child);
                            }
                        }
                    }
                }
                if next.len() > self.frontier_cap {
                    return Err(Error::MapBlowUp {
                        level,
                        cap: self.frontier_cap,
                    });
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            on_level(level, &frontier);
        }
        frontier.sort_unstable();
        frontier.dedup();
        Ok(frontier)
    }

    /// `M_k(x)`.
    pub fn evaluate(&self, x: &SparseSet) -> Result<PathSet> {
        let fingerprints = self.expand(x.as_slice(), x.len(), |_, _| true, |_, _| {})?;
        Ok(PathSet {
            depth: self.params.k,
            fingerprints,
        })
    }

    /// `|M_i(x)|` for every level `i = 0..=k`.
    pub fn level_sizes(&self, x: &SparseSet) -> Result<Vec<usize>> {
        let mut sizes = Vec::with_capacity(self.params.k + 1);
        self.expand(x.as_slice(), x.len(), |_, _| true, |_, level| sizes.push(level.len()))?;
        Ok(sizes)
    }

    /// Collects every level of the probes' maps into a filter.
    pub fn probe_filter(&self, probes: &[SparseSet]) -> Result<ProbeFilter> {
        let mut levels = vec![HashSet::new(); self.params.k + 1];
        let mut elements = Vec::new();
        for q in probes {
            elements.extend_from_slice(q.as_slice());
            self.expand(q.as_slice(), q.len(), |_, _| true, |i, level| {
                levels[i].extend(level.iter().copied())
            })?;
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(ProbeFilter { levels, elements })
    }

    /// `M_k(x)` restricted to paths some probe also reaches. Identical to
    /// filtering [`ChosenPath::evaluate`] by the probes' final level, but
    /// only explores paths that stay inside the probes' path trees.
    pub fn evaluate_within(&self, x: &SparseSet, filter: &ProbeFilter) -> Result<PathSet> {
        let shared = SparseSet::from_unsorted(
            x.iter().filter(|v| filter.elements.binary_search(v).is_ok()).collect(),
        );
        if shared.is_empty() {
            return Ok(PathSet {
                depth: self.params.k,
                fingerprints: Vec::new(),
            });
        }
        let fingerprints = self.expand(
            shared.as_slice(),
            x.len(),
            |level, child| filter.levels[level].contains(&child),
            |_, _| {},
        )?;
        Ok(PathSet {
            depth: self.params.k,
            fingerprints,
        })
    }

    /// Surviving paths spelled out as `(root, vertices)`; for inspection and
    /// testing. Fingerprints are only used as hash inputs.
    pub fn trace(&self, x: &SparseSet) -> Result<Vec<(u32, Vec<u32>)>> {
        let cutoff = self.cutoff(x.len());
        let mut frontier: Vec<(u64, u32, Vec<u32>)> =
            self.roots().into_iter().map(|r| (r, r as u32, Vec::new())).collect();
        for h in &self.levels {
            let mut next = Vec::new();
            for (fp, root, path) in &frontier {
                for v in x.iter() {
                    let u = h.hash_path(*fp, v);
                    if cutoff.is_none_or(|cut| u < cut) {
                        let mut extended = path.clone();
                        extended.push(v);
                        next.push((child_fingerprint(u), *root, extended));
                    }
                }
                if next.len() > self.frontier_cap {
                    return Err(Error::MapBlowUp {
                        level: path_len(&next),
                        cap: self.frontier_cap,
                    });
                }
            }
            frontier = next;
        }
        Ok(frontier.into_iter().map(|(_, root, path)| (root, path)).collect())
    }
}

fn path_len(paths: &[(u64, u32, Vec<u32>)]) -> usize {
    paths.first().map_or(0, |p| p.2.len())
}

/// One-shot evaluation of `M_k(x)` for the given parameters.
pub fn evaluate_map(params: &ChosenPathParams, x: &SparseSet) -> Result<PathSet> {
    ChosenPath::new(params.clone()).evaluate(x)
}

/// Analytic reference values at level `i` for a pair with similarity `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedBounds {
    /// `(1/b1)^i w`, the bound on `E|M_i(x)|`.
    pub size: f64,
    /// `(B/b1)^i w`, the bound on `E|M_i(x) ∩ M_i(y)|`.
    pub intersection: f64,
    /// `w / (i + w)`, the Chebyshev bound on `Pr[M_i(x) ∩ M_i(y) ≠ ∅]`.
    pub collision: f64,
}

pub fn expected_bounds(params: &ChosenPathParams, level: usize, similarity: f64) -> ExpectedBounds {
    let w = params.w as f64;
    let i = level as i32;
    ExpectedBounds {
        size: (1.0 / params.b1).powi(i) * w,
        intersection: (similarity / params.b1).powi(i) * w,
        collision: w / (level as f64 + w),
    }
}
