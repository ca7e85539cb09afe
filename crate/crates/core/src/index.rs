//! Similarity search indexes: the Chosen Path index, a MinHash LSH baseline
//! and a brute-force oracle.
//!
//! Both LSH indexes answer `(s1, s2)`-approximate queries the same way: walk
//! the repetitions in order, scan the buckets the query lands in, and return
//! the first candidate whose similarity to the query exceeds `s2`.
//! `candidates_scanned` counts every bucket entry examined, repeats included;
//! ids seen in an earlier bucket are not rescored, so `distinct_candidates`
//! counts similarity computations.
//!
//! [`cp_batch_query`] and [`minhash_batch_query`] return exactly what a built
//! index would return for a batch of queries, without materializing buckets
//! that no query probes. They exist for benchmarks where the full index would
//! not fit in memory.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chosen_path::{ceil_log_ratio, snapped_ceil, params_for, ChosenPath, ChosenPathParams};
use crate::error::{Error, Result};
use crate::hashing::{MultiplyShift, SplitMix64};
use crate::measure::MeasureKind;
use crate::set::SparseSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub found: Option<u32>,
    /// Similarity of `found` to the query.
    pub similarity: Option<f64>,
    /// Bucket entries examined, with multiplicity.
    pub candidates_scanned: u64,
    /// Distinct points scored.
    pub distinct_candidates: u64,
    pub buckets_probed: u64,
}

/// `ceil(log2 n) + 2`.
pub fn default_reps(n: usize) -> usize {
    let n = n.max(1) as u64;
    let log = 64 - (n - 1).leading_zeros() as usize;
    (if n == 1 { 0 } else { log }) + 2
}

fn check_points(points: &[SparseSet]) -> Result<()> {
    match points.iter().position(SparseSet::is_empty) {
        Some(id) => Err(Error::EmptyPoint { id }),
        None => Ok(()),
    }
}

fn check_id_range(n: usize) -> Result<()> {
    if n > u32::MAX as usize {
        return Err(Error::parameter("at most 2^32 - 1 points are supported"));
    }
    Ok(())
}

/// The map instances an index over `n` points uses, one per repetition.
pub fn cp_maps(n: usize, b1: f64, b2: f64, reps: usize, seed: u64) -> Result<Vec<ChosenPath>> {
    if reps == 0 {
        return Err(Error::parameter("at least one repetition is required"));
    }
    let mut seeds = SplitMix64::new(seed);
    (0..reps)
        .map(|_| params_for(n.max(1), b1, b2, seeds.next_u64()).map(ChosenPath::new))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpRep {
    pub map: ChosenPath,
    pub buckets: HashMap<u64, Vec<u32>>,
}

/// Chosen Path index: `R` independent maps, each with its own bucket table
/// from path fingerprints to the ids of points whose map contains the path.
#[derive(Clone, Debug, PartialEq)]
pub struct CpIndex {
    pub(crate) b1: f64,
    pub(crate) b2: f64,
    pub(crate) seed: u64,
    pub(crate) reps: Vec<CpRep>,
    pub(crate) points: Vec<SparseSet>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub n: usize,
    pub k: usize,
    pub w: usize,
    pub reps: usize,
    pub buckets: usize,
    /// Stored `(fingerprint, id)` pairs over all repetitions.
    pub entries: usize,
    /// `n * R * m1` with `m1 = n^rho * w / b1`, the expected-size bound.
    pub entries_bound: f64,
}

impl CpIndex {
    /// Builds with the default repetition count.
    pub fn build(points: Vec<SparseSet>, b1: f64, b2: f64, seed: u64) -> Result<Self> {
        let reps = default_reps(points.len());
        CpIndex::build_with_reps(points, b1, b2, reps, seed)
    }

    pub fn build_with_reps(
        points: Vec<SparseSet>,
        b1: f64,
        b2: f64,
        reps: usize,
        seed: u64,
    ) -> Result<Self> {
        check_points(&points)?;
        check_id_range(points.len())?;
        let maps = cp_maps(points.len(), b1, b2, reps, seed)?;
        let reps = maps
            .into_iter()
            .map(|map| {
                let paths = points
                    .par_iter()
                    .map(|x| map.evaluate(x))
                    .collect::<Result<Vec<_>>>()?;
                let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
                for (id, set) in paths.iter().enumerate() {
                    for &fp in &set.fingerprints {
                        buckets.entry(fp).or_default().push(id as u32);
                    }
                }
                Ok(CpRep { map, buckets })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CpIndex {
            b1,
            b2,
            seed,
            reps,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.b1, self.b2)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn reps(&self) -> &[CpRep] {
        &self.reps
    }

    pub fn points(&self) -> &[SparseSet] {
        &self.points
    }

    pub fn params(&self) -> impl Iterator<Item = &ChosenPathParams> {
        self.reps.iter().map(|r| r.map.params())
    }

    pub fn query(&self, q: &SparseSet) -> Result<QueryOutcome> {
        let mut scan = Scan::new(self.b2, MeasureKind::BraunBlanquet);
        for rep in &self.reps {
            let mq = rep.map.evaluate(q)?;
            for fp in &mq.fingerprints {
                scan.outcome.buckets_probed += 1;
                if let Some(ids) = rep.buckets.get(fp) {
                    if scan.scan(ids, &self.points, q)? {
                        return Ok(scan.outcome);
                    }
                }
            }
        }
        Ok(scan.outcome)
    }

    pub fn stats(&self) -> IndexStats {
        let n = self.points.len();
        let (k, w) = self
            .reps
            .first()
            .map_or((0, 0), |r| (r.map.params().k, r.map.params().w));
        let rho = ChosenPathParams::rho(self.b1, self.b2);
        let m1 = (n.max(1) as f64).powf(rho) * w as f64 / self.b1;
        IndexStats {
            n,
            k,
            w,
            reps: self.reps.len(),
            buckets: self.reps.iter().map(|r| r.buckets.len()).sum(),
            entries: self
                .reps
                .iter()
                .flat_map(|r| r.buckets.values())
                .map(Vec::len)
                .sum(),
            entries_bound: n as f64 * self.reps.len() as f64 * m1,
        }
    }
}

/// Per-query scan state shared by every query path.
struct Scan {
    s2: f64,
    measure: MeasureKind,
    visited: HashSet<u32>,
    outcome: QueryOutcome,
}

impl Scan {
    fn new(s2: f64, measure: MeasureKind) -> Self {
        Scan {
            s2,
            measure,
            visited: HashSet::new(),
            outcome: QueryOutcome::default(),
        }
    }

    /// Scores unseen ids in order; true once a candidate passes the filter.
    fn scan(&mut self, ids: &[u32], points: &[SparseSet], q: &SparseSet) -> Result<bool> {
        for &id in ids {
            self.outcome.candidates_scanned += 1;
            if !self.visited.insert(id) {
                continue;
            }
            self.outcome.distinct_candidates += 1;
            let s = self.measure.similarity(q, &points[id as usize])?;
            if s > self.s2 {
                self.outcome.found = Some(id);
                self.outcome.similarity = Some(s);
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Answers each query exactly as `CpIndex::build_with_reps(points, ..)`
/// followed by `query` would, keeping only buckets some query probes.
pub fn cp_batch_query(
    points: &[SparseSet],
    queries: &[SparseSet],
    b1: f64,
    b2: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<QueryOutcome>> {
    check_points(points)?;
    check_id_range(points.len())?;
    let maps = cp_maps(points.len(), b1, b2, reps, seed)?;
    let mut scans: Vec<Scan> = queries
        .iter()
        .map(|_| Scan::new(b2, MeasureKind::BraunBlanquet))
        .collect();
    let mut open: Vec<usize> = (0..queries.len()).collect();
    for map in &maps {
        if open.is_empty() {
            break;
        }
        let probes: Vec<SparseSet> = open.iter().map(|&i| queries[i].clone()).collect();
        let filter = map.probe_filter(&probes)?;
        let shared = points
            .par_iter()
            .map(|x| map.evaluate_within(x, &filter))
            .collect::<Result<Vec<_>>>()?;
        let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
        for (id, set) in shared.iter().enumerate() {
            for &fp in &set.fingerprints {
                buckets.entry(fp).or_default().push(id as u32);
            }
        }
        let mut still_open = Vec::with_capacity(open.len());
        for &qi in &open {
            let q = &queries[qi];
            let scan = &mut scans[qi];
            let mut hit = false;
            for fp in &map.evaluate(q)?.fingerprints {
                scan.outcome.buckets_probed += 1;
                if let Some(ids) = buckets.get(fp) {
                    if scan.scan(ids, points, q)? {
                        hit = true;
                        break;
                    }
                }
            }
            if !hit {
                still_open.push(qi);
            }
        }
        open = still_open;
    }
    Ok(scans.into_iter().map(|s| s.outcome).collect())
}

/// `(K, L)` for MinHash LSH: `K = ceil(ln n / ln(1/j2))` (at least 1) and
/// `L = ceil(3 n^rho)` with `rho = ln(1/j1) / ln(1/j2)`.
pub fn minhash_shape(n: usize, j1: f64, j2: f64) -> Result<(usize, usize)> {
    if !(0.0 < j2 && j2 < j1 && j1 < 1.0) {
        return Err(Error::parameter(format!(
            "thresholds need 0 < j2 < j1 < 1, got j1={j1}, j2={j2}"
        )));
    }
    let n = n.max(1) as f64;
    let k = ceil_log_ratio(n, j2);
    let rho = j1.ln() / j2.ln();
    let l = snapped_ceil(3.0 * n.powf(rho));
    Ok((k, l))
}

/// The `L x K` slot hash functions, drawn in row-major order from
/// `SplitMix64(seed)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinHashFamily {
    k: usize,
    slots: Vec<MultiplyShift>,
}

impl MinHashFamily {
    pub fn new(k: usize, l: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let slots = (0..k * l).map(|_| MultiplyShift::from_rng(&mut rng)).collect();
        MinHashFamily { k, slots }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.slots.len() / self.k
    }

    fn rep(&self, r: usize) -> &[MultiplyShift] {
        &self.slots[r * self.k..(r + 1) * self.k]
    }

    /// Element of `x` with the smallest hash (ties to the smaller element).
    fn argmin(h: &MultiplyShift, x: &SparseSet) -> Option<u32> {
        x.iter().min_by_key(|&v| (h.hash(v), v))
    }

    /// The K-tuple of argmin elements of `x` in repetition `r`.
    pub fn key(&self, r: usize, x: &SparseSet) -> Option<Box<[u32]>> {
        self.rep(r).iter().map(|h| Self::argmin(h, x)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinHashIndex {
    j1: f64,
    j2: f64,
    family: MinHashFamily,
    tables: Vec<HashMap<Box<[u32]>, Vec<u32>>>,
    points: Vec<SparseSet>,
}

impl MinHashIndex {
    pub fn build(points: Vec<SparseSet>, j1: f64, j2: f64, seed: u64) -> Result<Self> {
        check_points(&points)?;
        check_id_range(points.len())?;
        let (k, l) = minhash_shape(points.len(), j1, j2)?;
        let family = MinHashFamily::new(k, l, seed);
        let tables = (0..l)
            .into_par_iter()
            .map(|r| {
                let mut table: HashMap<Box<[u32]>, Vec<u32>> = HashMap::new();
                for (id, x) in points.iter().enumerate() {
                    let key = family.key(r, x).expect("points are nonempty");
                    table.entry(key).or_default().push(id as u32);
                }
                table
            })
            .collect();
        Ok(MinHashIndex {
            j1,
            j2,
            family,
            tables,
            points,
        })
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.j1, self.j2)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.family.k(), self.family.l())
    }

    pub fn query(&self, q: &SparseSet) -> Result<QueryOutcome> {
        let mut scan = Scan::new(self.j2, MeasureKind::Jaccard);
        for (r, table) in self.tables.iter().enumerate() {
            let Some(key) = self.family.key(r, q) else {
                break;
            };
            scan.outcome.buckets_probed += 1;
            if let Some(ids) = table.get(&key) {
                if scan.scan(ids, &self.points, q)? {
                    break;
                }
            }
        }
        Ok(scan.outcome)
    }
}

/// Answers each query exactly as `MinHashIndex::build(points, ..)` followed
/// by `query` would, without hashing every point in every repetition.
///
/// A point lands in the query's bucket iff it contains all K argmin elements
/// of the query and none of its other elements hashes lower, so candidates
/// come from the posting list of one argmin element and are confirmed
/// against the rest.
pub fn minhash_batch_query(
    points: &[SparseSet],
    queries: &[SparseSet],
    j1: f64,
    j2: f64,
    seed: u64,
) -> Result<Vec<QueryOutcome>> {
    check_points(points)?;
    check_id_range(points.len())?;
    let (k, l) = minhash_shape(points.len(), j1, j2)?;
    let family = MinHashFamily::new(k, l, seed);

    let mut wanted: Vec<u32> = queries.iter().flat_map(|q| q.iter()).collect();
    wanted.sort_unstable();
    wanted.dedup();
    let mut postings: HashMap<u32, Vec<u32>> = HashMap::new();
    for (id, x) in points.iter().enumerate() {
        for v in x.iter().filter(|v| wanted.binary_search(v).is_ok()) {
            postings.entry(v).or_default().push(id as u32);
        }
    }

    queries
        .par_iter()
        .map(|q| {
            let mut scan = Scan::new(j2, MeasureKind::Jaccard);
            for r in 0..l {
                let Some(key) = family.key(r, q) else {
                    break;
                };
                scan.outcome.buckets_probed += 1;
                let hs = family.rep(r);
                let pivot = key
                    .iter()
                    .min_by_key(|v| postings.get(v).map_or(0, Vec::len))
                    .expect("K >= 1");
                let Some(list) = postings.get(pivot) else {
                    continue;
                };
                let bucket: Vec<u32> = list
                    .iter()
                    .copied()
                    .filter(|&id| {
                        let x = &points[id as usize];
                        key.iter().all(|&a| x.contains(a))
                            && hs
                                .iter()
                                .zip(key.iter())
                                .all(|(h, &a)| MinHashFamily::argmin(h, x) == Some(a))
                    })
                    .collect();
                if scan.scan(&bucket, points, q)? {
                    break;
                }
            }
            Ok(scan.outcome)
        })
        .collect()
}

/// Exact best match by linear scan; ties go to the lowest id.
pub fn brute_force(points: &[SparseSet], q: &SparseSet, measure: MeasureKind) -> Result<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for (id, x) in points.iter().enumerate() {
        let s = measure.similarity(q, x)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id as u32, s));
        }
    }
    best.ok_or(Error::NoPoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng, universe: u32, len: usize) -> SparseSet {
        SparseSet::from_unsorted(
            sample(rng, universe as usize, len).into_iter().map(|v| v as u32).collect(),
        )
    }

    #[test]
    fn default_reps_values() {
        assert_eq!(default_reps(0), 2);
        assert_eq!(default_reps(1), 2);
        assert_eq!(default_reps(2), 3);
        assert_eq!(default_reps(1000), 12);
        assert_eq!(default_reps(1024), 12);
        assert_eq!(default_reps(1025), 13);
        assert_eq!(default_reps(10_000), 16);
    }

    #[test]
    fn empty_index_finds_nothing() {
        let idx = CpIndex::build(vec![], 0.5, 0.25, 1).unwrap();
        assert!(idx.is_empty());
        let out = idx.query(&SparseSet::new(vec![1, 2, 3]).unwrap()).unwrap();
        assert_eq!(out.found, None);
    }

    #[test]
    fn empty_point_is_rejected_with_id() {
        let points = vec![SparseSet::new(vec![1]).unwrap(), SparseSet::empty()];
        assert!(matches!(
            CpIndex::build(points.clone(), 0.5, 0.25, 1),
            Err(Error::EmptyPoint { id: 1 })
        ));
        assert!(matches!(
            MinHashIndex::build(points, 0.5, 0.25, 1),
            Err(Error::EmptyPoint { id: 1 })
        ));
    }

    #[test]
    fn buckets_hold_exactly_the_map_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points: Vec<_> = (0..50).map(|_| random_set(&mut rng, 500, 20)).collect();
        let idx = CpIndex::build_with_reps(points.clone(), 0.5, 0.2, 3, 9).unwrap();
        for rep in idx.reps() {
            assert!(rep.buckets.values().all(|ids| !ids.is_empty()));
            for (id, x) in points.iter().enumerate() {
                let mut stored: Vec<u64> = rep
                    .buckets
                    .iter()
                    .filter(|(_, ids)| ids.contains(&(id as u32)))
                    .map(|(&fp, _)| fp)
                    .collect();
                stored.sort_unstable();
                assert_eq!(stored, rep.map.evaluate(x).unwrap().fingerprints);
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points: Vec<_> = (0..100).map(|_| random_set(&mut rng, 2000, 32)).collect();
        let a = CpIndex::build(points.clone(), 1.0 / 3.0, 2.0 / 11.0, 5).unwrap();
        let b = CpIndex::build(points, 1.0 / 3.0, 2.0 / 11.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disjoint_query_is_never_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<_> = (0..200).map(|_| random_set(&mut rng, 10_000, 16)).collect();
        let idx = CpIndex::build(points.clone(), 0.5, 0.25, 6).unwrap();
        let mh = MinHashIndex::build(points, 0.5, 0.25, 6).unwrap();
        let q = SparseSet::new((20_000..20_016).collect()).unwrap();
        let out = idx.query(&q).unwrap();
        assert_eq!((out.found, out.candidates_scanned), (None, 0));
        assert_eq!(mh.query(&q).unwrap().found, None);
    }

    #[test]
    fn duplicate_is_found_with_high_probability() {
        // per repetition the duplicate collides with probability >= 1/2
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let points: Vec<_> = (0..30).map(|_| random_set(&mut rng, 3000, 24)).collect();
        let trials = 300;
        let reps = 3;
        let mut seeds = SplitMix64::new(60);
        let mut found = 0;
        for t in 0..trials {
            let idx = CpIndex::build_with_reps(points.clone(), 0.5, 0.25, reps, seeds.next_u64()).unwrap();
            let target = t % points.len();
            let out = idx.query(&points[target]).unwrap();
            if let Some(id) = out.found {
                assert!(out.similarity.unwrap() > 0.25);
                found += usize::from(id as usize == target);
            }
        }
        let rate = found as f64 / trials as f64;
        let bound = 1.0 - 0.5f64.powi(reps as i32);
        let se = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(rate >= bound - 3.0 * se, "rate {rate}");
    }

    #[test]
    fn entries_per_point_near_size_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<_> = (0..1000).map(|_| random_set(&mut rng, 1 << 20, 64)).collect();
        let idx = CpIndex::build_with_reps(points, 1.0 / 3.0, 2.0 / 11.0, 2, 70).unwrap();
        let stats = idx.stats();
        let ratio = stats.entries as f64 / stats.entries_bound;
        assert!((0.25..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn batch_query_matches_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut points: Vec<_> = (0..300).map(|_| random_set(&mut rng, 400, 20)).collect();
        let mut queries: Vec<_> = (0..40).map(|_| random_set(&mut rng, 400, 20)).collect();
        queries.push(points[17].clone());
        points.push(queries[3].clone());
        for seed in 0..3 {
            let idx = CpIndex::build_with_reps(points.clone(), 0.4, 0.2, 4, seed).unwrap();
            let batch = cp_batch_query(&points, &queries, 0.4, 0.2, 4, seed).unwrap();
            for (q, got) in queries.iter().zip(&batch) {
                assert_eq!(&idx.query(q).unwrap(), got);
            }
        }
    }

    #[test]
    fn minhash_shape_values() {
        // ln 1000 / ln 10 = 3, rho = ln 5 / ln 10
        let (k, l) = minhash_shape(1000, 0.2, 0.1).unwrap();
        assert_eq!(k, 3);
        assert_eq!(l, 375);
        assert!(minhash_shape(10, 0.1, 0.2).is_err());
    }

    #[test]
    fn minhash_batch_matches_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<_> = (0..200).map(|_| random_set(&mut rng, 60, 12)).collect();
        let mut queries: Vec<_> = (0..20).map(|_| random_set(&mut rng, 60, 12)).collect();
        queries.push(points[5].clone());
        let idx = MinHashIndex::build(points.clone(), 0.3, 0.15, 11).unwrap();
        let batch = minhash_batch_query(&points, &queries, 0.3, 0.15, 11).unwrap();
        for (q, got) in queries.iter().zip(&batch) {
            let want = idx.query(q).unwrap();
            assert_eq!(&want, got);
            if want.found.is_some() {
                assert!(want.similarity.unwrap() > 0.15);
            }
        }
    }

    #[test]
    fn minhash_duplicate_recall() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let points: Vec<_> = (0..1000).map(|_| random_set(&mut rng, 1 << 24, 32)).collect();
        let trials = 100;
        let mut seeds = SplitMix64::new(100);
        let hits = (0..trials)
            .filter(|_| {
                let q = &points[rng.gen_range(0..points.len())];
                let out = minhash_batch_query(&points, std::slice::from_ref(q), 0.2, 0.1, seeds.next_u64())
                    .unwrap();
                out[0].found.is_some()
            })
            .count();
        assert!(hits as f64 / trials as f64 >= 0.6, "{hits}");
    }

    #[test]
    fn brute_force_examples() {
        let points = vec![
            SparseSet::new(vec![1, 2, 3]).unwrap(),
            SparseSet::new(vec![2, 3, 4]).unwrap(),
            SparseSet::new(vec![2, 3, 5]).unwrap(),
        ];
        let q = SparseSet::new(vec![2, 3, 9]).unwrap();
        // tie between all three at 2/3: lowest id wins
        assert_eq!(brute_force(&points, &q, MeasureKind::BraunBlanquet).unwrap().0, 0);
        assert_eq!(brute_force(&points, &points[2], MeasureKind::Jaccard).unwrap(), (2, 1.0));
        assert!(matches!(
            brute_force(&[], &q, MeasureKind::Jaccard),
            Err(Error::NoPoints)
        ));
    }
}
