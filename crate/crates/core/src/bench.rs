//! Planted-pair benchmark: recall and work of the Chosen Path index against
//! MinHash LSH and brute force.
//!
//! Every trial draws a fresh instance: a query of size `t`, optionally one
//! planted point sharing `ceil(b1 t)` elements with it, and decoys sharing
//! exactly `floor(b2 t)` elements. The remaining elements of each point come
//! from a universe disjoint from the query's, so the overlaps are exact and
//! the planted point is the only one with similarity above `b2`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chosen_path::ChosenPath;
use crate::error::{Error, Result};
use crate::hashing::SplitMix64;
use crate::index::{
    brute_force, cp_batch_query, cp_maps, default_reps, minhash_batch_query, minhash_shape,
    MinHashFamily, QueryOutcome,
};
use crate::measure::{convert_threshold, MeasureKind};
use crate::reductions::{overlap_profile, threshold_translate};
use crate::set::SparseSet;

/// Query elements are drawn below this bound, everything else above it.
const QUERY_UNIVERSE: u32 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub t: usize,
    pub b1: f64,
    pub b2: f64,
    pub trials: usize,
    pub seed: u64,
    /// Chosen Path repetitions; `None` means `ceil(log2 n) + 2`.
    pub reps: Option<usize>,
    /// Leave out the planted point (work measurements).
    pub decoys_only: bool,
    pub minhash: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 10_000,
            t: 64,
            b1: 1.0 / 3.0,
            b2: 2.0 / 11.0,
            trials: 200,
            seed: 0,
            reps: None,
            decoys_only: false,
            minhash: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedInstance {
    pub points: Vec<SparseSet>,
    pub query: SparseSet,
    pub planted: Option<u32>,
}

/// Overlap sizes `(planted, decoy)` for sets of size `t`.
pub fn planted_overlaps(t: usize, b1: f64, b2: f64) -> Result<(usize, usize)> {
    let f = overlap_profile(MeasureKind::BraunBlanquet, t, t);
    let (i1, i2) = threshold_translate(f, t, b1, b2)?;
    Ok((i1, i2 - 1))
}

fn fresh_elements(rng: &mut ChaCha8Rng, shared: Vec<u32>, t: usize) -> SparseSet {
    let mut dims = shared;
    while dims.len() < t {
        let v = rng.gen_range(QUERY_UNIVERSE..=u32::MAX);
        if !dims.contains(&v) {
            dims.push(v);
        }
    }
    SparseSet::from_unsorted(dims)
}

fn overlapping(rng: &mut ChaCha8Rng, q: &SparseSet, overlap: usize, t: usize) -> SparseSet {
    let shared = sample(rng, q.len(), overlap)
        .into_iter()
        .map(|i| q.as_slice()[i])
        .collect();
    fresh_elements(rng, shared, t)
}

pub fn planted_instance(
    n: usize,
    t: usize,
    b1: f64,
    b2: f64,
    with_planted: bool,
    seed: u64,
) -> Result<PlantedInstance> {
    if n == 0 || t == 0 {
        return Err(Error::parameter("n and t must be positive"));
    }
    if t > QUERY_UNIVERSE as usize {
        return Err(Error::parameter("t too large"));
    }
    let (planted_overlap, decoy_overlap) = planted_overlaps(t, b1, b2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let query = SparseSet::from_unsorted(
        sample(&mut rng, QUERY_UNIVERSE as usize, t)
            .into_iter()
            .map(|v| v as u32)
            .collect(),
    );
    let planted = with_planted.then(|| rng.gen_range(0..n) as u32);
    let points = (0..n)
        .map(|id| {
            let overlap = if Some(id as u32) == planted {
                planted_overlap
            } else {
                decoy_overlap
            };
            overlapping(&mut rng, &query, overlap, t)
        })
        .collect();
    Ok(PlantedInstance {
        points,
        query,
        planted,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    /// Fraction of trials where the query returned a point.
    pub recall: f64,
    /// Fraction of (trial, repetition) pairs where the planted point shares
    /// a bucket with the query; absent without a planted point.
    pub per_rep_recall: Option<f64>,
    /// Mean bucket entries examined per query.
    pub mean_candidates: f64,
    /// Mean distinct points scored per query.
    pub mean_distinct: f64,
    pub mean_buckets: f64,
    /// Returned points with similarity not above the lower threshold.
    pub false_accepts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: String,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub b1: f64,
    pub b2: f64,
    pub reps: usize,
    pub trials: usize,
    pub decoys_only: bool,
    /// Fraction of trials where the exact best match reaches `b1`.
    pub brute_force_recall: Option<f64>,
    pub chosen_path: Option<MethodStats>,
    pub minhash: Option<MethodStats>,
}

struct TrialResult {
    best: f64,
    cp: QueryOutcome,
    cp_false: bool,
    cp_rep_hits: Option<usize>,
    mh: Option<(QueryOutcome, bool, Option<usize>)>,
}

fn cp_rep_hits(maps: &[ChosenPath], q: &SparseSet, p: &SparseSet) -> Result<usize> {
    let mut hits = 0;
    for map in maps {
        let mq = map.evaluate(q)?;
        let mp = map.evaluate(p)?;
        hits += usize::from(mq.intersection_size(&mp) > 0);
    }
    Ok(hits)
}

fn is_false_accept(out: &QueryOutcome, q: &SparseSet, points: &[SparseSet], measure: MeasureKind, s2: f64) -> Result<bool> {
    match out.found {
        Some(id) => Ok(measure.similarity(q, &points[id as usize])? <= s2),
        None => Ok(false),
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    let reps = cfg.reps.unwrap_or_else(|| default_reps(cfg.n));
    let j1 = convert_threshold(cfg.b1, MeasureKind::BraunBlanquet, MeasureKind::Jaccard, 1.0)?;
    let j2 = convert_threshold(cfg.b2, MeasureKind::BraunBlanquet, MeasureKind::Jaccard, 1.0)?;
    planted_overlaps(cfg.t, cfg.b1, cfg.b2)?;
    if cfg.minhash {
        minhash_shape(cfg.n, j1, j2)?;
    }
    let mut seeds = SplitMix64::new(cfg.seed);
    let trial_seeds: Vec<[u64; 3]> = (0..cfg.trials)
        .map(|_| [seeds.next_u64(), seeds.next_u64(), seeds.next_u64()])
        .collect();

    let results = trial_seeds
        .par_iter()
        .map(|&[inst_seed, cp_seed, mh_seed]| {
            let inst = planted_instance(cfg.n, cfg.t, cfg.b1, cfg.b2, !cfg.decoys_only, inst_seed)?;
            let q = &inst.query;
            let (_, best) = brute_force(&inst.points, q, MeasureKind::BraunBlanquet)?;
            let cp = cp_batch_query(&inst.points, std::slice::from_ref(q), cfg.b1, cfg.b2, reps, cp_seed)?[0];
            let cp_false = is_false_accept(&cp, q, &inst.points, MeasureKind::BraunBlanquet, cfg.b2)?;
            let cp_rep_hits = match inst.planted {
                Some(p) => {
                    let maps = cp_maps(cfg.n, cfg.b1, cfg.b2, reps, cp_seed)?;
                    Some(cp_rep_hits(&maps, q, &inst.points[p as usize])?)
                }
                None => None,
            };
            let mh = if cfg.minhash {
                let out = minhash_batch_query(&inst.points, std::slice::from_ref(q), j1, j2, mh_seed)?[0];
                let false_accept = is_false_accept(&out, q, &inst.points, MeasureKind::Jaccard, j2)?;
                let hits = inst.planted.map(|p| {
                    let (k, l) = minhash_shape(cfg.n, j1, j2).expect("checked above");
                    let family = MinHashFamily::new(k, l, mh_seed);
                    let x = &inst.points[p as usize];
                    (0..l).filter(|&r| family.key(r, q) == family.key(r, x)).count()
                });
                Some((out, false_accept, hits))
            } else {
                None
            };
            Ok(TrialResult {
                best,
                cp,
                cp_false,
                cp_rep_hits,
                mh,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let trials = results.len();
    let mut report = BenchReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        n: cfg.n,
        t: cfg.t,
        b1: cfg.b1,
        b2: cfg.b2,
        reps,
        trials,
        decoys_only: cfg.decoys_only,
        brute_force_recall: None,
        chosen_path: None,
        minhash: None,
    };
    if trials == 0 {
        return Ok(report);
    }
    let tf = trials as f64;
    let frac = |count: usize| count as f64 / tf;
    report.brute_force_recall = Some(frac(results.iter().filter(|r| r.best >= cfg.b1).count()));
    report.chosen_path = Some(summarize(
        results.iter().map(|r| (&r.cp, r.cp_false, r.cp_rep_hits)),
        reps,
        tf,
    ));
    if cfg.minhash {
        let (_, l) = minhash_shape(cfg.n, j1, j2)?;
        report.minhash = Some(summarize(
            results.iter().filter_map(|r| r.mh.as_ref().map(|(o, f, h)| (o, *f, *h))),
            l,
            tf,
        ));
    }
    Ok(report)
}

fn summarize<'a>(
    rows: impl Iterator<Item = (&'a QueryOutcome, bool, Option<usize>)>,
    reps: usize,
    trials: f64,
) -> MethodStats {
    let mut s = MethodStats::default();
    let mut rep_hits = Some(0usize);
    for (out, false_accept, hits) in rows {
        s.recall += f64::from(u8::from(out.found.is_some()));
        s.mean_candidates += out.candidates_scanned as f64;
        s.mean_distinct += out.distinct_candidates as f64;
        s.mean_buckets += out.buckets_probed as f64;
        s.false_accepts += usize::from(false_accept);
        rep_hits = rep_hits.zip(hits).map(|(a, b)| a + b);
    }
    s.recall /= trials;
    s.mean_candidates /= trials;
    s.mean_distinct /= trials;
    s.mean_buckets /= trials;
    s.per_rep_recall = rep_hits.map(|h| h as f64 / (trials * reps as f64));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::braun_blanquet;

    #[test]
    fn overlaps_for_default_parameters() {
        assert_eq!(planted_overlaps(64, 1.0 / 3.0, 2.0 / 11.0).unwrap(), (22, 11));
    }

    #[test]
    fn instance_has_exact_overlaps() {
        let inst = planted_instance(300, 64, 1.0 / 3.0, 2.0 / 11.0, true, 4).unwrap();
        let p = inst.planted.unwrap() as usize;
        for (id, x) in inst.points.iter().enumerate() {
            assert_eq!(x.len(), 64);
            let b = braun_blanquet(&inst.query, x).unwrap();
            let want = if id == p { 22.0 / 64.0 } else { 11.0 / 64.0 };
            assert_eq!(b, want);
        }
        let again = planted_instance(300, 64, 1.0 / 3.0, 2.0 / 11.0, true, 4).unwrap();
        assert_eq!(again, inst);
        let none = planted_instance(10, 64, 1.0 / 3.0, 2.0 / 11.0, false, 4).unwrap();
        assert_eq!(none.planted, None);
    }

    #[test]
    fn zero_trials_give_empty_report() {
        let cfg = BenchConfig {
            trials: 0,
            ..Default::default()
        };
        let r = run_bench(&cfg).unwrap();
        assert_eq!(r.trials, 0);
        assert!(r.chosen_path.is_none() && r.minhash.is_none());
    }

    #[test]
    fn small_bench_is_deterministic_and_sound() {
        let cfg = BenchConfig {
            n: 500,
            trials: 10,
            seed: 3,
            ..Default::default()
        };
        let a = run_bench(&cfg).unwrap();
        assert_eq!(a, run_bench(&cfg).unwrap());
        let cp = a.chosen_path.unwrap();
        assert_eq!(cp.false_accepts, 0);
        assert_eq!(a.minhash.unwrap().false_accepts, 0);
        assert_eq!(a.brute_force_recall, Some(1.0));
        assert!(cp.recall >= 0.8);
    }
}
