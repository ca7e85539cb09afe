//! Monte Carlo verification harnesses behind `chosen-path verify`.
//!
//! Each harness returns a list of [`Check`]s. Equalities pass when the
//! estimate lies within 4 standard errors of the target; one-sided bounds
//! carry their own slack (`se_slack` standard errors, often zero).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{mean_se, verify_map_properties};
use crate::chosen_path::{params_for, ChosenPath, ChosenPathParams};
use crate::error::{Error, Result};
use crate::hashing::SplitMix64;
use crate::measure::braun_blanquet;
use crate::reductions::{DenseBits, PaddedMapHash, TransformParams, TransformT};
use crate::set::SparseSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Equal,
    AtLeast,
    AtMost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub relation: Relation,
    pub se_slack: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, estimate: f64, se: f64, target: f64, relation: Relation, se_slack: f64) -> Self {
        let slack = se_slack * se;
        let passed = match relation {
            Relation::Equal => (estimate - target).abs() <= slack,
            Relation::AtLeast => estimate >= target - slack,
            Relation::AtMost => estimate <= target + slack,
        };
        Check {
            name: name.into(),
            estimate,
            se,
            target,
            relation,
            se_slack,
            passed,
        }
    }
}

/// A random `t`-set and partners sharing exactly `overlaps[i]` elements
/// with it, all of size `t`.
pub fn pair_family(t: usize, overlaps: &[usize], seed: u64) -> Result<(SparseSet, Vec<SparseSet>)> {
    if overlaps.iter().any(|&o| o > t) {
        return Err(Error::parameter("overlap larger than the set size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe = 1usize << 30;
    let x: Vec<u32> = sample(&mut rng, universe, t).into_iter().map(|v| v as u32).collect();
    let partners = overlaps
        .iter()
        .enumerate()
        .map(|(i, &o)| {
            // fresh elements live in their own band above the base set's
            let band = (i as u32 + 1) << 30;
            let mut dims: Vec<u32> = x[..o].to_vec();
            dims.extend(
                sample(&mut rng, universe, t - o)
                    .into_iter()
                    .map(|v| band | v as u32),
            );
            SparseSet::from_unsorted(dims)
        })
        .collect();
    Ok((SparseSet::from_unsorted(x), partners))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapVerifyConfig {
    pub t: usize,
    pub n: usize,
    pub b1: f64,
    pub b2: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for MapVerifyConfig {
    fn default() -> Self {
        MapVerifyConfig {
            t: 64,
            n: 10_000,
            b1: 1.0 / 3.0,
            b2: 2.0 / 11.0,
            trials: 10_000,
            seed: 0,
        }
    }
}

/// Size, shared-path and collision properties of the map with `k`, `w`
/// chosen for `n` points. Pairs use the realized overlaps `floor(b2 t)`
/// and `ceil(b1 t)`, and the shared-path target uses the realized
/// similarity.
pub fn verify_map(cfg: &MapVerifyConfig) -> Result<(ChosenPathParams, Vec<Check>)> {
    if cfg.trials < 2 {
        return Err(Error::parameter("need at least 2 trials"));
    }
    let params = params_for(cfg.n, cfg.b1, cfg.b2, 0)?;
    let (k, w) = (params.k, params.w);
    let low = (cfg.b2 * cfg.t as f64).floor() as usize;
    let high = ((cfg.b1 * cfg.t as f64).ceil() as usize).min(cfg.t);
    let (x, partners) = pair_family(cfg.t, &[low, high], cfg.seed)?;
    let mut seeds = SplitMix64::new(cfg.seed);
    let far = verify_map_properties(cfg.b1, k, w, &x, &partners[0], cfg.trials, seeds.next_u64())?;
    let near = verify_map_properties(cfg.b1, k, w, &x, &partners[1], cfg.trials, seeds.next_u64())?;

    // the expectations are exact once the admission threshold is below 1
    let exact = cfg.t as f64 * cfg.b1 >= 1.0;
    let rel = if exact { Relation::Equal } else { Relation::AtMost };
    let checks = vec![
        Check::new("map size", far.mean_size, far.se_size, far.bounds.size, rel, 4.0),
        Check::new(
            format!("shared paths at B={}", far.similarity),
            far.mean_shared,
            far.se_shared,
            far.bounds.intersection,
            rel,
            4.0,
        ),
        Check::new(
            format!("collision at B={} vs 1/2", near.similarity),
            near.collision_rate,
            near.se_collision,
            0.5,
            Relation::AtLeast,
            0.0,
        ),
        Check::new(
            format!("collision at B={} vs w/(k+w)", near.similarity),
            near.collision_rate,
            near.se_collision,
            near.bounds.collision,
            Relation::AtLeast,
            0.0,
        ),
    ];
    Ok((params, checks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaddedVerifyConfig {
    pub t: usize,
    pub n: usize,
    pub b1: f64,
    pub b2: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for PaddedVerifyConfig {
    fn default() -> Self {
        PaddedVerifyConfig {
            t: 16,
            n: 64,
            b1: 0.5,
            b2: 0.25,
            trials: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaddedSummary {
    pub k: usize,
    pub w: usize,
    pub m1: f64,
    pub m2: f64,
    pub m: usize,
}

/// Collision rates of the padded single-valued hash built from Chosen Path
/// maps: similar pairs (overlap `ceil(b1 t)`) against `1/(8m)`, dissimilar
/// pairs (overlap `floor(b2 t)`) against `m2/m`.
pub fn verify_padded_hash(cfg: &PaddedVerifyConfig) -> Result<(PaddedSummary, Vec<Check>)> {
    if cfg.trials < 2 {
        return Err(Error::parameter("need at least 2 trials"));
    }
    let base = params_for(cfg.n, cfg.b1, cfg.b2, 0)?;
    let rho = ChosenPathParams::rho(cfg.b1, cfg.b2);
    let n = cfg.n as f64;
    let m1 = n.powf(rho) * base.w as f64 / cfg.b1;
    let m2 = n.powf(rho - 1.0) * base.w as f64;
    let low = (cfg.b2 * cfg.t as f64).floor() as usize;
    let high = ((cfg.b1 * cfg.t as f64).ceil() as usize).min(cfg.t);
    let (x, partners) = pair_family(cfg.t, &[high, low], cfg.seed)?;
    let mut seeds = SplitMix64::new(cfg.seed ^ 0x5EED);
    let seeds: Vec<(u64, u64)> = (0..cfg.trials).map(|_| (seeds.next_u64(), seeds.next_u64())).collect();
    let m = PaddedMapHash::new(ChosenPath::new(base.clone()), m1, 0)?.padding();
    let hits = seeds
        .par_iter()
        .map(|&(map_seed, order_seed)| {
            let map = ChosenPath::new(params_for(cfg.n, cfg.b1, cfg.b2, map_seed)?);
            let h = PaddedMapHash::new(map, m1, order_seed)?;
            let hx = h.hash(&x)?;
            Ok((
                f64::from(u8::from(hx == h.hash(&partners[0])?)),
                f64::from(u8::from(hx == h.hash(&partners[1])?)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let near: Vec<f64> = hits.iter().map(|h| h.0).collect();
    let far: Vec<f64> = hits.iter().map(|h| h.1).collect();
    let (near_rate, near_se) = mean_se(&near);
    let (far_rate, far_se) = mean_se(&far);
    let checks = vec![
        Check::new(
            "similar pairs vs 0.8/(8m)",
            near_rate,
            near_se,
            0.8 / (8.0 * m as f64),
            Relation::AtLeast,
            0.0,
        ),
        Check::new(
            "dissimilar pairs vs 1.25 m2/m",
            far_rate,
            far_se,
            1.25 * m2 / m as f64,
            Relation::AtMost,
            4.0,
        ),
    ];
    let summary = PaddedSummary {
        k: base.k,
        w: base.w,
        m1,
        m2,
        m,
    };
    Ok((summary, checks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformVerifyConfig {
    pub source_dim: usize,
    pub target_dim: usize,
    pub b1: f64,
    pub eps: f64,
    /// Random inputs for the cardinality check.
    pub inputs: usize,
    /// Sampled transforms for the similarity check.
    pub pairs: usize,
    pub seed: u64,
}

impl Default for TransformVerifyConfig {
    fn default() -> Self {
        TransformVerifyConfig {
            source_dim: 1024,
            target_dim: 160 * 64,
            b1: 0.5,
            eps: 0.05,
            inputs: 100_000,
            pairs: 1000,
            seed: 0,
        }
    }
}

/// Cardinality of `T(x)` on random inputs, and the similarity of
/// `T(x)`, `T(y)` for `y` at Hamming distance `round(sqrt(D))` from `x`.
pub fn verify_transform(cfg: &TransformVerifyConfig) -> Result<(TransformParams, Vec<Check>)> {
    let params = TransformParams::new(cfg.source_dim, cfg.target_dim, cfg.b1, cfg.eps)?;
    let mut seeds = SplitMix64::new(cfg.seed);
    let per_transform = 1000;
    let batches: Vec<(u64, usize)> = (0..cfg.inputs.div_ceil(per_transform))
        .map(|b| (seeds.next_u64(), per_transform.min(cfg.inputs - b * per_transform)))
        .collect();
    let wrong = batches
        .par_iter()
        .map(|&(seed, count)| {
            let tr = TransformT::new(params, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut wrong = 0usize;
            for _ in 0..count {
                let x = DenseBits::random(cfg.source_dim, &mut rng);
                wrong += usize::from(tr.apply(&x)?.len() != params.t);
            }
            Ok(wrong)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();

    let r = ((cfg.source_dim as f64).sqrt().round() as usize).min(cfg.source_dim);
    let pair_seeds: Vec<u64> = (0..cfg.pairs).map(|_| seeds.next_u64()).collect();
    let sims = pair_seeds
        .par_iter()
        .map(|&seed| {
            let tr = TransformT::new(params, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(!seed);
            let x = DenseBits::random(cfg.source_dim, &mut rng);
            let mut y = x.clone();
            for i in sample(&mut rng, cfg.source_dim, r) {
                y.flip(i);
            }
            braun_blanquet(&tr.apply(&x)?, &tr.apply(&y)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, se) = mean_se(&sims);
    let mut checks = vec![Check::new(
        format!("|T(x)| = {} on {} inputs (mismatches)", params.t, cfg.inputs),
        wrong as f64,
        0.0,
        0.0,
        Relation::Equal,
        0.0,
    )];
    if cfg.pairs > 0 {
        checks.push(Check::new(
            format!("block match at distance {r} vs b1 + eps/4"),
            mean,
            se,
            cfg.b1 + cfg.eps / 4.0,
            Relation::AtLeast,
            0.0,
        ));
    }
    Ok((params, checks))
}
