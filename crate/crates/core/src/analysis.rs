//! ρ-values of competing similarity search methods, grid sweeps over the
//! threshold space, and Monte Carlo checks of the Chosen Path map.
//!
//! All ρ formulas below are for equal-size sets unless a size ratio `beta`
//! is given. The data-dependent value ignores `o_n(1)` terms.

use std::fmt;
use std::str::FromStr;

use num_traits::Num;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chosen_path::{expected_bounds, ChosenPath, ChosenPathParams, ExpectedBounds};
use crate::error::{Error, Result};
use crate::hashing::SplitMix64;
use crate::measure::{braun_blanquet, MeasureKind, ThresholdPair};
use crate::set::SparseSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BitSampling,
    MinHash,
    Angular,
    DataDependent,
    ChosenPath,
}

impl Method {
    /// CSV column order.
    pub const ALL: [Method; 5] = [
        Method::BitSampling,
        Method::MinHash,
        Method::Angular,
        Method::DataDependent,
        Method::ChosenPath,
    ];

    /// Order in which ties between equal ρ-values are resolved.
    pub const TIE_ORDER: [Method; 5] = [
        Method::ChosenPath,
        Method::MinHash,
        Method::Angular,
        Method::DataDependent,
        Method::BitSampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::BitSampling => "bitsampling",
            Method::MinHash => "minhash",
            Method::Angular => "angular",
            Method::DataDependent => "datadep",
            Method::ChosenPath => "chosenpath",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::parameter(format!("unknown method {s:?}")))
    }
}

fn check_order(hi: f64, lo: f64, what: &str) -> Result<()> {
    if 0.0 < lo && lo < hi && hi < 1.0 {
        Ok(())
    } else {
        Err(Error::parameter(format!("{what} need 0 < low < high < 1, got ({hi}, {lo})")))
    }
}

/// Bit-sampling ρ for Braun-Blanquet thresholds; rational in its inputs.
pub fn bitsampling_rho<T: Num + Copy>(b1: T, b2: T) -> T {
    (T::one() - b1) / (T::one() - b2)
}

/// Cross-polytope ρ written in terms of dot products (cosine thresholds).
pub fn angular_rho<T: Num + Copy>(c1: T, c2: T) -> T {
    let one = T::one();
    ((one - c1) / (one + c1)) / ((one - c2) / (one + c2))
}

/// Data-dependent Hamming LSH, `1 / (2c - 1)` with `c = (1-b1)/(1-b2)`.
pub fn datadep_rho<T: Num + Copy>(b1: T, b2: T) -> T {
    let one = T::one();
    (one - b1) / (one + b1 - b2 - b2)
}

/// [`datadep_rho`] expressed in Jaccard thresholds of equal-size sets.
pub fn datadep_rho_jaccard<T: Num + Copy>(j1: T, j2: T) -> T {
    let one = T::one();
    let three = one + one + one;
    (one - j1) * (one + j2) / (one - j1 * j2 + three * (j1 - j2))
}

/// ρ of `method` for Braun-Blanquet thresholds `b1 > b2`.
pub fn rho(method: Method, b1: f64, b2: f64) -> Result<f64> {
    check_order(b1, b2, "Braun-Blanquet thresholds")?;
    Ok(match method {
        Method::BitSampling => bitsampling_rho(b1, b2),
        Method::MinHash => (b1 / (2.0 - b1)).ln() / (b2 / (2.0 - b2)).ln(),
        Method::Angular => angular_rho(b1, b2),
        Method::DataDependent => datadep_rho(b1, b2),
        Method::ChosenPath => b1.ln() / b2.ln(),
    })
}

/// ρ of `method` for normalized Hamming distances `r1 < r2`.
pub fn rho_hamming(method: Method, r1: f64, r2: f64) -> Result<f64> {
    check_order(r2, r1, "Hamming distances")?;
    let c = r1 / r2;
    Ok(match method {
        Method::BitSampling => c,
        Method::MinHash => ((1.0 - r1) / (1.0 + r1)).ln() / ((1.0 - r2) / (1.0 + r2)).ln(),
        Method::Angular => c * (1.0 - r2 / 2.0) / (1.0 - r1 / 2.0),
        Method::DataDependent => c / (2.0 - c),
        Method::ChosenPath => (1.0 - r1).ln() / (1.0 - r2).ln(),
    })
}

/// ρ of `method` for Jaccard thresholds of equal-size sets.
pub fn rho_jaccard(method: Method, j1: f64, j2: f64) -> Result<f64> {
    check_order(j1, j2, "Jaccard thresholds")?;
    let b = |j: f64| 2.0 * j / (1.0 + j);
    Ok(match method {
        Method::BitSampling => ((1.0 - j1) / (1.0 + j1)) / ((1.0 - j2) / (1.0 + j2)),
        Method::MinHash => j1.ln() / j2.ln(),
        Method::Angular => ((1.0 - j1) / (1.0 + 3.0 * j1)) / ((1.0 - j2) / (1.0 + 3.0 * j2)),
        Method::DataDependent => datadep_rho_jaccard(j1, j2),
        Method::ChosenPath => b(j1).ln() / b(j2).ln(),
    })
}

/// ρ-values for one threshold pair. Methods that do not apply are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoReport {
    pub thresholds: ThresholdPair,
    pub rhos: Vec<(Method, Option<f64>)>,
    pub winner: Method,
}

impl RhoReport {
    fn new(thresholds: ThresholdPair, values: impl Fn(Method) -> Option<f64>) -> Self {
        let rhos: Vec<_> = Method::ALL.into_iter().map(|m| (m, values(m))).collect();
        let mut winner = None;
        for m in Method::TIE_ORDER {
            if let Some(v) = values(m) {
                if winner.is_none_or(|(_, best)| v < best) {
                    winner = Some((m, v));
                }
            }
        }
        RhoReport {
            thresholds,
            rhos,
            winner: winner.expect("at least one method applies").0,
        }
    }

    pub fn get(&self, method: Method) -> Option<f64> {
        self.rhos.iter().find(|(m, _)| *m == method).and_then(|(_, v)| *v)
    }
}

/// All five methods at Braun-Blanquet thresholds `(b1, b2)`.
pub fn rho_report(b1: f64, b2: f64) -> Result<RhoReport> {
    let pair = ThresholdPair::braun_blanquet(b1, b2)?;
    check_order(b1, b2, "Braun-Blanquet thresholds")?;
    Ok(RhoReport::new(pair, |m| rho(m, b1, b2).ok()))
}

/// MinHash, angular and Chosen Path for Jaccard thresholds at size ratio
/// `beta`. Angular uses the cosine thresholds `b / sqrt(beta)`.
pub fn regime_map(j1: f64, j2: f64, beta: f64) -> Result<RhoReport> {
    if !(0.0 < j2 && j2 < j1 && j1 <= beta && beta <= 1.0) {
        return Err(Error::parameter(format!(
            "need 0 < j2 < j1 <= beta <= 1, got j1={j1}, j2={j2}, beta={beta}"
        )));
    }
    let pair = ThresholdPair::new(j1, j2, MeasureKind::Jaccard, beta)?;
    let (b1, b2) = pair.overlap_ratios()?;
    let c = pair.convert(MeasureKind::Cosine)?;
    let values = |m| match m {
        Method::MinHash => Some(j1.ln() / j2.ln()),
        Method::ChosenPath => Some(b1.ln() / b2.ln()),
        Method::Angular => Some(angular_rho(c.s1, c.s2)),
        _ => None,
    };
    Ok(RhoReport::new(pair, values))
}

/// `(1 - (1 - 1/t)^a, a / (2t - a))`: the chance that single-element samples
/// of two t-sets with overlap `a` coincide, versus their Jaccard similarity.
pub fn sampling_crossover(t: u32, a: u32) -> (f64, f64) {
    let (t, a) = (f64::from(t), f64::from(a));
    (1.0 - (1.0 - 1.0 / t).powf(a), a / (2.0 * t - a))
}

/// `ln(b / (2 - b)) / ln(b)`; increasing on (0, 1), which orders Chosen
/// Path below MinHash.
pub fn minhash_profile(b: f64) -> f64 {
    (b / (2.0 - b)).ln() / b.ln()
}

/// `ln(b) (1 + b) / (1 - b)`; increasing on (0, 1), which orders Chosen
/// Path below angular LSH.
pub fn angular_profile(b: f64) -> f64 {
    b.ln() * (1.0 + b) / (1.0 - b)
}

/// Centers of a `resolution x resolution` grid on the unit square that lie
/// strictly below the diagonal, as `(high, low)` pairs scaled by `scale`.
pub fn grid_cells(resolution: usize, scale: f64) -> Vec<(f64, f64)> {
    let r = resolution as f64;
    let mut cells = Vec::new();
    for i in 0..resolution {
        for j in 0..i {
            cells.push(((i as f64 + 0.5) / r * scale, (j as f64 + 0.5) / r * scale));
        }
    }
    cells
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub b1: f64,
    pub b2: f64,
    pub method: Method,
    pub rho_chosenpath: f64,
    pub rho_other: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cell b1={} b2={}: rho_chosenpath {} >= rho_{} {}",
            fmt_g10(self.b1),
            fmt_g10(self.b2),
            fmt_g10(self.rho_chosenpath),
            self.method,
            fmt_g10(self.rho_other)
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub resolution: usize,
    pub cells: usize,
    pub violations: Vec<Violation>,
    /// Cells where Chosen Path is at least as good as data-dependent LSH.
    pub cp_le_datadep: usize,
    /// Cells where data-dependent LSH is strictly better.
    pub datadep_better: usize,
    /// Whether every cell with `b2 <= 1/5` lies in the first group.
    pub low_b2_all_cp: bool,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.low_b2_all_cp
    }
}

/// Checks Chosen Path against MinHash and angular LSH everywhere, and
/// against data-dependent LSH wherever `b2 <= 1/5`, on grid cell centers.
pub fn dominance_scan(resolution: usize) -> Result<DominanceReport> {
    if resolution < 100 {
        return Err(Error::parameter("dominance scan needs resolution >= 100"));
    }
    let cells = grid_cells(resolution, 1.0);
    let per_cell: Vec<(Vec<Violation>, bool, bool)> = cells
        .par_iter()
        .map(|&(b1, b2)| {
            let cp = b1.ln() / b2.ln();
            let mut bad = Vec::new();
            let mut check = |method: Method, other: f64| {
                if cp >= other {
                    bad.push(Violation {
                        b1,
                        b2,
                        method,
                        rho_chosenpath: cp,
                        rho_other: other,
                    });
                }
            };
            check(Method::MinHash, (b1 / (2.0 - b1)).ln() / (b2 / (2.0 - b2)).ln());
            check(Method::Angular, angular_rho(b1, b2));
            let dd = datadep_rho(b1, b2);
            let low = b2 <= 0.2;
            if low {
                check(Method::DataDependent, dd);
            }
            (bad, cp <= dd, low)
        })
        .collect();
    let mut report = DominanceReport {
        resolution,
        cells: cells.len(),
        low_b2_all_cp: true,
        ..Default::default()
    };
    for (bad, cp_wins, low) in per_cell {
        report.violations.extend(bad);
        if cp_wins {
            report.cp_le_datadep += 1;
        } else {
            report.datadep_better += 1;
            if low {
                report.low_b2_all_cp = false;
            }
        }
    }
    Ok(report)
}

/// `%.10g`-style formatting: 10 significant digits, trailing zeros
/// dropped, scientific notation outside `[1e-4, 1e10)`.
pub fn fmt_g10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..10).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (9 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Monte Carlo estimates of map size, shared paths and collision rate for
/// one pair of sets over independently seeded map instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCheck {
    pub trials: usize,
    pub similarity: f64,
    pub mean_size: f64,
    pub se_size: f64,
    pub mean_shared: f64,
    pub se_shared: f64,
    pub collision_rate: f64,
    pub se_collision: f64,
    pub bounds: ExpectedBounds,
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Evaluates `M_k(x)` and `M_k(y)` under `trials` maps with parameters
/// `(b1, k, w)` and master seeds drawn from `SplitMix64(seed)`.
pub fn verify_map_properties(
    b1: f64,
    k: usize,
    w: usize,
    x: &SparseSet,
    y: &SparseSet,
    trials: usize,
    seed: u64,
) -> Result<MapCheck> {
    if trials == 0 {
        return Err(Error::parameter("trials must be positive"));
    }
    let template = ChosenPathParams::new(b1, k, w, 0)?;
    let similarity = braun_blanquet(x, y)?;
    let mut seeds = SplitMix64::new(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| seeds.next_u64()).collect();
    let samples = seeds
        .par_iter()
        .map(|&s| {
            let map = ChosenPath::new(ChosenPathParams::new(b1, k, w, s)?);
            let mx = map.evaluate(x)?;
            let my = map.evaluate(y)?;
            Ok((mx.len() as f64, mx.intersection_size(&my) as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let shared: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let hits: Vec<f64> = shared.iter().map(|&s| f64::from(u8::from(s > 0.0))).collect();
    let (mean_size, se_size) = mean_se(&sizes);
    let (mean_shared, se_shared) = mean_se(&shared);
    let (collision_rate, se_collision) = mean_se(&hits);
    Ok(MapCheck {
        trials,
        similarity,
        mean_size,
        se_size,
        mean_shared,
        se_shared,
        collision_rate,
        se_collision,
        bounds: expected_bounds(&template, k, similarity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const B1: f64 = 1.0 / 3.0;
    const B2: f64 = 2.0 / 11.0;

    #[test]
    fn reference_values() {
        assert!((rho(Method::ChosenPath, B1, B2).unwrap() - 0.6444).abs() < 5e-5);
        assert!((rho(Method::MinHash, B1, B2).unwrap() - 0.69897).abs() < 1e-5);
        assert!((rho(Method::Angular, B1, B2).unwrap() - 13.0 / 18.0).abs() < 1e-12);
        assert!((rho(Method::DataDependent, B1, B2).unwrap() - 0.6875).abs() < 1e-12);
    }

    #[test]
    fn jaccard_column_agrees_with_braun_blanquet_column() {
        for (j1, j2) in [(0.2, 0.1), (0.9, 0.05), (0.5, 0.49), (0.01, 0.001)] {
            let b = |j: f64| 2.0 * j / (1.0 + j);
            for m in Method::ALL {
                let via_b = rho(m, b(j1), b(j2)).unwrap();
                let direct = rho_jaccard(m, j1, j2).unwrap();
                assert!((via_b - direct).abs() < 1e-12, "{m} at ({j1}, {j2})");
            }
        }
    }

    #[test]
    fn hamming_column_agrees_with_braun_blanquet_column() {
        for (r1, r2) in [(0.1, 0.2), (0.3, 0.9), (0.01, 0.02)] {
            for m in Method::ALL {
                let via_b = rho(m, 1.0 - r1, 1.0 - r2).unwrap();
                let direct = rho_hamming(m, r1, r2).unwrap();
                assert!((via_b - direct).abs() < 1e-12, "{m} at ({r1}, {r2})");
            }
        }
        assert!((rho_hamming(Method::BitSampling, 0.1, 0.2).unwrap() - 0.5).abs() < 1e-15);
        // c = 2: 1 / (2c - 1)
        assert!((rho_hamming(Method::DataDependent, 0.2, 0.4).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ordering_errors() {
        assert!(rho(Method::ChosenPath, 0.2, 0.3).is_err());
        assert!(rho(Method::ChosenPath, 1.0, 0.3).is_err());
        assert!(rho_hamming(Method::ChosenPath, 0.3, 0.2).is_err());
        assert!(regime_map(0.3, 0.1, 0.25).is_err());
    }

    #[test]
    fn close_thresholds_give_rho_near_one() {
        for m in Method::ALL {
            let v = rho(m, 0.5 + 1e-9, 0.5).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{m}: {v}");
        }
    }

    #[test]
    fn regime_examples() {
        let r = regime_map(0.2, 0.1, 1.0).unwrap();
        assert_eq!(r.winner, Method::ChosenPath);
        assert_eq!(r.get(Method::DataDependent), None);
        assert_eq!(r.get(Method::BitSampling), None);
        for beta in [0.25, 0.5, 0.75] {
            let mut seen = std::collections::HashSet::new();
            for (j1, j2) in grid_cells(100, beta) {
                seen.insert(regime_map(j1, j2, beta).unwrap().winner);
            }
            assert_eq!(seen.len(), 3, "beta {beta}");
        }
        for (j1, j2) in grid_cells(100, 1.0) {
            assert_eq!(regime_map(j1, j2, 1.0).unwrap().winner, Method::ChosenPath);
        }
    }

    #[test]
    fn crossover_examples() {
        let (subset, mh) = sampling_crossover(100, 100);
        assert!((subset - (1.0 - 0.99f64.powi(100))).abs() < 1e-15);
        assert_eq!(mh, 1.0);
        let (subset, mh) = sampling_crossover(100, 59);
        assert!(subset > mh);
        let (subset, mh) = sampling_crossover(100, 70);
        assert!(subset < mh);
    }

    #[test]
    fn dominance_example_cells() {
        let r = rho_report(B1, B2).unwrap();
        let cp = r.get(Method::ChosenPath).unwrap();
        for m in [Method::MinHash, Method::Angular, Method::DataDependent] {
            assert!(cp < r.get(m).unwrap());
        }
        assert_eq!(r.winner, Method::ChosenPath);
        let mh = rho(Method::MinHash, 0.995, 1.0 / 23.0).unwrap();
        let dd = rho(Method::DataDependent, 0.995, 1.0 / 23.0).unwrap();
        assert!(mh > dd);
        let b2 = 0.25f64;
        let b1 = b2.sqrt();
        assert!((rho(Method::ChosenPath, b1, b2).unwrap() - 0.5).abs() < 1e-9);
        assert!((rho(Method::DataDependent, b1, b2).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dominance_scan_small_grid() {
        let r = dominance_scan(100).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        assert_eq!(r.cells, 100 * 99 / 2);
        assert!(r.datadep_better > 0);
        assert!(dominance_scan(50).is_err());
    }

    #[test]
    fn g10_formatting() {
        assert_eq!(fmt_g10(0.0), "0");
        assert_eq!(fmt_g10(0.5), "0.5");
        assert_eq!(fmt_g10(1.0 / 3.0), "0.3333333333");
        assert_eq!(fmt_g10(2.0 / 3.0), "0.6666666667");
        assert_eq!(fmt_g10(13.0 / 18.0), "0.7222222222");
        assert_eq!(fmt_g10(123456.0), "123456");
        assert_eq!(fmt_g10(1e-5), "1e-05");
        assert_eq!(fmt_g10(1.5e12), "1.5e+12");
        assert_eq!(fmt_g10(-0.25), "-0.25");
        assert_eq!(fmt_g10(9999999999.5), "1e+10");
    }

    #[test]
    fn map_check_always_activate_case() {
        // |x| <= 1/b1: every path survives, so identical sets always collide
        let x = SparseSet::new(vec![1, 2]).unwrap();
        let r = verify_map_properties(0.5, 3, 6, &x, &x, 1000, 1).unwrap();
        assert_eq!(r.collision_rate, 1.0);
        assert_eq!(r.mean_size, 6.0 * 8.0);
        assert_eq!(r.se_size, 0.0);
    }
}
