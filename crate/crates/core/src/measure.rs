//! Set similarity measures and threshold conversion between them.
//!
//! Conversions go through the common parameter `b = |x ∩ y| / |x|` for a
//! pair with `|y| = beta * |x|` (so `0 <= b <= beta <= 1`):
//!
//! | measure            | value in terms of `b`  |
//! |--------------------|------------------------|
//! | Braun-Blanquet     | `b`                    |
//! | Jaccard            | `b / (1 + beta - b)`   |
//! | cosine             | `b / sqrt(beta)`       |
//! | normalized Hamming | `1 - b` (beta = 1)     |
//!
//! Normalized Hamming is a distance: `|x Δ y| / (|x| + |y|)`, which for
//! t-sparse vectors is the Hamming distance divided by `2t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{intersection_size, SparseSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    BraunBlanquet,
    Jaccard,
    Cosine,
    NormalizedHamming,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [
        MeasureKind::BraunBlanquet,
        MeasureKind::Jaccard,
        MeasureKind::Cosine,
        MeasureKind::NormalizedHamming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::BraunBlanquet => "braun-blanquet",
            MeasureKind::Jaccard => "jaccard",
            MeasureKind::Cosine => "cosine",
            MeasureKind::NormalizedHamming => "hamming",
        }
    }

    /// Largest attainable value for a pair with size ratio `beta`.
    fn max_value(self, beta: f64) -> f64 {
        match self {
            MeasureKind::BraunBlanquet | MeasureKind::Jaccard => beta,
            MeasureKind::Cosine => beta.sqrt(),
            MeasureKind::NormalizedHamming => 1.0,
        }
    }

    /// The common parameter `b` for a threshold `value`, without range checks.
    pub fn overlap_ratio(self, value: f64, beta: f64) -> f64 {
        match self {
            MeasureKind::BraunBlanquet => value,
            MeasureKind::Jaccard => value * (1.0 + beta) / (1.0 + value),
            MeasureKind::Cosine => value * beta.sqrt(),
            MeasureKind::NormalizedHamming => 1.0 - value,
        }
    }

    /// Inverse of [`MeasureKind::overlap_ratio`], without range checks.
    pub fn value_at(self, b: f64, beta: f64) -> f64 {
        match self {
            MeasureKind::BraunBlanquet => b,
            MeasureKind::Jaccard => b / (1.0 + beta - b),
            MeasureKind::Cosine => b / beta.sqrt(),
            MeasureKind::NormalizedHamming => 1.0 - b,
        }
    }

    /// Similarity of a pair under this measure. Normalized Hamming is reported
    /// as the similarity `1 - r`.
    pub fn similarity(self, x: &SparseSet, y: &SparseSet) -> Result<f64> {
        match self {
            MeasureKind::BraunBlanquet => braun_blanquet(x, y),
            MeasureKind::Jaccard => jaccard(x, y),
            MeasureKind::Cosine => cosine(x, y),
            MeasureKind::NormalizedHamming => normalized_hamming(x, y).map(|r| 1.0 - r),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "braun-blanquet" | "bb" | "b" => Ok(MeasureKind::BraunBlanquet),
            "jaccard" | "j" => Ok(MeasureKind::Jaccard),
            "cosine" | "c" => Ok(MeasureKind::Cosine),
            "hamming" | "normalized-hamming" | "h" => Ok(MeasureKind::NormalizedHamming),
            other => Err(Error::parameter(format!("unknown measure {other:?}"))),
        }
    }
}

/// B(x, y) = |x ∩ y| / max(|x|, |y|).
pub fn braun_blanquet(x: &SparseSet, y: &SparseSet) -> Result<f64> {
    let denom = x.len().max(y.len());
    if denom == 0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok(intersection_size(x, y) as f64 / denom as f64)
}

/// J(x, y) = |x ∩ y| / |x ∪ y|.
pub fn jaccard(x: &SparseSet, y: &SparseSet) -> Result<f64> {
    if x.is_empty() && y.is_empty() {
        return Err(Error::UndefinedSimilarity);
    }
    let common = intersection_size(x, y);
    Ok(common as f64 / (x.len() + y.len() - common) as f64)
}

/// C(x, y) = |x ∩ y| / sqrt(|x| |y|). Both sets must be nonempty.
pub fn cosine(x: &SparseSet, y: &SparseSet) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::UndefinedSimilarity);
    }
    let common = intersection_size(x, y) as f64;
    Ok(common / ((x.len() as f64) * (y.len() as f64)).sqrt())
}

/// |x Δ y| / (|x| + |y|), a distance in [0, 1].
pub fn normalized_hamming(x: &SparseSet, y: &SparseSet) -> Result<f64> {
    let total = x.len() + y.len();
    if total == 0 {
        return Err(Error::UndefinedSimilarity);
    }
    let common = intersection_size(x, y);
    Ok((total - 2 * common) as f64 / total as f64)
}

/// Rounding allowance on range checks, so that converted boundary values
/// (e.g. cosine at `b = beta`) are accepted back.
const RANGE_SLACK: f64 = 1e-12;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::parameter(format!("beta must lie in (0, 1], got {beta}")))
    }
}

/// Maps a threshold under `measure` to the common parameter `b`.
pub fn to_overlap_ratio(value: f64, measure: MeasureKind, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if measure == MeasureKind::NormalizedHamming && beta != 1.0 {
        return Err(Error::UnsupportedParametrization("normalized Hamming"));
    }
    let max = measure.max_value(beta);
    if !(0.0..=max + RANGE_SLACK).contains(&value) {
        return Err(Error::Range {
            value,
            max,
            measure: measure.name(),
        });
    }
    Ok(measure.overlap_ratio(value, beta).clamp(0.0, beta))
}

/// Maps the common parameter `b` to a threshold under `measure`.
pub fn from_overlap_ratio(b: f64, measure: MeasureKind, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if measure == MeasureKind::NormalizedHamming && beta != 1.0 {
        return Err(Error::UnsupportedParametrization("normalized Hamming"));
    }
    if !(0.0..=beta + RANGE_SLACK).contains(&b) {
        return Err(Error::Range {
            value: b,
            max: beta,
            measure: "overlap ratio",
        });
    }
    Ok(measure.value_at(b, beta).clamp(0.0, measure.max_value(beta)))
}

/// Converts a threshold between measures for pairs with size ratio `beta`.
pub fn convert_threshold(value: f64, from: MeasureKind, to: MeasureKind, beta: f64) -> Result<f64> {
    let b = to_overlap_ratio(value, from, beta)?;
    from_overlap_ratio(b, to, beta)
}

/// An (s1, s2) threshold pair tagged with its measure and size ratio.
///
/// For similarity measures `s2 < s1`. For [`MeasureKind::NormalizedHamming`]
/// the values are distances, so the order flips: `s1 < s2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub s1: f64,
    pub s2: f64,
    pub measure: MeasureKind,
    pub beta: f64,
}

impl ThresholdPair {
    pub fn new(s1: f64, s2: f64, measure: MeasureKind, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if measure == MeasureKind::NormalizedHamming {
            if beta != 1.0 {
                return Err(Error::UnsupportedParametrization("normalized Hamming"));
            }
            if !(0.0 < s1 && s1 < s2 && s2 <= 1.0) {
                return Err(Error::parameter(format!(
                    "distance thresholds need 0 < r1 < r2 <= 1, got r1={s1}, r2={s2}"
                )));
            }
            return Ok(ThresholdPair { s1, s2, measure, beta });
        }
        if !(s1 > 0.0 && s1 <= 1.0 && (0.0..1.0).contains(&s2) && s2 < s1) {
            return Err(Error::parameter(format!(
                "thresholds need 0 <= s2 < s1 <= 1, got s1={s1}, s2={s2}"
            )));
        }
        let max = measure.max_value(beta);
        if s1 > max {
            return Err(Error::Range {
                value: s1,
                max,
                measure: measure.name(),
            });
        }
        Ok(ThresholdPair { s1, s2, measure, beta })
    }

    pub fn braun_blanquet(b1: f64, b2: f64) -> Result<Self> {
        ThresholdPair::new(b1, b2, MeasureKind::BraunBlanquet, 1.0)
    }

    /// The pair expressed as overlap ratios `(b1, b2)`.
    pub fn overlap_ratios(&self) -> Result<(f64, f64)> {
        Ok((
            to_overlap_ratio(self.s1, self.measure, self.beta)?,
            to_overlap_ratio(self.s2, self.measure, self.beta)?,
        ))
    }

    pub fn convert(&self, to: MeasureKind) -> Result<ThresholdPair> {
        let s1 = convert_threshold(self.s1, self.measure, to, self.beta)?;
        let s2 = convert_threshold(self.s2, self.measure, to, self.beta)?;
        ThresholdPair::new(s1, s2, to, self.beta)
    }
}
