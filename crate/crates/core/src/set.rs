//! Sparse binary vectors viewed as sets of dimension indices, and the
//! line-oriented set-file format shared by the index and the CLI.
//!
//! A set-file holds one set per line: base-10 elements separated by single
//! spaces, strictly increasing. Blank lines are skipped, and the point id of
//! a set is its 0-based position among the non-blank lines.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of dimension indices, stored sorted and duplicate-free.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct SparseSet {
    dims: Vec<u32>,
}

impl SparseSet {
    /// Wraps a strictly increasing sequence of indices.
    pub fn new(dims: Vec<u32>) -> Result<Self> {
        if let Some(position) = dims.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedSet {
                position: position + 1,
            });
        }
        Ok(SparseSet { dims })
    }

    /// Sorts and deduplicates arbitrary indices.
    pub fn from_unsorted(mut dims: Vec<u32>) -> Self {
        dims.sort_unstable();
        dims.dedup();
        SparseSet { dims }
    }

    pub fn empty() -> Self {
        SparseSet::default()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.dims
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.dims.iter().copied()
    }

    pub fn contains(&self, dim: u32) -> bool {
        self.dims.binary_search(&dim).is_ok()
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.dims
    }

    /// Elements present in both sets, by merge walk.
    pub fn intersection(&self, other: &SparseSet) -> SparseSet {
        let mut out = Vec::new();
        merge_walk(&self.dims, &other.dims, |d| out.push(d));
        SparseSet { dims: out }
    }
}

impl TryFrom<Vec<u32>> for SparseSet {
    type Error = Error;

    fn try_from(dims: Vec<u32>) -> Result<Self> {
        SparseSet::new(dims)
    }
}

impl From<SparseSet> for Vec<u32> {
    fn from(set: SparseSet) -> Self {
        set.dims
    }
}

impl FromIterator<u32> for SparseSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        SparseSet::from_unsorted(iter.into_iter().collect())
    }
}

impl fmt::Display for SparseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

fn merge_walk(a: &[u32], b: &[u32], mut on_common: impl FnMut(u32)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                on_common(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// |x ∩ y|.
pub fn intersection_size(x: &SparseSet, y: &SparseSet) -> usize {
    let mut count = 0;
    merge_walk(&x.dims, &y.dims, |_| count += 1);
    count
}

/// Parses one set-file line. `line_no` is only used for error reporting.
pub fn parse_set_line(line: &str, line_no: usize) -> Result<SparseSet> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut dims = Vec::new();
    for token in line.split(' ') {
        let value = token.parse::<u32>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid element {token:?}"),
        })?;
        if dims.last().is_some_and(|&last| last >= value) {
            return Err(Error::Parse {
                line: line_no,
                message: "elements must be strictly increasing".into(),
            });
        }
        dims.push(value);
    }
    Ok(SparseSet { dims })
}

/// Reads a set-file. Line numbers in errors are 1-based physical lines.
pub fn read_sets<R: BufRead>(reader: R) -> Result<Vec<SparseSet>> {
    let mut sets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        sets.push(parse_set_line(&line, idx + 1)?);
    }
    Ok(sets)
}

pub fn write_sets<W: Write>(mut writer: W, sets: &[SparseSet]) -> Result<()> {
    for set in sets {
        writeln!(writer, "{set}")?;
    }
    Ok(())
}
