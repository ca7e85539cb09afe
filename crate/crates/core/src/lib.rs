//! Chosen Path locality-sensitive maps for approximate set similarity search
//! under Braun-Blanquet similarity, with MinHash and brute-force baselines,
//! ρ-value analysis and the supporting reductions.
//!
//! ```
//! use chosen_path::{CpIndex, SparseSet};
//!
//! let points = vec![
//!     SparseSet::new(vec![1, 2, 3, 4])?,
//!     SparseSet::new(vec![10, 11, 12, 13])?,
//! ];
//! let index = CpIndex::build(points, 0.5, 0.25, 42)?;
//! let hit = index.query(&SparseSet::new(vec![10, 11, 12, 14])?)?;
//! assert_eq!(hit.found, Some(1));
//! # Ok::<(), chosen_path::Error>(())
//! ```

pub mod error;
pub mod set;
pub mod measure;
pub mod hashing;
pub mod chosen_path;

pub use error::{Error, Result};
pub use set::SparseSet;
pub use measure::{MeasureKind, ThresholdPair};
pub use chosen_path::{ChosenPath, ChosenPathParams, PathSet};
pub mod index;
mod snapshot;

pub use index::{brute_force, CpIndex, MinHashIndex, QueryOutcome};
pub use snapshot::{MAGIC as SNAPSHOT_MAGIC, VERSION as SNAPSHOT_VERSION};
pub mod analysis;
pub mod reductions;
pub mod bench;
pub mod verify;
pub mod cli;
