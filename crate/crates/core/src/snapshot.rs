//! Binary persistence for [`CpIndex`].
//!
//! Little-endian throughout:
//!
//! ```text
//! magic      "CPIX"
//! version    u16 (= 1)
//! b1, b2     f64
//! seed       u64            master seed the index was built with
//! R          u32
//! R times:
//!   k, w         u32
//!   b1           f64
//!   master_seed  u64
//!   level seeds  k x u64
//!   buckets      u64 count, then per bucket in increasing fingerprint order:
//!                fingerprint u64, count u32, ids count x u32 (increasing)
//! n          u32
//! n times:   len u32, elements len x u32 (strictly increasing)
//! ```
//!
//! Writing sorts buckets by fingerprint, so equal indexes produce identical
//! bytes, and loading rejects anything the writer cannot produce.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::chosen_path::{ChosenPath, ChosenPathParams};
use crate::error::{Error, Result};
use crate::index::{CpIndex, CpRep};
use crate::set::SparseSet;

pub const MAGIC: &[u8; 4] = b"CPIX";
pub const VERSION: u16 = 1;

impl CpIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.b1.to_le_bytes());
        out.extend_from_slice(&self.b2.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        put_u32(&mut out, self.reps.len());
        for rep in &self.reps {
            let p = rep.map.params();
            put_u32(&mut out, p.k);
            put_u32(&mut out, p.w);
            out.extend_from_slice(&p.b1.to_le_bytes());
            out.extend_from_slice(&p.master_seed.to_le_bytes());
            for s in &p.level_seeds {
                out.extend_from_slice(&s.to_le_bytes());
            }
            let mut buckets: Vec<_> = rep.buckets.iter().collect();
            buckets.sort_unstable_by_key(|(fp, _)| **fp);
            out.extend_from_slice(&(buckets.len() as u64).to_le_bytes());
            for (fp, ids) in buckets {
                out.extend_from_slice(&fp.to_le_bytes());
                put_u32(&mut out, ids.len());
                for id in ids {
                    out.extend_from_slice(&id.to_le_bytes());
                }
            }
        }
        put_u32(&mut out, self.points.len());
        for x in &self.points {
            put_u32(&mut out, x.len());
            for v in x.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let b1 = r.f64()?;
        let b2 = r.f64()?;
        let seed = r.u64()?;
        if !(0.0 < b2 && b2 < b1 && b1 < 1.0) {
            return Err(Error::Snapshot(format!("invalid thresholds b1={b1}, b2={b2}")));
        }
        let rep_count = r.u32()?;
        let mut raw_reps = Vec::new();
        for _ in 0..rep_count {
            let k = r.u32()? as usize;
            let w = r.u32()? as usize;
            let rep_b1 = r.f64()?;
            let master_seed = r.u64()?;
            let mut params = ChosenPathParams::new(rep_b1, k, w, master_seed)
                .map_err(|e| Error::Snapshot(e.to_string()))?;
            params.level_seeds = (0..k).map(|_| r.u64()).collect::<Result<_>>()?;
            let bucket_count = r.u64()?;
            let mut buckets = HashMap::new();
            let mut last_fp = None;
            for _ in 0..bucket_count {
                let fp = r.u64()?;
                if last_fp.is_some_and(|last| last >= fp) {
                    return Err(Error::Snapshot("buckets out of order".into()));
                }
                last_fp = Some(fp);
                let count = r.u32()?;
                if count == 0 {
                    return Err(Error::Snapshot("empty bucket".into()));
                }
                let ids: Vec<u32> = (0..count).map(|_| r.u32()).collect::<Result<_>>()?;
                if ids.windows(2).any(|p| p[0] >= p[1]) {
                    return Err(Error::Snapshot("bucket ids out of order".into()));
                }
                buckets.insert(fp, ids);
            }
            raw_reps.push(CpRep {
                map: ChosenPath::new(params),
                buckets,
            });
        }
        let n = r.u32()?;
        let mut points = Vec::new();
        for id in 0..n as usize {
            let len = r.u32()?;
            if len == 0 {
                return Err(Error::Snapshot(format!("point {id} is empty")));
            }
            let dims: Vec<u32> = (0..len).map(|_| r.u32()).collect::<Result<_>>()?;
            points.push(SparseSet::new(dims).map_err(|e| Error::Snapshot(e.to_string()))?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        let out_of_range = raw_reps
            .iter()
            .flat_map(|rep| rep.buckets.values().flatten())
            .any(|&id| id >= n);
        if out_of_range {
            return Err(Error::Snapshot("bucket refers to a missing point".into()));
        }
        Ok(CpIndex {
            b1,
            b2,
            seed,
            reps: raw_reps,
            points,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        CpIndex::from_bytes(&fs::read(path)?)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("snapshot fields fit in u32");
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Snapshot(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}
