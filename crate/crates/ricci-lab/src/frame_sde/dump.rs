//! Binary path dump.
//!
//! Layout, all little endian: magic `RLPD`, `u32` version, `u32` d,
//! `u32` ambient dimension, `f64` h, `u64` steps, `u64` path count; then per
//! path `(steps+1)·ambient` node coordinates, `steps` local-time increments
//! and `steps·d` Brownian increments, all `f64`.

use super::path::PathSample;
use crate::error::{Error, Result};
use crate::linalg::CAP;

pub const MAGIC: &[u8; 4] = b"RLPD";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 4 + 4 + 8 + 8 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct DumpedPath {
    pub positions: Vec<f64>,
    pub local_time: Vec<f64>,
    pub increments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathDump {
    pub d: usize,
    pub ambient: usize,
    pub h: f64,
    pub steps: usize,
    pub paths: Vec<DumpedPath>,
}

impl PathDump {
    pub fn from_samples(paths: &[PathSample]) -> Result<Self> {
        let first = paths.first().ok_or_else(|| Error::InvalidArgument("no paths to dump".into()))?;
        let (d, ambient, h, steps) = (first.d, first.ambient, first.h, first.steps());
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            if p.d != d || p.ambient != ambient || p.h != h || p.steps() != steps {
                return Err(Error::InvalidArgument("paths in one dump must share a grid".into()));
            }
            out.push(DumpedPath {
                positions: p.positions.iter().flat_map(|x| x.iter().take(ambient).copied()).collect(),
                local_time: p.local_time.clone(),
                increments: p.increments.iter().flat_map(|x| x.iter().take(d).copied()).collect(),
            });
        }
        Ok(Self { d, ambient, h, steps, paths: out })
    }

    fn path_floats(&self) -> usize {
        (self.steps + 1) * self.ambient + self.steps + self.steps * self.d
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER + 8 * self.paths.len() * self.path_floats());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.d as u32).to_le_bytes());
        buf.extend_from_slice(&(self.ambient as u32).to_le_bytes());
        buf.extend_from_slice(&self.h.to_le_bytes());
        buf.extend_from_slice(&(self.steps as u64).to_le_bytes());
        buf.extend_from_slice(&(self.paths.len() as u64).to_le_bytes());
        for p in &self.paths {
            for v in p.positions.iter().chain(&p.local_time).chain(&p.increments) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported version {version}")));
        }
        let d = r.u32()? as usize;
        let ambient = r.u32()? as usize;
        if d == 0 || ambient > CAP || ambient < d || ambient > d + 1 {
            return Err(Error::Decode(format!("bad dimensions d = {d}, ambient = {ambient}")));
        }
        let h = r.f64()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Decode("step size must be positive".into()));
        }
        let steps = usize::try_from(r.u64()?).map_err(|_| Error::Decode("step count overflows".into()))?;
        let n = r.u64()?;
        let per_path = steps
            .checked_add(1)
            .and_then(|s| s.checked_mul(ambient))
            .and_then(|a| steps.checked_mul(d + 1).and_then(|b| a.checked_add(b)))
            .and_then(|f| f.checked_mul(8))
            .ok_or_else(|| Error::Decode("path size overflows".into()))?;
        let remaining = bytes.len() - r.pos;
        let expected = (n as u128) * (per_path as u128);
        if expected != remaining as u128 {
            return Err(Error::Decode(format!("expected {expected} payload bytes, found {remaining}")));
        }
        let mut paths = Vec::with_capacity(n as usize);
        for _ in 0..n {
            paths.push(DumpedPath {
                positions: r.f64s((steps + 1) * ambient)?,
                local_time: r.f64s(steps)?,
                increments: r.f64s(steps * d)?,
            });
        }
        Ok(Self { d, ambient, h, steps, paths })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Decode("truncated input".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
