//! Binary generator checkpoints.
//!
//! Layout, all integers `u64` and all reals `f64`, little-endian:
//! magic, version, seed, mode tag, width, height, the four scaler bounds,
//! leaky slope, output tag, layer count, layer widths, condition width,
//! parameter count, parameters.

use std::path::Path;

use super::data::ConditionScaler;
use super::net::{NetSpec, OutputSquash, ParamBundle};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CGANCKPT";
const VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Vector,
    Image { width: usize, height: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub mode: SampleMode,
    pub scaler: ConditionScaler,
    pub spec: NetSpec,
    pub cond_dim: usize,
    pub params: ParamBundle,
}

impl Checkpoint {
    pub fn new(seed: u64, mode: SampleMode, scaler: ConditionScaler, spec: NetSpec, cond_dim: usize, params: ParamBundle) -> Result<Self> {
        if cond_dim >= spec.input_dim() {
            return Err(Error::Checkpoint(format!(
                "condition width {cond_dim} leaves no noise input in a {}-wide generator",
                spec.input_dim()
            )));
        }
        if params.schema() != spec.schema().as_slice() {
            return Err(Error::Checkpoint("parameters do not match the network layout".into()));
        }
        if let SampleMode::Image { width, height } = mode {
            if width * height != spec.output_dim() {
                return Err(Error::Checkpoint(format!(
                    "{width}x{height} image does not match generator output {}",
                    spec.output_dim()
                )));
            }
        }
        Ok(Self { seed, mode, scaler, spec, cond_dim, params })
    }

    pub fn z_dim(&self) -> usize {
        self.spec.input_dim() - self.cond_dim
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * (20 + self.spec.sizes.len() + self.params.len()));
        out.extend_from_slice(MAGIC);
        let u = |v: u64, out: &mut Vec<u8>| out.extend_from_slice(&v.to_le_bytes());
        u(VERSION, &mut out);
        u(self.seed, &mut out);
        let (tag, w, h) = match self.mode {
            SampleMode::Vector => (0, 0, 0),
            SampleMode::Image { width, height } => (1, width as u64, height as u64),
        };
        u(tag, &mut out);
        u(w, &mut out);
        u(h, &mut out);
        let f = |v: f64, out: &mut Vec<u8>| out.extend_from_slice(&v.to_le_bytes());
        for v in [self.scaler.j_g.0, self.scaler.j_g.1, self.scaler.j_f.0, self.scaler.j_f.1, self.spec.leaky_slope] {
            f(v, &mut out);
        }
        let squash = match self.spec.output {
            OutputSquash::Sigmoid => 0,
            OutputSquash::Linear => 1,
        };
        u(squash, &mut out);
        u(self.spec.sizes.len() as u64, &mut out);
        for &s in &self.spec.sizes {
            u(s as u64, &mut out);
        }
        u(self.cond_dim as u64, &mut out);
        u(self.params.len() as u64, &mut out);
        for &v in self.params.values() {
            f(v, &mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.u64()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let seed = r.u64()?;
        let mode = match (r.u64()?, r.usize()?, r.usize()?) {
            (0, _, _) => SampleMode::Vector,
            (1, width, height) => SampleMode::Image { width, height },
            (t, _, _) => return Err(Error::Checkpoint(format!("unknown sample mode {t}"))),
        };
        let scaler = ConditionScaler::new((r.f64()?, r.f64()?), (r.f64()?, r.f64()?))?;
        let slope = r.f64()?;
        let output = match r.u64()? {
            0 => OutputSquash::Sigmoid,
            1 => OutputSquash::Linear,
            t => return Err(Error::Checkpoint(format!("unknown output tag {t}"))),
        };
        let n_layers = r.usize()?;
        let sizes = (0..n_layers).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
        let spec = NetSpec::new(sizes, slope, output)?;
        let cond_dim = r.usize()?;
        let n = r.usize()?;
        if n != spec.n_params() {
            return Err(Error::Checkpoint(format!("{n} parameters for a network of {}", spec.n_params())));
        }
        let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let params = ParamBundle::new(spec.schema(), values)?;
        Self::new(seed, mode, scaler, spec, cond_dim, params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        // Guards allocation on corrupt counts.
        if v > (self.bytes.len() as u64).max(1 << 20) {
            return Err(Error::Checkpoint(format!("implausible count {v}")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
