//! Witness paths: the diagonal `Y_k^{(k)}` of the virtual array plus the
//! estimator draws, which together fix the conditional law of the output.
//!
//! Binary layout (little endian):
//!
//! ```text
//! magic      8 bytes  "VPSAWPTH"
//! version    u32      = 1
//! dim        u32
//! steps      u64      T
//! batch      u32      B
//! hash       32 bytes SHA-256 of the run parameters and functional
//! seed       u64      master seed
//! xi_kind    u8       0 = unit, 1 = data index
//! diagonal   f64 × (T+1)·B·d, row-major by step, then batch, then coordinate
//! xi         u64 × T  (only when xi_kind = 1)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::functional::Xi;

const MAGIC: &[u8; 8] = b"VPSAWPTH";
pub const WITNESS_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPath {
    pub dim: usize,
    pub steps: usize,
    pub batch: usize,
    /// `(T+1)·B·d` values.
    pub diagonal: Vec<f64>,
    /// One draw per step.
    pub xi: Vec<Xi>,
    pub master_seed: u64,
    pub config_hash: [u8; 32],
}

impl WitnessPath {
    /// The `B` witnesses used at step `k`, concatenated.
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.batch * self.dim;
        &self.diagonal[k * w..(k + 1) * w]
    }

    /// `Y_k^{(k)}` of batch array `b`.
    pub fn point(&self, k: usize, b: usize) -> &[f64] {
        let start = (k * self.batch + b) * self.dim;
        &self.diagonal[start..start + self.dim]
    }

    pub fn config_hash_hex(&self) -> String {
        hex::encode(self.config_hash)
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.dim == 0 || self.batch == 0 {
            return Err(Error::Format("zero dimension or batch".into()));
        }
        if self.diagonal.len() != (self.steps + 1) * self.batch * self.dim {
            return Err(Error::Format(format!(
                "diagonal holds {} values, expected {}",
                self.diagonal.len(),
                (self.steps + 1) * self.batch * self.dim
            )));
        }
        if self.xi.len() != self.steps {
            return Err(Error::Format(format!("{} estimator draws for {} steps", self.xi.len(), self.steps)));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        self.check_shape()?;
        let xi_kind: u8 = match self.xi.first() {
            Some(Xi::Index(_)) => 1,
            _ => 0,
        };
        w.write_all(MAGIC)?;
        w.write_all(&WITNESS_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&(self.batch as u32).to_le_bytes())?;
        w.write_all(&self.config_hash)?;
        w.write_all(&self.master_seed.to_le_bytes())?;
        w.write_all(&[xi_kind])?;
        for v in &self.diagonal {
            w.write_all(&v.to_le_bytes())?;
        }
        for xi in &self.xi {
            match (xi_kind, xi) {
                (1, Xi::Index(i)) => w.write_all(&(*i as u64).to_le_bytes())?,
                (0, Xi::Unit) => {}
                _ => return Err(Error::Format("mixed estimator draw kinds".into())),
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != WITNESS_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let steps = read_u64(&mut r)? as usize;
        let batch = read_u32(&mut r)? as usize;
        let mut config_hash = [0u8; 32];
        r.read_exact(&mut config_hash).map_err(truncated)?;
        let master_seed = read_u64(&mut r)?;
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind).map_err(truncated)?;
        let count = (steps + 1)
            .checked_mul(batch)
            .and_then(|v| v.checked_mul(dim))
            .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
        let mut diagonal = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            diagonal.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        let xi = match kind[0] {
            0 => vec![Xi::Unit; steps],
            1 => (0..steps)
                .map(|_| read_u64(&mut r).map(|i| Xi::Index(i as usize)))
                .collect::<Result<_>>()?,
            other => return Err(Error::Format(format!("unknown estimator draw kind {other}"))),
        };
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        let path = Self {
            dim,
            steps,
            batch,
            diagonal,
            xi,
            master_seed,
            config_hash,
        };
        path.check_shape()?;
        Ok(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated file".into())
    } else {
        Error::Io(e)
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}
