//! Binary checkpoint format for trained embedding tables.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   4  bytes  "LGCF"
//! version u16       1
//! n_users u64
//! n_items u64
//! dim     u32       spatial dimensionality d (rows hold d+1 floats)
//! layers  u32
//! mode    u8        0 = hyperbolic, 1 = tangent
//! seed    u64
//! payload (n+m)*(d+1) f64, row-major
//! sha256  32 bytes  digest of every preceding byte
//! ```

use lgcf_core::model::{ConvMode, EmbeddingMatrix};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LGCF";
const VERSION: u16 = 1;
pub const MANIFOLD_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic: not an LGCF checkpoint")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u16),
    #[error("checksum mismatch: checkpoint corrupted")]
    BadChecksum,
    #[error("truncated checkpoint")]
    Truncated,
    #[error("checkpoint row {row} is off the hyperboloid by {violation:e}")]
    OffManifold { row: usize, violation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n_users: usize,
    pub n_items: usize,
    pub layers: usize,
    pub mode: ConvMode,
    pub seed: u64,
    pub embeddings: EmbeddingMatrix,
}

impl Checkpoint {
    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    /// Serializes to the format above; byte-identical for identical
    /// contents.
    pub fn to_bytes(&self) -> Vec<u8> {
        let e = &self.embeddings;
        let mut buf = Vec::with_capacity(39 + e.data().len() * 8 + 32);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n_users as u64).to_le_bytes());
        buf.extend_from_slice(&(self.n_items as u64).to_le_bytes());
        buf.extend_from_slice(&(e.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.layers as u32).to_le_bytes());
        buf.push(match self.mode {
            ConvMode::Hyperbolic => 0,
            ConvMode::Tangent => 1,
        });
        buf.extend_from_slice(&self.seed.to_le_bytes());
        for v in e.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < 39 + 32 {
            return Err(CheckpointError::Truncated);
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(CheckpointError::BadChecksum);
        }
        if &body[0..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u16::from_le_bytes(body[4..6].try_into().unwrap());
        if version != VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let n_users = u64::from_le_bytes(body[6..14].try_into().unwrap()) as usize;
        let n_items = u64::from_le_bytes(body[14..22].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(body[22..26].try_into().unwrap()) as usize;
        let layers = u32::from_le_bytes(body[26..30].try_into().unwrap()) as usize;
        let mode = match body[30] {
            0 => ConvMode::Hyperbolic,
            1 => ConvMode::Tangent,
            _ => return Err(CheckpointError::BadMagic),
        };
        let seed = u64::from_le_bytes(body[31..39].try_into().unwrap());

        let expected = (n_users + n_items) * (dim + 1) * 8;
        let payload = &body[39..];
        if payload.len() != expected {
            return Err(CheckpointError::Truncated);
        }
        let data: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let embeddings = EmbeddingMatrix::from_raw(dim, data);
        for row in 0..embeddings.n_rows() {
            let r = embeddings.row(row);
            let violation =
                (lgcf_core::geometry::lorentz_inner(r, r).unwrap() + 1.0).abs();
            // |<x,x>+1| carries rounding error on the order of eps*x0^2
            // for points far from the origin, so the tolerance scales
            // with the squared time coordinate.
            if violation > MANIFOLD_TOL * (r[0] * r[0]).max(1.0) {
                return Err(CheckpointError::OffManifold { row, violation });
            }
        }
        Ok(Self {
            n_users,
            n_items,
            layers,
            mode,
            seed,
            embeddings,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = std::fs::File::create(path).map_err(io)?;
        file.write_all(&self.to_bytes()).map_err(io)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let io = |source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(io)?
            .read_to_end(&mut bytes)
            .map_err(io)?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lgcf_core::model::{init_embeddings, ModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let cfg = ModelConfig {
            dim: 4,
            ..ModelConfig::default()
        };
        Checkpoint {
            n_users: 3,
            n_items: 2,
            layers: 2,
            mode: ConvMode::Hyperbolic,
            seed: 9,
            embeddings: init_embeddings(5, &cfg, &mut ChaCha8Rng::seed_from_u64(1)),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cp = sample();
        let bytes = cp.to_bytes();
        let loaded = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(loaded, cp);
        assert_eq!(loaded.to_bytes(), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let mut bytes = sample().to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xFF;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(CheckpointError::BadChecksum)
        ));
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..10]),
            Err(CheckpointError::Truncated)
        ));
    }

    #[test]
    fn off_manifold_rows_are_rejected() {
        let cp = sample();
        let mut data = cp.embeddings.data().to_vec();
        data[0] += 0.5;
        let bad = Checkpoint {
            embeddings: EmbeddingMatrix::from_raw(4, data),
            ..cp
        };
        assert!(matches!(
            Checkpoint::from_bytes(&bad.to_bytes()),
            Err(CheckpointError::OffManifold { row: 0, .. })
        ));
    }

    #[test]
    fn save_and_load_through_the_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.lgcf");
        let cp = sample();
        cp.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), cp);
    }
}
