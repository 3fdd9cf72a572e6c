//! Named deterministic random streams.
//!
//! A single master seed fans out into independent streams addressed by a
//! path of `(label, index)` pairs. Each stream yields one generator per
//! item index, so batched work produces the same draws no matter how it is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Key for a family of per-item generators.
#[derive(Clone, PartialEq, Eq)]
pub struct RngStream {
    key: [u8; 32],
}

impl std::fmt::Debug for RngStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RngStream(")?;
        for b in &self.key[..6] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"ensemble-pac/master");
        hasher.update(seed.to_le_bytes());
        Self {
            key: hasher.finalize().into(),
        }
    }

    /// Child stream for `(label, index)`.
    pub fn derive(&self, label: &str, index: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        hasher.update(index.to_le_bytes());
        Self {
            key: hasher.finalize().into(),
        }
    }

    /// Generator for item `index` of this stream.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}
