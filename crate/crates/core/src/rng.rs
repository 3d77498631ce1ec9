//! Hierarchical, order-independent random streams.
//!
//! A [`Seed`] is a root plus a path of indices (experiment, trial, draw, ...).
//! The path is hashed into a ChaCha8 key, so every stream is a pure function
//! of `(root, path)` and trials can run on any worker in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed out by [`Seed::rng`].
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Seed {
    root: u64,
    path: Vec<u64>,
}

impl Seed {
    pub fn new(root: u64) -> Self {
        Self {
            root,
            path: Vec::new(),
        }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Derives the sub-stream `index` below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self {
            root: self.root,
            path,
        }
    }

    /// Derives a sub-stream from several indices at once.
    pub fn descend(&self, indices: &[u64]) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(indices);
        Self {
            root: self.root,
            path,
        }
    }

    fn key(&self) -> [u8; 32] {
        // Length is folded in so that a path and its zero-extended sibling differ.
        let mut h = splitmix64(self.root ^ splitmix64(self.path.len() as u64));
        for &ix in &self.path {
            h = splitmix64(h ^ splitmix64(ix.wrapping_mul(GOLDEN) ^ 0xD1B5_4A32_D192_ED03));
        }
        let mut key = [0u8; 32];
        let mut s = h;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        key
    }

    pub fn rng(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.key())
    }
}
