//! Counter-style random streams.
//!
//! Every random decision in a run draws from a stream keyed by the master seed
//! and a tuple of labels (what is being sampled, which block, which row, which
//! sweep). Results therefore never depend on how work is spread over threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// First label of every stream key, separating the users of the label space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    GridPermutation = 1,
    TrainTestSplit = 2,
    Synthetic = 3,
    InitFactors = 10,
    InitHyper = 11,
    RowUpdate = 12,
    HyperUpdate = 13,
}

/// A deterministic random stream. Not shared between threads.
#[derive(Clone, Debug)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(master_seed: u64, labels: &[u64]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"bmfpp/stream/v1");
        hasher.update(master_seed.to_le_bytes());
        hasher.update((labels.len() as u64).to_le_bytes());
        for label in labels {
            hasher.update(label.to_le_bytes());
        }
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&hasher.finalize());
        RngStream(ChaCha8Rng::from_seed(seed))
    }

    pub fn tagged(master_seed: u64, tag: StreamTag, labels: &[u64]) -> Self {
        let mut key = Vec::with_capacity(labels.len() + 1);
        key.push(tag as u64);
        key.extend_from_slice(labels);
        Self::new(master_seed, &key)
    }
}

/// Derive the stream for `(master_seed, labels)`. Length-prefixed hashing makes
/// the map injective over label tuples.
pub fn derive_stream(master_seed: u64, labels: &[u64]) -> RngStream {
    RngStream::new(master_seed, labels)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
