//! Deterministic, independent random streams.
//!
//! A stream is a ChaCha8 generator keyed by a 64-bit master seed and selecting
//! one of its 2^64 independent streams. Replicate `r` of a stream uses a
//! derived key, so results never depend on how replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Child stream `r`, independent of this stream and of its other children.
    pub fn substream(&self, r: u64) -> RngStream {
        RngStream {
            master_seed: splitmix(self.master_seed ^ splitmix(self.stream_index.wrapping_add(0x5851_F42D_4C95_7F2D))),
            stream_index: r,
        }
    }

    /// Stream keyed by hashing a seed with an experiment and check name.
    pub fn labeled(seed: u64, experiment_id: &str, check_name: &str) -> RngStream {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update((experiment_id.len() as u64).to_le_bytes());
        h.update(experiment_id.as_bytes());
        h.update(check_name.as_bytes());
        let digest = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        RngStream::new(u64::from_le_bytes(bytes), 0)
    }
}

/// Evaluates `f(r, rng_r)` for `r in 0..count` in parallel, collected in
/// replicate order.
pub fn replicate<T, F>(stream: RngStream, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..count as u64)
        .into_par_iter()
        .map(|r| f(r, &mut stream.substream(r).rng()))
        .collect()
}

/// Fallible [`replicate`]; the first error in replicate order wins.
pub fn try_replicate<T, E, F>(stream: RngStream, count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T, E> + Sync + Send,
{
    (0..count as u64)
        .into_par_iter()
        .map(|r| f(r, &mut stream.substream(r).rng()))
        .collect()
}
