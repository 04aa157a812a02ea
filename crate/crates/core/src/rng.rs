//! Seeded random streams.
//!
//! Every source of randomness in a run owns a separate ChaCha stream so that
//! ablating one of them leaves the others untouched. Channel draws are
//! additionally addressable by their iteration tag: draw `t` of a given seed
//! is the same no matter which draws were requested before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stream identifiers within one ChaCha key.
const STREAM_PROBE: u64 = 1;
const STREAM_SELECT: u64 = 2;
const STREAM_INIT: u64 = 3;
/// Channel draws use streams `OMEGA_BASE + tag`, far away from the fixed ones.
const OMEGA_BASE: u64 = 1 << 32;

/// SplitMix64 finalizer, used to derive replication seeds from a master seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds for the independent random sources of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedBundle {
    /// States of nature.
    pub omega: u64,
    /// Probe directions U.
    pub probe: u64,
    /// Returned-iterate selection t*.
    pub select: u64,
    /// Random initial / baseline IRS parameters.
    pub init: u64,
}

impl SeedBundle {
    pub fn from_master(master: u64) -> Self {
        Self::for_replication(master, 0)
    }

    /// Seed bundle of replication `rep` under `master`.
    pub fn for_replication(master: u64, rep: u64) -> Self {
        let base = mix64(master ^ mix64(rep.wrapping_add(0x5EED)));
        Self {
            omega: mix64(base ^ 0x0A),
            probe: mix64(base ^ 0x0B),
            select: mix64(base ^ 0x0C),
            init: mix64(base ^ 0x0D),
        }
    }

    pub fn probe_rng(&self) -> ChaCha8Rng {
        stream(self.probe, STREAM_PROBE)
    }

    pub fn select_rng(&self) -> ChaCha8Rng {
        stream(self.select, STREAM_SELECT)
    }

    pub fn init_rng(&self) -> ChaCha8Rng {
        stream(self.init, STREAM_INIT)
    }

    /// Generator for the channel draw tagged `tag`.
    pub fn omega_rng(&self, tag: u64) -> ChaCha8Rng {
        omega_stream(self.omega, tag)
    }
}

pub fn omega_stream(seed: u64, tag: u64) -> ChaCha8Rng {
    stream(seed, OMEGA_BASE.wrapping_add(tag))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
