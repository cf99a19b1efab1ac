//! Keyed random streams.
//!
//! Every random quantity of a trial is drawn from its own ChaCha stream whose
//! seed is a hash of the master seed, the trial index, a purpose tag and the
//! entity indices. Draws are therefore reproducible from those values alone,
//! independent of evaluation order, thread scheduling, or which other
//! quantities a particular trial happens to need.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags that separate the streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    UePlacement = 1,
    TargetPlacement = 2,
    CommFading = 3,
    Reflection = 4,
    SensingSymbol = 5,
    CommSymbol = 6,
    GatewayNoise = 7,
    MusicSnapshot = 8,
    KMeansSeed = 9,
    OnGridTargets = 10,
}

const DOMAIN: u64 = 0x15AC_5EED_0000_0001;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed material for one trial: the master seed and the trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeed {
    pub master: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(master: u64, trial: u64) -> Self {
        Self { master, trial }
    }

    /// Independent stream for `purpose` and the given entity indices.
    pub fn stream(&self, purpose: Stream, indices: &[u64]) -> ChaCha8Rng {
        let mut h = splitmix64(self.master ^ DOMAIN);
        h = splitmix64(h ^ self.trial);
        h = splitmix64(h ^ purpose as u64);
        for (n, &ix) in indices.iter().enumerate() {
            h = splitmix64(h ^ ix.wrapping_add((n as u64 + 1) << 48));
        }
        let mut seed = [0u8; 32];
        let mut s = h;
        for chunk in seed.chunks_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
