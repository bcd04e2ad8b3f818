//! Independent random substreams.
//!
//! Every primitive stream is a ChaCha8 generator seeded by folding
//! `(master, replication, node, kind)` through SplitMix64, so streams do not depend on
//! the order in which replications or nodes are simulated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    ArrivalTimes = 1,
    Leads = 2,
    Service = 3,
    Routing = 4,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream_seed(master: u64, replication: u64, node: usize, kind: StreamKind) -> u64 {
    [replication, node as u64, kind as u64].iter().fold(splitmix64(master), |acc, v| splitmix64(acc ^ splitmix64(*v)))
}

pub fn substream(master: u64, replication: u64, node: usize, kind: StreamKind) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master, replication, node, kind))
}
