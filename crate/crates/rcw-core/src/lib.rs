//! Node sampling for networks built on *centrifugal walks*: random walks that
//! start at a source node and only ever move away from it, stopping at each
//! visited node with a per-node stay probability.
//!
//! Three sampler families are provided:
//!
//! * [`tree_sampler`] — samples any connected weighted network with
//!   probability proportional to node weight, after a one-time spanning-tree
//!   weight aggregation (run on the simulated message-passing engine in
//!   [`simnet`]).
//! * [`grid_sampler`] — samples a diamond-shaped lattice grid with any
//!   distance-based distribution, with no preprocessing and no per-node state.
//! * [`ring_sampler`] — samples concentric-rings networks with uniform
//!   connectivity, hopping to the next ring (distance 1) or skipping one ring
//!   (distance 2), all bookkeeping piggybacked on the walk message.
//!
//! Networks without uniform connectivity can be repaired with the attachment
//! point overlay in [`overlay`]. Every sampler has an exact-probability
//! oracle, and [`oracle_stats`] holds the shared machinery for comparing
//! empirical draws against exact laws.

pub mod distributions;
pub mod error;
pub mod grid_sampler;
pub mod netfile;
pub mod oracle_stats;
pub mod overlay;
pub mod ring_sampler;
pub mod simnet;
pub mod topology;
pub mod tree_sampler;

pub use error::{RcwError, Result};
pub use topology::NodeId;

/// Derives the RNG for walk number `index` of a sampling batch seeded with
/// `seed`. Distinct walks get independent ChaCha streams, so batches can be
/// sharded and merged in any order without changing the outcome.
pub fn walk_rng(seed: u64, index: u64) -> rand_chacha::ChaCha12Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
