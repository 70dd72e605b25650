//! Seedable heterogeneous mobile-edge-computing (H-MEC) task offloading.
//!
//! The crate models a zone with mobile user equipment (UEs), a fixed ground
//! station, ground vehicles restricted to a road and UAVs, and schedules each
//! UE's task either locally or on one edge node so that the total weighted
//! latency is minimized.
//!
//! Layout:
//!
//! - [`env`]: scenario geometry, mobility, tasks and the radio channel.
//! - [`problem`]: assignments, latency objective, constraint checks and the
//!   closed-form resource split for a fixed association.
//! - [`placement`]: k-means positioning of UAVs and ground vehicles.
//! - [`optim`]: exhaustive and genetic global solvers, simulated-annealing
//!   action refinement and feasibility repair.
//! - [`net`]: a small dense network with a softmax association head and a
//!   sigmoid resource-fraction head, trained by backpropagation.
//! - [`sched`]: the learning controllers (supervised with entropy-gated
//!   incremental learning, and refinement-driven reinforcement) plus the
//!   Random / Greedy / Local baselines.
//! - [`harness`]: config loading, trajectories, sweeps, ablations and CSV
//!   output used by the `hmec` binary.
//!
//! Runnable walkthroughs live in `examples/`; see the README.

pub mod env;
pub mod error;
pub mod harness;
pub mod net;
pub mod optim;
pub mod placement;
pub mod problem;
pub mod sched;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide deterministic generator.
pub type SimRng = ChaCha8Rng;

/// Build an independent generator for `(seed, stream)`.
///
/// Each consumer (world, placement, every scheduler, evaluation) draws from its own stream.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix two integers into a fresh seed, for seeds derived per epoch or per world.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
