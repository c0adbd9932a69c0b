//! DeepQRank: a deep Q-learning agent for listwise learning to rank.
//!
//! The crate covers the full pipeline:
//!
//! - [`letor`] parses, validates, splits and synthesizes LETOR-format
//!   datasets;
//! - [`mdp`] casts ranking as a Markov decision process with a DCG-style
//!   reward, and samples random-policy episodes into a replay buffer;
//! - [`neural`] is a from-scratch 47-32-16-1 Q-network with analytic
//!   backpropagation, SGD and per-step Polyak target averaging;
//! - [`agent`] runs minibatch Q-learning over the buffer and ranks query
//!   groups greedily by estimated value;
//! - [`metrics`] provides DCG/NDCG evaluation and loss diagnostics;
//! - [`model_file`] persists models as versioned JSON;
//! - [`cli`] backs the `deepqrank` binary (`synth`, `train`, `eval`,
//!   `rank`).
//!
//! Every source of randomness is a named sub-stream of one seed (see
//! [`substream_seed`]), so runs are bit-reproducible. Start with the
//! runnable programs under `examples/`.

pub mod agent;
pub mod cli;
pub mod error;
pub mod letor;
pub mod mdp;
pub mod metrics;
pub mod model_file;
pub mod neural;

pub use error::{Error, Result};

/// Derives the seed of a named random sub-stream (`"split"`, `"init"`,
/// `"buffer"`, `"minibatch"`) from the run seed. FNV-1a over the label mixed
/// through a splitmix64 finalizer; pure integer arithmetic, so identical on
/// every platform.
pub fn substream_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
