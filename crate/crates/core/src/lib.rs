//! Training-set construction for syndrome-based neural decoders.
//!
//! The crate builds binary linear codes (BCH via GF(2^m)), simulates BPSK
//! over the binary-input AWGN channel, labels received words with
//! maximum-likelihood error patterns through ordered-statistics decoding,
//! shapes the resulting datasets (channel, uniform-weight, biased-noise and
//! uniform-syndrome constructions) and measures frame/bit error rates of any
//! decoder by Monte Carlo simulation.

pub mod bits;
pub mod channel;
pub mod code;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gf2;
pub mod gf2m;
pub mod mld;
pub mod registry;
pub mod rng;

pub use bits::BitVec;
pub use channel::{ChannelParams, NoiseWeightDistribution, ReceivedWord};
pub use code::{bch_code, LinearCode};
pub use error::{Error, Result};
pub use gf2::Gf2Matrix;
pub use mld::{default_order, mld_exhaustive, osd_decode, ErrorPattern, MldDecision};

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}
