//! Opinion dynamics co-evolving with a similarity-based recommender.
//!
//! Users hold opinion vectors in `[0,1]^m`. At every step a recommender links
//! users whose opinions are similar enough (Euclidean radius or cosine
//! threshold) and each user moves to the similarity-weighted average of the
//! users it is linked to. On top of the autonomous model the crate provides:
//!
//! - cluster detection and upper bounds on the number of clusters
//!   ([`cluster`]),
//! - a controlled variant where external propagators inject opinions, with a
//!   quadratic tracking cost ([`control`]),
//! - two optimizers for the propagator opinions: a PPO actor-critic with
//!   hand-written backpropagation ([`ppo`]) and an evolutionary baseline
//!   ([`ea`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod control;
pub mod dynamics;
pub mod ea;
mod error;
pub mod kernel;
pub mod nn;
pub mod opinion;
pub mod ppo;

pub use error::{Error, Result};
pub use kernel::{KernelConfig, Method};
pub use opinion::OpinionMatrix;

/// Seedable generator used everywhere a random stream is needed.
pub type Rng = rand_chacha::ChaCha8Rng;
