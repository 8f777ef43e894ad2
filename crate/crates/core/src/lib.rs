//! Simulation and phase-shift design for cascaded multi-IRS mmWave links.
//!
//! A base station with `N` antennas reaches a single-antenna user through a
//! chain of `K` intelligent reflecting surfaces of `M` elements each. The
//! crate builds Saleh-Valenzuela channel chains ([`channel`]), jointly
//! designs the BS precoder and every surface's phase shifts ([`optimize`]),
//! evaluates received power and SNR ([`metrics`]) and runs Monte-Carlo
//! sweeps over distance, `K` and `M` ([`sim`]).
//!
//! ```
//! use mirs::channel::{build_cascade, AngleAssignment, CascadeParams, GainMode};
//! use mirs::metrics::received_power;
//! use mirs::optimize::solve_closed_form;
//! use rand::SeedableRng;
//!
//! let params = CascadeParams::unit(8, 16, 3);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let chain = build_cascade(&params, GainMode::Random, &AngleAssignment::UniformRandom, &mut rng)?;
//! let solution = solve_closed_form(&chain, 1.0)?;
//! let p = received_power(&chain, &solution)?;
//!
//! // aligned power is P · Π|μ_i|²
//! let mu2: f64 = chain.rank1_hops()?.iter().map(|h| h.mu().norm_sqr()).product();
//! assert!((p / mu2 - 1.0).abs() < 1e-9);
//! # Ok::<(), mirs::Error>(())
//! ```
//!
//! The guide under `book/` walks through the model chapter by chapter; its
//! code blocks are compiled and run as doc-tests of this crate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
mod error;
pub mod metrics;
pub mod optimize;
pub mod sim;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/closed_form.md")]
    mod closed_form {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/link_budget.md")]
    mod link_budget {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
