//! Distance to the next prime, `a_n = p_{pi(n)+1} - n`, at scale.
//!
//! - [`sieve`]: segmented sieve answering `pi(x)`, `p_k`, next-prime and twin queries.
//! - [`gapstats`]: prefix aggregates over prime gaps, with bit-exact checkpoints.
//! - [`sequence`]: the sequence itself, solution counts, and a gcd-based oracle.
//! - [`identities`]: closed forms for partial sums and products, checked against brute force.
//! - [`asymptotics`]: ratio and residual tables against asymptotic main terms.
//! - [`cli`]: the `gapseq` command line.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod gapstats;
pub mod identities;
pub mod numeric;
pub mod sequence;
pub mod sieve;

pub use error::{Error, Result};
pub use sieve::{PrimeEngine, SieveConfig};
