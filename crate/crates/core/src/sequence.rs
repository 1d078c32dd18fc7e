//! The distance-to-next-prime sequence: `a_n` is the least `t >= 1` with
//! `n + t` prime, so `a_n = p_{pi(n)+1} - n` (OEIS A013632).
//!
//! On each block `[p_k, p_{k+1} - 1]` the sequence counts down
//! `d_k, d_k - 1, ..., 1`; [`stream_a`] emits it block by block.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sieve::{PrimeEngine, Primes};

/// Largest `n` accepted by [`gcd_characterization_check`] by default.
pub const GCD_ORACLE_BOUND: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequenceRecord {
    pub n: u64,
    pub a_n: u64,
}

/// `a_n = next_prime(n) - n`.
pub fn a_of(engine: &PrimeEngine, n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("a_n is defined for n >= 1".into()));
    }
    Ok(engine.next_prime(n)? - n)
}

/// Iterator over `(n, a_n)` for `lo <= n <= hi`, produced as countdown runs.
#[derive(Debug, Clone)]
pub struct SequenceStream<'a> {
    n: u64,
    hi: u64,
    target: u64,
    primes: Primes<'a>,
}

impl Iterator for SequenceStream<'_> {
    type Item = SequenceRecord;

    #[inline]
    fn next(&mut self) -> Option<SequenceRecord> {
        if self.n > self.hi {
            return None;
        }
        if self.n == self.target {
            // Bound-checked in `stream_a`: a prime after `hi` exists.
            self.target = self.primes.next().expect("next prime is sieved");
        }
        let rec = SequenceRecord {
            n: self.n,
            a_n: self.target - self.n,
        };
        self.n += 1;
        Some(rec)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.hi + 1).saturating_sub(self.n) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for SequenceStream<'_> {}

/// Streams `(n, a_n)` for every `n` in `[lo, hi]`.
pub fn stream_a(engine: &PrimeEngine, lo: u64, hi: u64) -> Result<SequenceStream<'_>> {
    if lo == 0 {
        return Err(Error::InvalidArgument("a_n is defined for n >= 1".into()));
    }
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
    }
    engine.next_prime(hi)?;
    let target = engine.next_prime(lo)?;
    Ok(SequenceStream {
        n: lo,
        hi,
        target,
        primes: engine.primes_from(target + 1),
    })
}

/// `#{n <= x : a_n = a}`.
///
/// Each gap `d_k >= a` contributes exactly one solution, `n = p_{k+1} - a`;
/// the prime 2 contributes `n = 1` when `a = 1`. Only gaps are walked.
pub fn solution_count(engine: &PrimeEngine, a: u64, x: u64) -> Result<u64> {
    if a == 0 {
        return Err(Error::InvalidArgument("a must be at least 1".into()));
    }
    let reach = x.checked_add(a).ok_or(Error::RangeExceedsLimit {
        arg: u64::MAX,
        limit: engine.limit(),
    })?;
    if reach > engine.limit() {
        return Err(Error::RangeExceedsLimit {
            arg: reach,
            limit: engine.limit(),
        });
    }
    let mut count = u64::from(a == 1 && x >= 1);
    let mut primes = engine.primes_in(2, reach)?;
    let Some(mut prev) = primes.next() else {
        return Ok(count);
    };
    for p in primes {
        if p - prev >= a {
            count += 1;
        }
        prev = p;
    }
    Ok(count)
}

/// Checks `a_n` against the gcd characterization: the least `t >= 1` with
/// `gcd(n!, n + t) = 1`, i.e. with no prime factor of `n + t` at most `n`.
/// Evaluated by trial division, never by forming `n!`.
pub fn gcd_characterization_check(engine: &PrimeEngine, n: u64) -> Result<bool> {
    gcd_characterization_check_bounded(engine, n, GCD_ORACLE_BOUND)
}

pub fn gcd_characterization_check_bounded(
    engine: &PrimeEngine,
    n: u64,
    bound: u64,
) -> Result<bool> {
    if n < 2 || n > bound {
        return Err(Error::InvalidArgument(format!(
            "gcd characterization checked for 2 <= n <= {bound}, got {n}"
        )));
    }
    let t = (1..)
        .find(|&t| smallest_prime_factor(n + t) > n)
        .expect("a prime exists beyond n");
    Ok(a_of(engine, n)? == t)
}

fn smallest_prime_factor(m: u64) -> u64 {
    if m.is_multiple_of(2) {
        return 2;
    }
    let mut d = 3;
    while d * d <= m {
        if m.is_multiple_of(d) {
            return d;
        }
        d += 2;
    }
    m
}
