//! Prime gaps `d_k = p_{k+1} - p_k` and their running prefix aggregates.
//!
//! A [`GapAggregate`] is the state after consuming gaps `d_1..d_k` in index
//! order. Integer sums are exact; real sums are compensated and always fed
//! left to right, so an aggregate restored from a checkpoint and advanced
//! further is bit-identical to one advanced in a single run.

mod checkpoint;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, TableProgress, CHECKPOINT_VERSION,
};

use crate::error::{Error, Result};
use crate::numeric::{harmonic, ln_factorial, ln_u64, CompensatedSum};
use crate::sieve::{PrimeEngine, Primes};

/// How `accumulate_to` interprets its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// Gaps `d_i` with `i <= target`.
    GapIndex,
    /// Gaps `d_i` with `p_i <= target`.
    PrimeValue,
}

/// Prefix aggregate over the first `k` prime gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapAggregate {
    /// Gaps consumed; primes `p_1..=p_{k+1}` have been seen.
    pub k: u64,
    /// `p_{k+1}`.
    pub last_prime: u64,
    pub sum_d: u64,
    pub sum_d2: u64,
    /// Number of gaps equal to 2.
    pub twin_gaps: u64,
    /// Sum of `ln d_i` (the `i = 1` term is `ln 1 = 0`).
    pub sum_log_d: CompensatedSum,
    /// Sum of `ln(d_i!)`.
    pub sum_log_d_factorial: CompensatedSum,
    /// Sum of `H(d_i)`.
    pub sum_harmonic: CompensatedSum,
    /// Sum of `ln ln i` for `2 <= i <= k`.
    pub sum_log_log_index: CompensatedSum,
}

impl Default for GapAggregate {
    fn default() -> Self {
        Self::new()
    }
}

impl GapAggregate {
    /// Empty aggregate: no gaps, `p_1 = 2` seen.
    pub const fn new() -> Self {
        GapAggregate {
            k: 0,
            last_prime: 2,
            sum_d: 0,
            sum_d2: 0,
            twin_gaps: 0,
            sum_log_d: CompensatedSum::new(),
            sum_log_d_factorial: CompensatedSum::new(),
            sum_harmonic: CompensatedSum::new(),
            sum_log_log_index: CompensatedSum::new(),
        }
    }

    /// Consumes the gap ending at `next_prime`.
    #[inline]
    pub fn push(&mut self, next_prime: u64) {
        debug_assert!(next_prime > self.last_prime);
        let d = next_prime - self.last_prime;
        self.k += 1;
        self.last_prime = next_prime;
        self.sum_d += d;
        self.sum_d2 += d * d;
        if d == 2 {
            self.twin_gaps += 1;
        }
        self.sum_log_d.add(ln_u64(d));
        self.sum_log_d_factorial.add(ln_factorial(d));
        self.sum_harmonic.add(harmonic(d));
        if self.k >= 2 {
            self.sum_log_log_index.add(ln_u64(self.k).ln());
        }
    }

    /// Geometric-mean gap ratio `(d_2...d_k / (ln 2...ln k))^(1/k)` at `k` gaps,
    /// evaluated in log space. The exponent divisor is `k`.
    pub fn geometric_mean_ratio(&self) -> Option<f64> {
        if self.k < 2 {
            return None;
        }
        let log_ratio = self.sum_log_d.value() - self.sum_log_log_index.value();
        Some((log_ratio / self.k as f64).exp())
    }
}

/// Forward-only cursor that feeds gaps from an engine into an aggregate.
#[derive(Debug, Clone)]
pub struct GapCursor<'a> {
    engine: &'a PrimeEngine,
    agg: GapAggregate,
    primes: Primes<'a>,
    peeked: Option<u64>,
}

impl<'a> GapCursor<'a> {
    pub fn new(engine: &'a PrimeEngine) -> Self {
        Self::resume(engine, GapAggregate::new())
    }

    /// Continues from a previously computed aggregate.
    pub fn resume(engine: &'a PrimeEngine, agg: GapAggregate) -> Self {
        GapCursor {
            engine,
            agg,
            primes: engine.primes_from(agg.last_prime + 1),
            peeked: None,
        }
    }

    pub fn aggregate(&self) -> &GapAggregate {
        &self.agg
    }

    pub fn into_aggregate(self) -> GapAggregate {
        self.agg
    }

    /// Prime following `aggregate().last_prime`, if sieved.
    pub fn peek_next_prime(&mut self) -> Option<u64> {
        if self.peeked.is_none() {
            self.peeked = self.primes.next();
        }
        self.peeked
    }

    /// Consumes one gap. Returns `None` once the sieve is exhausted.
    pub fn step(&mut self) -> Option<u64> {
        let next = self.peek_next_prime()?;
        self.peeked = None;
        let d = next - self.agg.last_prime;
        self.agg.push(next);
        Some(d)
    }

    fn exhausted(&self) -> Error {
        Error::IndexOutOfRange {
            index: self.agg.k + 2,
            available: self.engine.total_primes(),
        }
    }

    /// Advances until `k == target`. Fails if the sieve runs out first.
    pub fn advance_to_index(&mut self, target: u64) -> Result<&GapAggregate> {
        if target < self.agg.k {
            return Err(Error::InvalidArgument(format!(
                "cursor is at gap {} and cannot move back to {target}",
                self.agg.k
            )));
        }
        if target.saturating_add(1) > self.engine.total_primes() {
            return Err(Error::IndexOutOfRange {
                index: target.saturating_add(1),
                available: self.engine.total_primes(),
            });
        }
        while self.agg.k < target {
            if self.step().is_none() {
                return Err(self.exhausted());
            }
        }
        Ok(&self.agg)
    }

    /// Advances through every gap `d_i` with `p_i <= x` (the gap leaving
    /// `p_{pi(x)}` is included, so `p_{pi(x)+1}` must be sieved).
    pub fn advance_through_value(&mut self, x: u64) -> Result<&GapAggregate> {
        if x >= 2 {
            self.engine.next_prime(x)?;
        }
        while self.agg.last_prime <= x {
            if self.step().is_none() {
                return Err(self.exhausted());
            }
        }
        Ok(&self.agg)
    }

    /// Advances while the next prime is `<= x`, leaving `last_prime = p_{pi(x)}`.
    pub fn advance_primes_to(&mut self, x: u64) -> Result<&GapAggregate> {
        if x > self.engine.limit() {
            return Err(Error::RangeExceedsLimit {
                arg: x,
                limit: self.engine.limit(),
            });
        }
        while self.peek_next_prime().is_some_and(|p| p <= x) {
            self.step();
        }
        Ok(&self.agg)
    }
}

/// `d_k = p_{k+1} - p_k`.
pub fn gap_at(engine: &PrimeEngine, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            available: engine.total_primes(),
        });
    }
    Ok(engine.nth_prime(k + 1)? - engine.nth_prime(k)?)
}

/// Aggregate over all gaps selected by `target` under `mode`.
pub fn accumulate_to(engine: &PrimeEngine, target: u64, mode: BoundMode) -> Result<GapAggregate> {
    let mut cursor = GapCursor::new(engine);
    match mode {
        BoundMode::GapIndex => cursor.advance_to_index(target)?,
        BoundMode::PrimeValue => cursor.advance_through_value(target)?,
    };
    Ok(cursor.into_aggregate())
}

/// `(d_2...d_n / (ln 2...ln n))^(1/n)` for `n >= 2`.
pub fn geometric_mean_ratio(engine: &PrimeEngine, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "geometric mean ratio needs n >= 2, got {n}"
        )));
    }
    let agg = accumulate_to(engine, n, BoundMode::GapIndex)?;
    Ok(agg.geometric_mean_ratio().expect("k >= 2"))
}
