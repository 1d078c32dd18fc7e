//! Ratio and residual tables comparing sums over the sequence (and over prime
//! gaps) with their asymptotic main terms, on an increasing grid of `x`.
//!
//! Every sum over `n <= x` is assembled from whole inter-prime blocks plus
//! one partial block, so a table costs `O(pi(x_max))` rather than `O(x_max)`:
//!
//! | summand    | full block `[p_i, p_{i+1})` | partial block `[p_k, x]`, `t = x - p_k + 1` |
//! |------------|-----------------------------|---------------------------------------------|
//! | `a_n`      | `d_i (d_i + 1) / 2`          | `d_k + ... + (d_k - t + 1)`                  |
//! | `1 / a_n`  | `H(d_i)`                     | `1/d_k + ... + 1/(d_k - t + 1)`              |
//! | `ln a_n`   | `ln(d_i!)`                   | `ln d_k + ... + ln(d_k - t + 1)`             |
//!
//! plus the lone `n = 1` term (`a_1 = 1`). Rows are produced by one forward
//! pass; the pass can be checkpointed after any row and resumed bit-exactly.

pub mod bounds;
mod fit;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use fit::{fit_power_law, ExponentFit};

use crate::error::{Error, Result};
use crate::gapstats::{Checkpoint, GapAggregate, GapCursor, TableProgress};
use crate::identities::{sum_closed_from, ClosedFormInputs};
use crate::numeric::{ln_u64, CompensatedSum};
use crate::sieve::PrimeEngine;

/// Exponent in the unconditional upper bound for sums of squared gaps.
pub const GAP_SQUARE_EXPONENT: f64 = 23.0 / 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table {
    /// `sum a_n` against `x ln x` (residual: against `x^(23/18)`).
    Sum,
    /// `sum 1/a_n` against `x ln ln x / ln x`.
    Harmonic,
    /// `sum ln a_n` against `x` (residual: against `x ln x`).
    LogSum,
    /// `sum_{2<=i<=x} ln d_i` against `x ln ln x`.
    Lemma6,
    /// `sum_{p_i<=x} d_i^2` against `x ln^3 x`.
    Gaps2,
    /// Geometric-mean gap ratio at gap index `n`.
    Panaitopol,
}

impl Table {
    pub const ALL: [Table; 6] = [
        Table::Sum,
        Table::Harmonic,
        Table::LogSum,
        Table::Lemma6,
        Table::Gaps2,
        Table::Panaitopol,
    ];

    /// Name used on the command line and in checkpoints.
    pub fn name(self) -> &'static str {
        match self {
            Table::Sum => "sum",
            Table::Harmonic => "harmonic",
            Table::LogSum => "logsum",
            Table::Lemma6 => "lemma6",
            Table::Gaps2 => "gaps2",
            Table::Panaitopol => "panaitopol",
        }
    }

    /// Label written into each row.
    pub fn label(self) -> &'static str {
        match self {
            Table::Sum => "sum_a_over_x_log_x",
            Table::Harmonic => "sum_inv_a_vs_x_loglog_x_over_log_x",
            Table::LogSum => "sum_log_a_over_x",
            Table::Lemma6 => "sum_log_gap_vs_x_loglog_x",
            Table::Gaps2 => "sum_gap_sq_over_x_log3_x",
            Table::Panaitopol => "gap_geometric_mean_ratio",
        }
    }

    /// Smallest admissible grid value (normalizers must be positive).
    pub fn min_x(self) -> u64 {
        match self {
            Table::Harmonic | Table::Lemma6 => 3,
            _ => 2,
        }
    }

    fn indexes_gaps(self) -> bool {
        matches!(self, Table::Lemma6 | Table::Panaitopol)
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Table::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown table {s:?}")))
    }
}

/// One row of a table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub x: u64,
    pub raw: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub residual: Option<f64>,
    pub label: &'static str,
}

/// Geometric grid `start, start*factor, ...` up to and including `end`.
pub fn geometric_grid(start: u64, end: u64, factor: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = start;
    while x <= end {
        out.push(x);
        match x.checked_mul(factor.max(2)) {
            Some(next) => x = next,
            None => break,
        }
    }
    out
}

/// Default grid: `10^3, 10^4, ..., 10^8`.
pub fn default_grid() -> Vec<u64> {
    geometric_grid(1_000, 100_000_000, 10)
}

/// Largest value that must be sieved to evaluate `table` at `x`.
pub fn required_limit(table: Table, x: u64) -> u64 {
    // Prime gaps below 2^64 are all under 1600.
    const GAP_MARGIN: u64 = 1600;
    if table.indexes_gaps() {
        // p_n < n (ln n + ln ln n) for n >= 6.
        let n = (x + 1).max(6) as f64;
        (n * (n.ln() + n.ln().ln())).ceil() as u64 + GAP_MARGIN
    } else {
        x.saturating_add(GAP_MARGIN)
    }
}

fn validate_grid(engine: &PrimeEngine, table: Table, grid: &[u64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "grid must be strictly increasing".into(),
        ));
    }
    if grid[0] < table.min_x() {
        return Err(Error::InvalidArgument(format!(
            "table {table} needs grid values >= {}, got {}",
            table.min_x(),
            grid[0]
        )));
    }
    let last = *grid.last().expect("non-empty");
    if table.indexes_gaps() {
        // Gap index x needs p_{x+1}.
        engine.nth_prime(last.saturating_add(1))?;
    } else {
        engine.next_prime(last)?;
    }
    Ok(())
}

/// Partial-block values `d, d-1, ..., d-t+1`.
fn tail(d: u64, t: u64) -> impl Iterator<Item = u64> {
    (0..t).map(move |j| d - j)
}

fn x_log_x(x: f64) -> f64 {
    x * x.ln()
}

/// Computes one row from an aggregate positioned for this table at `x`.
/// `next_prime` is `p_{pi(x)+1}` for the block-based tables.
fn make_row(table: Table, x: u64, agg: &GapAggregate, next_prime: u64) -> Result<RatioRow> {
    let xf = x as f64;
    let lx = xf.ln();
    let label = table.label();
    let row = |raw: f64, normalizer: f64, residual: Option<f64>| RatioRow {
        x,
        raw,
        normalizer,
        ratio: raw / normalizer,
        residual,
        label,
    };
    // Block tables: agg holds gaps d_1..d_{k-1} and last_prime = p_k <= x.
    let p_k = agg.last_prime;
    let d_k = next_prime.wrapping_sub(p_k);
    let t = (x + 1).wrapping_sub(p_k);
    Ok(match table {
        Table::Sum => {
            let s = match x {
                2 => 2,
                _ => sum_closed_from(&ClosedFormInputs {
                    n: x,
                    m: agg.k + 1,
                    p_m: p_k,
                    p_next: next_prime,
                    sum_d2_before: agg.sum_d2,
                    sum_log_factorial_before: 0.0,
                })?,
            };
            let raw = s as f64;
            row(raw, x_log_x(xf), Some(raw / xf.powf(GAP_SQUARE_EXPONENT)))
        }
        Table::Harmonic => {
            let mut acc = CompensatedSum::from_parts(1.0, 0.0);
            acc.add(agg.sum_harmonic.value());
            acc.extend(tail(d_k, t).map(|v| 1.0 / v as f64));
            let raw = acc.value();
            let main = xf * lx.ln() / lx;
            row(raw, main, Some((raw - main) / (xf / lx)))
        }
        Table::LogSum => {
            let mut acc = CompensatedSum::from_parts(agg.sum_log_d_factorial.value(), 0.0);
            acc.extend(tail(d_k, t).map(ln_u64));
            let raw = acc.value();
            row(raw, xf, Some(raw / x_log_x(xf)))
        }
        Table::Lemma6 => {
            let raw = agg.sum_log_d.value();
            let main = xf * lx.ln();
            row(raw, main, Some((raw - main) / xf))
        }
        Table::Gaps2 => {
            let raw = agg.sum_d2 as f64;
            row(
                raw,
                xf * lx.powi(3),
                Some(raw / xf.powf(GAP_SQUARE_EXPONENT)),
            )
        }
        Table::Panaitopol => {
            let log_ratio = agg.sum_log_d.value() - agg.sum_log_log_index.value();
            let gm = (log_ratio / xf).exp();
            RatioRow {
                x,
                raw: gm,
                normalizer: 1.0,
                ratio: gm,
                residual: Some(log_ratio / xf),
                label,
            }
        }
    })
}

/// Forward pass producing the rows of one table, checkpointable after any row.
#[derive(Debug, Clone)]
pub struct TableRunner<'a> {
    engine: &'a PrimeEngine,
    table: Table,
    grid: Vec<u64>,
    cursor: GapCursor<'a>,
    rows: Vec<RatioRow>,
}

impl<'a> TableRunner<'a> {
    pub fn new(engine: &'a PrimeEngine, table: Table, grid: Vec<u64>) -> Result<Self> {
        validate_grid(engine, table, &grid)?;
        Ok(TableRunner {
            engine,
            table,
            grid,
            cursor: GapCursor::new(engine),
            rows: Vec::new(),
        })
    }

    /// Continues a run saved with [`TableRunner::checkpoint`].
    pub fn resume(engine: &'a PrimeEngine, checkpoint: &Checkpoint) -> Result<Self> {
        let progress = checkpoint.table.as_ref().ok_or_else(|| {
            Error::InvalidArgument("checkpoint does not belong to a table run".into())
        })?;
        validate_grid(engine, progress.table, &progress.grid)?;
        let agg = checkpoint.aggregate;
        let consistent = engine.is_prime(agg.last_prime)
            && agg.last_prime <= engine.limit()
            && engine.prime_count(agg.last_prime)? == agg.k + 1;
        if !consistent || progress.rows.len() > progress.grid.len() {
            return Err(Error::InvalidArgument(
                "checkpoint is inconsistent with this sieve".into(),
            ));
        }
        Ok(TableRunner {
            engine,
            table: progress.table,
            grid: progress.grid.clone(),
            cursor: GapCursor::resume(engine, agg),
            rows: progress.rows.clone(),
        })
    }

    pub fn table(&self) -> Table {
        self.table
    }

    pub fn grid(&self) -> &[u64] {
        &self.grid
    }

    pub fn rows(&self) -> &[RatioRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<RatioRow> {
        self.rows
    }

    pub fn is_done(&self) -> bool {
        self.rows.len() == self.grid.len()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.engine.limit(), *self.cursor.aggregate()).with_table(TableProgress {
            table: self.table,
            grid: self.grid.clone(),
            rows: self.rows.clone(),
        })
    }

    /// Computes the next row. Returns `Ok(None)` when the grid is exhausted.
    pub fn step(&mut self) -> Result<Option<&RatioRow>> {
        let Some(&x) = self.grid.get(self.rows.len()) else {
            return Ok(None);
        };
        let row = match self.table {
            Table::Lemma6 | Table::Panaitopol => {
                let agg = self.cursor.advance_to_index(x)?;
                make_row(self.table, x, agg, 0)?
            }
            Table::Gaps2 => {
                let agg = self.cursor.advance_through_value(x)?;
                make_row(self.table, x, agg, 0)?
            }
            Table::Sum | Table::Harmonic | Table::LogSum => {
                self.cursor.advance_primes_to(x)?;
                let next = self
                    .cursor
                    .peek_next_prime()
                    .ok_or(Error::RangeExceedsLimit {
                        arg: x + 1,
                        limit: self.engine.limit(),
                    })?;
                make_row(self.table, x, self.cursor.aggregate(), next)?
            }
        };
        self.rows.push(row);
        Ok(self.rows.last())
    }

    /// Runs to the end of the grid.
    pub fn finish(mut self) -> Result<Vec<RatioRow>> {
        while self.step()?.is_some() {}
        Ok(self.rows)
    }
}

/// All rows of `table` over `grid` in one pass.
pub fn run_table(engine: &PrimeEngine, table: Table, grid: &[u64]) -> Result<Vec<RatioRow>> {
    TableRunner::new(engine, table, grid.to_vec())?.finish()
}

pub fn table_sum_a(engine: &PrimeEngine, grid: &[u64]) -> Result<Vec<RatioRow>> {
    run_table(engine, Table::Sum, grid)
}

pub fn table_harmonic(engine: &PrimeEngine, grid: &[u64]) -> Result<Vec<RatioRow>> {
    run_table(engine, Table::Harmonic, grid)
}

pub fn table_log_a(engine: &PrimeEngine, grid: &[u64]) -> Result<Vec<RatioRow>> {
    run_table(engine, Table::LogSum, grid)
}

pub fn table_lemma6(engine: &PrimeEngine, grid: &[u64]) -> Result<Vec<RatioRow>> {
    run_table(engine, Table::Lemma6, grid)
}

pub fn table_gap_geometric_mean(engine: &PrimeEngine, grid: &[u64]) -> Result<Vec<RatioRow>> {
    run_table(engine, Table::Panaitopol, grid)
}

/// Fit of `ln sum_{p_i<=x} d_i^2` against `ln x`, with the per-point rows.
pub fn gap_square_exponent(
    engine: &PrimeEngine,
    grid: &[u64],
) -> Result<(ExponentFit, Vec<RatioRow>)> {
    if grid.len() < 3 {
        return Err(Error::InsufficientPoints { got: grid.len() });
    }
    let rows = run_table(engine, Table::Gaps2, grid)?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.x as f64, r.raw)).collect();
    Ok((fit_power_law(&points)?, rows))
}

/// `sum_{2<=i<=x} ln d_i` for any `x >= 1` (0 for `x = 1`).
pub fn sum_log_gaps(engine: &PrimeEngine, x: u64) -> Result<f64> {
    let mut cursor = GapCursor::new(engine);
    Ok(cursor.advance_to_index(x)?.sum_log_d.value())
}

/// `p_{pi(x)}`, the largest prime not exceeding `x >= 2`.
pub fn prime_at_or_below(engine: &PrimeEngine, x: u64) -> Result<u64> {
    let k = engine.prime_count(x)?;
    if k == 0 {
        return Err(Error::InvalidArgument(format!("no prime is <= {x}")));
    }
    engine.nth_prime(k)
}

/// Explicit lower bound `0.09 p_k - 3` on `sum_{n<=x} ln a_n`, `p_k <= x < p_{k+1}`.
pub fn log_sum_explicit_lower_bound(engine: &PrimeEngine, x: u64) -> Result<f64> {
    Ok(0.09 * prime_at_or_below(engine, x)? as f64 - 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine() -> PrimeEngine {
        PrimeEngine::with_limit(300_000).unwrap()
    }

    fn one(table: Table, x: u64) -> RatioRow {
        run_table(&engine(), table, &[x]).unwrap().remove(0)
    }

    #[test]
    fn small_rows() {
        let r = one(Table::Sum, 7);
        assert_eq!(r.raw, 12.0);
        assert!((r.normalizer - 13.621).abs() < 1e-3);
        assert!((r.ratio - 0.8810).abs() < 1e-4);
        assert_eq!(one(Table::Sum, 3).raw, 4.0);
        assert_eq!(one(Table::Sum, 2).raw, 2.0);

        assert_eq!(one(Table::Harmonic, 4).raw, 3.5);
        assert_eq!(one(Table::LogSum, 2).raw, 0.0);
        assert!((one(Table::LogSum, 8).raw - 48f64.ln()).abs() < 1e-14);
        assert!((one(Table::Lemma6, 4).raw - (2f64.ln() * 2.0 + 4f64.ln())).abs() < 1e-14);
        assert!((one(Table::Panaitopol, 3).ratio - 1.738321).abs() < 1e-6);
        assert!((one(Table::Panaitopol, 2).ratio - 1.69864).abs() < 1e-5);
        assert_eq!(one(Table::Panaitopol, 2).normalizer, 1.0);

        let e = engine();
        assert!((sum_log_gaps(&e, 2).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((sum_log_gaps(&e, 4).unwrap() - 2.7726).abs() < 1e-4);
        // Harmonic at x = 2 is not a table row (ln ln 2 < 0) but its raw sum is 2.
        let mut c = GapCursor::new(&e);
        c.advance_primes_to(2).unwrap();
        let next = c.peek_next_prime().unwrap();
        let acc = 1.0 + c.aggregate().sum_harmonic.value() + 1.0 / (next - 2) as f64;
        assert_eq!(acc, 2.0);
    }

    #[test]
    fn grid_validation() {
        let e = engine();
        assert!(run_table(&e, Table::Sum, &[]).is_err());
        assert!(run_table(&e, Table::Sum, &[10, 10]).is_err());
        assert!(run_table(&e, Table::Sum, &[100, 10]).is_err());
        assert!(run_table(&e, Table::Harmonic, &[2]).is_err());
        assert!(matches!(
            run_table(&e, Table::Sum, &[300_000]),
            Err(Error::RangeExceedsLimit { .. })
        ));
        assert!(run_table(&e, Table::Lemma6, &[100_000]).is_err());
        assert!(matches!(
            gap_square_exponent(&e, &[100, 1000]),
            Err(Error::InsufficientPoints { got: 2 })
        ));
    }

    #[test]
    fn block_sums_match_term_by_term() {
        let e = engine();
        let grid: Vec<u64> = (3..5000).step_by(37).collect();
        let harm = table_harmonic(&e, &grid).unwrap();
        let logs = table_log_a(&e, &grid).unwrap();
        let sums = table_sum_a(&e, &grid).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let a: Vec<u64> = crate::sequence::stream_a(&e, 1, x)
                .unwrap()
                .map(|r| r.a_n)
                .collect();
            let h: f64 = a.iter().map(|&v| 1.0 / v as f64).sum();
            let l: f64 = a.iter().map(|&v| (v as f64).ln()).sum();
            let s: u64 = a.iter().sum();
            assert!((harm[i].raw - h).abs() <= 1e-12 * h);
            assert!((logs[i].raw - l).abs() <= 1e-12 * l.max(1.0));
            assert_eq!(sums[i].raw, s as f64);
        }
    }

    #[test]
    fn resume_mid_table_is_bit_identical() {
        let e = engine();
        let grid = vec![10, 100, 1000, 10_000, 100_000];
        for table in [Table::Harmonic, Table::Panaitopol, Table::Gaps2] {
            let grid = if table == Table::Panaitopol {
                vec![10, 100, 1000, 10_000]
            } else {
                grid.clone()
            };
            let straight = run_table(&e, table, &grid).unwrap();
            let mut r = TableRunner::new(&e, table, grid).unwrap();
            r.step().unwrap();
            r.step().unwrap();
            let cp = Checkpoint::from_json(&r.checkpoint().to_json()).unwrap();
            let resumed = TableRunner::resume(&e, &cp).unwrap().finish().unwrap();
            assert_eq!(resumed.len(), straight.len());
            for (a, b) in resumed.iter().zip(&straight) {
                assert_eq!(a.raw.to_bits(), b.raw.to_bits());
                assert_eq!(a.ratio.to_bits(), b.ratio.to_bits());
                assert_eq!(a.residual.map(f64::to_bits), b.residual.map(f64::to_bits));
            }
        }
    }

    #[test]
    fn table_names_round_trip() {
        for t in Table::ALL {
            assert_eq!(t.name().parse::<Table>().unwrap(), t);
        }
        assert!("nope".parse::<Table>().is_err());
    }

    #[test]
    fn required_limit_covers_index_tables() {
        let e = PrimeEngine::with_limit(required_limit(Table::Lemma6, 10_000)).unwrap();
        assert!(run_table(&e, Table::Lemma6, &[10_000]).is_ok());
        let e = PrimeEngine::with_limit(required_limit(Table::Harmonic, 10_000)).unwrap();
        assert!(run_table(&e, Table::Harmonic, &[10_000]).is_ok());
    }
}
