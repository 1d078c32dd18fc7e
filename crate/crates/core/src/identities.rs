//! Closed forms for `S_n = a_1 + ... + a_n` and `P_{n-1} = a_1 ... a_{n-1}`,
//! and brute-force oracles that stream the sequence directly.
//!
//! With `m = pi(n)`, for every `n >= 3`:
//!
//! ```text
//! 2 S_n   = p_m^2 + 2 (n + 1 - p_m) p_{m+1} + sum_{k<m} d_k^2 - n^2 - n
//! P_{n-1} = prod_{k<m} d_k!  *  prod_{j=1}^{n-p_m} (d_m - j + 1)
//! ```
//!
//! The second product is empty when `n` is prime. `n = 1, 2` are handled
//! directly (`S_1 = 1`, `S_2 = 2`, `P_0 = P_1 = 1`).
//!
//! `S_n` is accumulated in 128-bit integers. Since `a_i < i` for `i >= 2`,
//! `S_n < n^2 < 2^128` for every 64-bit `n`, so overflow cannot occur.

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gapstats::GapCursor;
use crate::numeric::{ln_u64, CompensatedSum};
use crate::sequence::stream_a;
use crate::sieve::PrimeEngine;

pub const DEFAULT_EXACT_CAP: u64 = 100_000;

/// Relative tolerance for closed vs brute log-products.
pub const LOG_PRODUCT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductMode {
    LogSpace,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProductValue {
    /// Natural log of the product.
    Log(f64),
    Exact(BigUint),
}

impl ProductValue {
    pub fn as_log(&self) -> f64 {
        match self {
            ProductValue::Log(v) => *v,
            ProductValue::Exact(b) => big_ln(b),
        }
    }
}

/// Primes and gap sums that the closed forms consume for a given `n >= 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormInputs {
    pub n: u64,
    /// `m = pi(n)`.
    pub m: u64,
    /// `p_m`.
    pub p_m: u64,
    /// `p_{m+1}`.
    pub p_next: u64,
    /// `sum_{k <= m-1} d_k^2`.
    pub sum_d2_before: u64,
    /// `sum_{k <= m-1} ln(d_k!)`.
    pub sum_log_factorial_before: f64,
}

impl ClosedFormInputs {
    /// Looks up the inputs for `n` with a fresh gap pass.
    pub fn for_n(engine: &PrimeEngine, n: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "closed forms start at n = 3, got {n}"
            )));
        }
        let p_next = engine.next_prime(n)?;
        let m = engine.prime_count(n)?;
        let mut cursor = GapCursor::new(engine);
        let agg = cursor.advance_to_index(m - 1)?;
        Ok(ClosedFormInputs {
            n,
            m,
            p_m: agg.last_prime,
            p_next,
            sum_d2_before: agg.sum_d2,
            sum_log_factorial_before: agg.sum_log_d_factorial.value(),
        })
    }

    pub fn n_is_prime(&self) -> bool {
        self.n == self.p_m
    }

    /// `n - p_m`: length of the falling-factorial tail.
    pub fn tail_len(&self) -> u64 {
        self.n - self.p_m
    }

    pub fn last_gap(&self) -> u64 {
        self.p_next - self.p_m
    }
}

/// Twice `S_n`, from the unified closed form. Exact in `i128`.
pub fn sum_closed_bracket(inp: &ClosedFormInputs) -> i128 {
    let n = inp.n as i128;
    let pm = inp.p_m as i128;
    let pn = inp.p_next as i128;
    pm * pm + 2 * (n + 1 - pm) * pn + inp.sum_d2_before as i128 - n * n - n
}

/// `S_n` from precomputed inputs.
pub fn sum_closed_from(inp: &ClosedFormInputs) -> Result<u128> {
    let bracket = sum_closed_bracket(inp);
    if bracket % 2 != 0 || bracket < 0 {
        return Err(Error::ParityViolation { n: inp.n });
    }
    Ok((bracket / 2) as u128)
}

/// `ln P_{n-1}` from precomputed inputs: the prefix log-factorial sum plus
/// the tail `ln d_m + ln(d_m - 1) + ...` over `n - p_m` terms.
pub fn prod_log_closed_from(inp: &ClosedFormInputs) -> f64 {
    let d = inp.last_gap();
    let mut acc = CompensatedSum::from_parts(inp.sum_log_factorial_before, 0.0);
    for j in 1..=inp.tail_len() {
        acc.add(ln_u64(d - j + 1));
    }
    acc.value()
}

/// `d!/(d-t)! = d (d-1) ... (d-t+1)`.
pub fn falling_factorial(d: u64, t: u64) -> BigUint {
    let mut out = BigUint::one();
    for j in 0..t {
        out *= d - j;
    }
    out
}

pub fn factorial(d: u64) -> BigUint {
    falling_factorial(d, d)
}

/// `P_{n-1}` from the prefix product `prod_{k<m} d_k!` and the inputs.
pub fn prod_exact_closed_from(prefix: &BigUint, inp: &ClosedFormInputs) -> BigUint {
    prefix * falling_factorial(inp.last_gap(), inp.tail_len())
}

/// `S_n` via the closed form (`n = 1, 2` special-cased).
pub fn sum_a_closed(engine: &PrimeEngine, n: u64) -> Result<u128> {
    match n {
        0 => Err(Error::InvalidArgument("S_n is defined for n >= 1".into())),
        1 => Ok(1),
        2 => Ok(2),
        _ => sum_closed_from(&ClosedFormInputs::for_n(engine, n)?),
    }
}

/// `S_n` by summing the streamed sequence.
pub fn sum_a_brute(engine: &PrimeEngine, n: u64) -> Result<u128> {
    Ok(stream_a(engine, 1, n)?.map(|r| r.a_n as u128).sum())
}

fn check_product_args(n: u64, mode: ProductMode, exact_cap: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "P_{n-1} is defined for n >= 1".into(),
        ));
    }
    if mode == ProductMode::Exact && n > exact_cap {
        return Err(Error::ExactCapExceeded { n, cap: exact_cap });
    }
    Ok(())
}

fn unit(mode: ProductMode) -> ProductValue {
    match mode {
        ProductMode::LogSpace => ProductValue::Log(0.0),
        ProductMode::Exact => ProductValue::Exact(BigUint::one()),
    }
}

/// `P_{n-1}` via the closed form. Input `n` yields `a_1 ... a_{n-1}`.
pub fn prod_a_closed(
    engine: &PrimeEngine,
    n: u64,
    mode: ProductMode,
    exact_cap: u64,
) -> Result<ProductValue> {
    check_product_args(n, mode, exact_cap)?;
    if n < 3 {
        return Ok(unit(mode));
    }
    let inp = ClosedFormInputs::for_n(engine, n)?;
    Ok(match mode {
        ProductMode::LogSpace => ProductValue::Log(prod_log_closed_from(&inp)),
        ProductMode::Exact => {
            let mut prefix = BigUint::one();
            for (lo, hi) in consecutive_primes(engine, inp.p_m)? {
                prefix *= factorial(hi - lo);
            }
            ProductValue::Exact(prod_exact_closed_from(&prefix, &inp))
        }
    })
}

fn consecutive_primes(engine: &PrimeEngine, up_to: u64) -> Result<Vec<(u64, u64)>> {
    let primes: Vec<u64> = engine.primes_in(2, up_to)?.collect();
    Ok(primes.windows(2).map(|w| (w[0], w[1])).collect())
}

/// `P_{n-1}` by multiplying the streamed sequence.
pub fn prod_a_brute(
    engine: &PrimeEngine,
    n: u64,
    mode: ProductMode,
    exact_cap: u64,
) -> Result<ProductValue> {
    check_product_args(n, mode, exact_cap)?;
    if n < 2 {
        return Ok(unit(mode));
    }
    let stream = stream_a(engine, 1, n - 1)?;
    Ok(match mode {
        ProductMode::LogSpace => ProductValue::Log(
            stream
                .map(|r| ln_u64(r.a_n))
                .collect::<CompensatedSum>()
                .value(),
        ),
        ProductMode::Exact => {
            let mut acc = BigUint::one();
            for r in stream {
                if r.a_n > 1 {
                    acc *= r.a_n;
                }
            }
            ProductValue::Exact(acc)
        }
    })
}

pub fn big_ln(b: &BigUint) -> f64 {
    let bits = b.bits();
    if bits <= 1000 {
        return num_traits::ToPrimitive::to_f64(b)
            .unwrap_or(f64::INFINITY)
            .ln();
    }
    let shift = bits - 900;
    let top = b >> shift;
    num_traits::ToPrimitive::to_f64(&top).expect("fits").ln()
        + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    PrimeBranch,
    CompositeBranch,
    /// `n = 1, 2`: below the range of the closed forms.
    SpecialCase,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n: u64,
    pub s_closed: u128,
    pub s_brute: u128,
    pub log_p_closed: f64,
    pub log_p_brute: f64,
    #[serde(serialize_with = "ser_opt_big")]
    pub p_exact_closed: Option<BigUint>,
    #[serde(serialize_with = "ser_opt_big")]
    pub p_exact_brute: Option<BigUint>,
    pub branch_used: Branch,
}

fn ser_opt_big<S: serde::Serializer>(
    v: &Option<BigUint>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_some(&b.to_str_radix(10)),
        None => s.serialize_none(),
    }
}

impl IdentityReport {
    pub fn sum_matches(&self) -> bool {
        self.s_closed == self.s_brute
    }

    pub fn log_product_matches(&self) -> bool {
        (self.log_p_closed - self.log_p_brute).abs()
            <= LOG_PRODUCT_TOLERANCE * self.log_p_brute.abs().max(1.0)
    }

    pub fn exact_product_matches(&self) -> bool {
        self.p_exact_closed == self.p_exact_brute
    }

    pub fn passed(&self) -> bool {
        self.sum_matches() && self.log_product_matches() && self.exact_product_matches()
    }
}

/// Builds one report comparing every closed form with its oracle.
pub fn verify_one(
    engine: &PrimeEngine,
    n: u64,
    exact: bool,
    exact_cap: u64,
) -> Result<IdentityReport> {
    let branch_used = if n < 3 {
        Branch::SpecialCase
    } else if engine.is_prime(n) {
        Branch::PrimeBranch
    } else {
        Branch::CompositeBranch
    };
    let log = |v: ProductValue| v.as_log();
    let exact_pair = if exact {
        let closed = prod_a_closed(engine, n, ProductMode::Exact, exact_cap)?;
        let brute = prod_a_brute(engine, n, ProductMode::Exact, exact_cap)?;
        match (closed, brute) {
            (ProductValue::Exact(c), ProductValue::Exact(b)) => Some((c, b)),
            _ => unreachable!("exact mode returns exact values"),
        }
    } else {
        None
    };
    let (p_exact_closed, p_exact_brute) = match exact_pair {
        Some((c, b)) => (Some(c), Some(b)),
        None => (None, None),
    };
    Ok(IdentityReport {
        n,
        s_closed: sum_a_closed(engine, n)?,
        s_brute: sum_a_brute(engine, n)?,
        log_p_closed: log(prod_a_closed(engine, n, ProductMode::LogSpace, exact_cap)?),
        log_p_brute: log(prod_a_brute(engine, n, ProductMode::LogSpace, exact_cap)?),
        p_exact_closed,
        p_exact_brute,
        branch_used,
    })
}

/// One result per input; an error on one `n` does not stop the batch.
pub fn verify_identities(
    engine: &PrimeEngine,
    ns: &[u64],
    exact_products: bool,
    exact_cap: u64,
) -> Vec<Result<IdentityReport>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ns.par_iter()
            .map(|&n| verify_one(engine, n, exact_products, exact_cap))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ns.iter()
            .map(|&n| verify_one(engine, n, exact_products, exact_cap))
            .collect()
    }
}

/// Result of comparing closed forms and oracles for one `n` in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: u64,
    pub s_closed: u128,
    pub s_brute: u128,
    pub log_p_closed: f64,
    pub log_p_brute: f64,
    /// Present while `n <= exact_up_to`.
    pub exact_equal: Option<bool>,
    pub inputs: ClosedFormInputs,
}

/// Walks `n = 3, 4, ...` in one pass, keeping both the closed-form inputs
/// (from gaps) and the brute accumulators (from the streamed sequence)
/// up to date, so every `n` in a range can be checked in `O(1)` amortized.
pub struct IdentitySweep<'a> {
    engine: &'a PrimeEngine,
    gaps: GapCursor<'a>,
    seq: crate::sequence::SequenceStream<'a>,
    n: u64,
    hi: u64,
    m: u64,
    p_next: u64,
    brute_sum: u128,
    brute_log: CompensatedSum,
    brute_exact: BigUint,
    prefix_exact: BigUint,
    exact_up_to: u64,
}

impl<'a> IdentitySweep<'a> {
    /// Sweep over `3 <= n <= hi`, with exact products while `n <= exact_up_to`.
    pub fn new(engine: &'a PrimeEngine, hi: u64, exact_up_to: u64) -> Result<Self> {
        let mut seq = stream_a(engine, 1, hi.max(3))?;
        let mut brute_sum = 0u128;
        let mut brute_log = CompensatedSum::new();
        let mut brute_exact = BigUint::one();
        // a_1 a_2 feed S_2 and P_2; S_3 is completed when n = 3 is visited.
        for r in seq.by_ref().take(2) {
            brute_sum += r.a_n as u128;
            brute_log.add(ln_u64(r.a_n));
            brute_exact *= r.a_n;
        }
        let mut gaps = GapCursor::new(engine);
        gaps.advance_to_index(1)?; // last_prime = 3 = p_2
        Ok(IdentitySweep {
            engine,
            gaps,
            seq,
            n: 3,
            hi,
            m: 2,
            p_next: 5,
            brute_sum,
            brute_log,
            brute_exact,
            prefix_exact: BigUint::one(), // d_1! = 1
            exact_up_to,
        })
    }
}

impl Iterator for IdentitySweep<'_> {
    type Item = SweepPoint;

    fn next(&mut self) -> Option<SweepPoint> {
        if self.n > self.hi {
            return None;
        }
        let n = self.n;
        if n == self.p_next {
            // Crossing into the next block: d_m joins the prefix.
            let before = self.gaps.aggregate().last_prime;
            self.gaps.step()?;
            if n <= self.exact_up_to {
                self.prefix_exact *= factorial(n - before);
            }
            self.m += 1;
            self.p_next = self.engine.next_prime(n).ok()?;
        }
        let agg = self.gaps.aggregate();
        let inputs = ClosedFormInputs {
            n,
            m: self.m,
            p_m: agg.last_prime,
            p_next: self.p_next,
            sum_d2_before: agg.sum_d2,
            sum_log_factorial_before: agg.sum_log_d_factorial.value(),
        };
        // P_{n-1} is complete now; S_n needs a_n.
        let log_p_brute = self.brute_log.value();
        let exact_equal = (n <= self.exact_up_to)
            .then(|| prod_exact_closed_from(&self.prefix_exact, &inputs) == self.brute_exact);
        let rec = self.seq.next()?;
        debug_assert_eq!(rec.n, n);
        self.brute_sum += rec.a_n as u128;
        self.brute_log.add(ln_u64(rec.a_n));
        if n < self.exact_up_to {
            self.brute_exact *= rec.a_n;
        }
        self.n += 1;
        Some(SweepPoint {
            n,
            s_closed: sum_closed_from(&inputs).unwrap_or(u128::MAX),
            s_brute: self.brute_sum,
            log_p_closed: prod_log_closed_from(&inputs),
            log_p_brute,
            exact_equal,
            inputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine() -> PrimeEngine {
        PrimeEngine::with_limit(100_000).unwrap()
    }

    fn exact(v: ProductValue) -> BigUint {
        match v {
            ProductValue::Exact(b) => b,
            ProductValue::Log(_) => panic!("expected exact"),
        }
    }

    #[test]
    fn sum_examples() {
        let e = engine();
        assert_eq!(sum_a_brute(&e, 1).unwrap(), 1);
        assert_eq!(sum_a_brute(&e, 3).unwrap(), 4);
        assert_eq!(sum_a_brute(&e, 7).unwrap(), 12);
        assert_eq!(sum_a_closed(&e, 2).unwrap(), 2);
        assert_eq!(sum_a_closed(&e, 3).unwrap(), 4);
        assert_eq!(sum_a_closed(&e, 4).unwrap(), 5);
        assert_eq!(sum_a_closed(&e, 7).unwrap(), 12);
        assert!(sum_a_closed(&e, 0).is_err());
    }

    #[test]
    fn product_examples() {
        let e = engine();
        let cap = DEFAULT_EXACT_CAP;
        assert_eq!(
            exact(prod_a_closed(&e, 5, ProductMode::Exact, cap).unwrap()),
            2u32.into()
        );
        assert_eq!(
            exact(prod_a_closed(&e, 9, ProductMode::Exact, cap).unwrap()),
            48u32.into()
        );
        assert_eq!(
            exact(prod_a_brute(&e, 9, ProductMode::Exact, cap).unwrap()),
            48u32.into()
        );
        assert_eq!(
            exact(prod_a_brute(&e, 3, ProductMode::Exact, cap).unwrap()),
            1u32.into()
        );
        assert_eq!(
            prod_a_closed(&e, 3, ProductMode::LogSpace, cap).unwrap(),
            ProductValue::Log(0.0)
        );
        let l = prod_a_brute(&e, 5, ProductMode::LogSpace, cap)
            .unwrap()
            .as_log();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            prod_a_closed(&e, 50, ProductMode::Exact, 10),
            Err(Error::ExactCapExceeded { n: 50, cap: 10 })
        ));
    }

    #[test]
    fn reports() {
        let e = engine();
        let reports = verify_identities(&e, &[3, 4, 5, 9], true, DEFAULT_EXACT_CAP);
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(r.as_ref().unwrap().passed());
        }
        let branches: Vec<Branch> = reports
            .iter()
            .map(|r| r.as_ref().unwrap().branch_used)
            .collect();
        assert_eq!(
            branches,
            [
                Branch::PrimeBranch,
                Branch::CompositeBranch,
                Branch::PrimeBranch,
                Branch::CompositeBranch
            ]
        );
        let one = verify_one(&e, 1, true, DEFAULT_EXACT_CAP).unwrap();
        assert!(one.passed());
        assert_eq!(one.branch_used, Branch::SpecialCase);
        assert_eq!(one.s_closed, 1);
    }

    #[test]
    fn batch_keeps_going_after_error() {
        let e = PrimeEngine::with_limit(1000).unwrap();
        let out = verify_identities(&e, &[5, 5000, 9], false, DEFAULT_EXACT_CAP);
        assert!(out[0].is_ok());
        assert!(out[1].is_err());
        assert!(out[2].as_ref().unwrap().passed());
    }

    #[test]
    fn sweep_agrees_with_point_queries() {
        let e = engine();
        for p in IdentitySweep::new(&e, 2000, 300).unwrap() {
            assert_eq!(p.s_closed, p.s_brute, "n = {}", p.n);
            assert_eq!(p.inputs, ClosedFormInputs::for_n(&e, p.n).unwrap());
            if p.n <= 300 {
                assert_eq!(p.exact_equal, Some(true), "n = {}", p.n);
            }
        }
    }

    #[test]
    fn big_ln_matches_small_values() {
        assert!((big_ln(&BigUint::from(48u32)) - 48f64.ln()).abs() < 1e-15);
        let huge = factorial(500);
        assert!((big_ln(&huge) - crate::numeric::ln_factorial(500)).abs() < 1e-9);
    }
}
