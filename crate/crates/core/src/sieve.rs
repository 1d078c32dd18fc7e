//! Segmented, bit-packed sieve of Eratosthenes over the odd numbers.
//!
//! Bit `i` of the sieve stands for the odd number `2i + 1`; a set bit means
//! prime. The bitmap is built one segment at a time (segments are independent
//! once the base primes up to `sqrt(limit)` are known, so they may be sieved
//! concurrently) and a per-segment prefix count turns `pi(x)` into a single
//! lookup plus a scan inside one segment.
//!
//! `is_prime` answers from the bitmap up to the limit and falls back to a
//! deterministic Miller-Rabin test above it, so it is valid for every `u64`.
//! Every other query rejects arguments above the limit.

use crate::error::{Error, Result};

/// Parameters for building a [`PrimeEngine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Largest integer that is sieved.
    pub limit: u64,
    /// Working window per segment, in bytes. Rounded down to whole 64-bit words.
    pub segment_size: usize,
    /// Worker threads for sieving segments; 0 lets the runtime decide.
    pub parallel_segments: usize,
}

impl SieveConfig {
    pub const DEFAULT_SEGMENT_SIZE: usize = 32 * 1024;

    pub fn new(limit: u64) -> Self {
        SieveConfig {
            limit,
            segment_size: Self::DEFAULT_SEGMENT_SIZE,
            parallel_segments: 0,
        }
    }

    pub fn with_segment_size(mut self, bytes: usize) -> Self {
        self.segment_size = bytes;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.parallel_segments = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.limit < 2 {
            return Err(Error::InvalidConfig(format!(
                "limit must be at least 2, got {}",
                self.limit
            )));
        }
        if self.segment_size < 1024 || !self.segment_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "segment_size must be even and at least 1024 bytes, got {}",
                self.segment_size
            )));
        }
        if (self.limit / 2) as u128 >= usize::MAX as u128 / 2 {
            return Err(Error::InvalidConfig(format!(
                "limit {} is too large to address on this platform",
                self.limit
            )));
        }
        Ok(())
    }
}

/// Fully built sieve answering prime queries up to `config.limit`.
///
/// All query methods take `&self`; a built engine can be shared across threads.
#[derive(Debug, Clone)]
pub struct PrimeEngine {
    config: SieveConfig,
    words: Vec<u64>,
    /// Number of bit positions in use (odd numbers `1..=limit`).
    nbits: u64,
    words_per_segment: usize,
    /// `segment_prefix[s]` = set bits in all segments before `s`; one extra trailing entry.
    segment_prefix: Vec<u64>,
    largest_prime_found: u64,
}

impl PrimeEngine {
    pub fn new(config: SieveConfig) -> Result<Self> {
        config.validate()?;
        let limit = config.limit;
        let nbits = limit.div_ceil(2);
        let nwords = nbits.div_ceil(64) as usize;
        let words_per_segment = (config.segment_size / 8).max(1);

        let base = base_primes(isqrt(limit));
        let mut words = vec![0u64; nwords];
        sieve_all(
            &mut words,
            words_per_segment,
            nbits,
            &base,
            config.parallel_segments,
        );

        let mut segment_prefix = Vec::with_capacity(nwords / words_per_segment + 2);
        let mut acc = 0u64;
        segment_prefix.push(0);
        for chunk in words.chunks(words_per_segment) {
            acc += chunk.iter().map(|w| w.count_ones() as u64).sum::<u64>();
            segment_prefix.push(acc);
        }

        let mut engine = PrimeEngine {
            config,
            words,
            nbits,
            words_per_segment,
            segment_prefix,
            largest_prime_found: 2,
        };
        engine.largest_prime_found = engine.last_set_bit().map_or(2, |i| 2 * i + 1);
        Ok(engine)
    }

    /// Engine with the default segment size and thread count.
    pub fn with_limit(limit: u64) -> Result<Self> {
        Self::new(SieveConfig::new(limit))
    }

    pub fn config(&self) -> &SieveConfig {
        &self.config
    }

    pub fn limit(&self) -> u64 {
        self.config.limit
    }

    pub fn largest_prime_found(&self) -> u64 {
        self.largest_prime_found
    }

    /// Number of primes up to the limit.
    pub fn total_primes(&self) -> u64 {
        1 + self.segment_prefix.last().copied().unwrap_or(0)
    }

    fn check(&self, x: u64) -> Result<()> {
        if x > self.config.limit {
            Err(Error::RangeExceedsLimit {
                arg: x,
                limit: self.config.limit,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    fn bit(&self, i: u64) -> bool {
        (self.words[(i / 64) as usize] >> (i % 64)) & 1 == 1
    }

    fn last_set_bit(&self) -> Option<u64> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(wi, &w)| wi as u64 * 64 + 63 - w.leading_zeros() as u64)
    }

    /// Set bits with index `<= j`.
    fn count_bits_through(&self, j: u64) -> u64 {
        let word = (j / 64) as usize;
        let seg = word / self.words_per_segment;
        let seg_start = seg * self.words_per_segment;
        let mut count = self.segment_prefix[seg];
        count += self.words[seg_start..word]
            .iter()
            .map(|w| w.count_ones() as u64)
            .sum::<u64>();
        let shift = j % 64;
        let mask = if shift == 63 {
            u64::MAX
        } else {
            (1u64 << (shift + 1)) - 1
        };
        count + (self.words[word] & mask).count_ones() as u64
    }

    /// Index of the first set bit at or after `i`.
    fn next_set_bit(&self, i: u64) -> Option<u64> {
        if i >= self.nbits {
            return None;
        }
        let mut wi = (i / 64) as usize;
        let mut w = self.words[wi] & (u64::MAX << (i % 64));
        loop {
            if w != 0 {
                return Some(wi as u64 * 64 + w.trailing_zeros() as u64);
            }
            wi += 1;
            if wi >= self.words.len() {
                return None;
            }
            w = self.words[wi];
        }
    }

    /// Index of the `r`-th (0-based) set bit.
    fn select_bit(&self, r: u64) -> Option<u64> {
        let total = *self.segment_prefix.last()?;
        if r >= total {
            return None;
        }
        // Last segment whose prefix is <= r.
        let seg = self.segment_prefix.partition_point(|&c| c <= r) - 1;
        let mut remaining = r - self.segment_prefix[seg];
        let start = seg * self.words_per_segment;
        for (offset, &w) in self.words[start..].iter().enumerate() {
            let ones = w.count_ones() as u64;
            if remaining < ones {
                let mut w = w;
                for _ in 0..remaining {
                    w &= w - 1;
                }
                return Some((start + offset) as u64 * 64 + w.trailing_zeros() as u64);
            }
            remaining -= ones;
        }
        None
    }

    /// True iff `n` is prime. Uses the bitmap up to the limit and a
    /// deterministic Miller-Rabin test (exact for all 64-bit inputs) above it.
    pub fn is_prime(&self, n: u64) -> bool {
        if n > self.config.limit {
            return is_prime_u64(n);
        }
        match n {
            0 | 1 => false,
            2 => true,
            _ if n.is_multiple_of(2) => false,
            _ => self.bit(n / 2),
        }
    }

    /// pi(x): number of primes `<= x`.
    pub fn prime_count(&self, x: u64) -> Result<u64> {
        self.check(x)?;
        if x < 2 {
            return Ok(0);
        }
        if x < 3 {
            return Ok(1);
        }
        // Odd numbers <= x are bits 0..=(x-1)/2; bit 0 (the number 1) is never set.
        Ok(1 + self.count_bits_through((x - 1) / 2))
    }

    /// The `k`-th prime, 1-based (`nth_prime(1) == 2`).
    pub fn nth_prime(&self, k: u64) -> Result<u64> {
        let available = self.total_primes();
        if k == 0 {
            return Err(Error::IndexOutOfRange {
                index: 0,
                available,
            });
        }
        if k == 1 {
            return Ok(2);
        }
        self.select_bit(k - 2)
            .map(|i| 2 * i + 1)
            .ok_or(Error::IndexOutOfRange {
                index: k,
                available,
            })
    }

    /// Smallest prime strictly greater than `n`, i.e. `p_{pi(n)+1}`.
    pub fn next_prime(&self, n: u64) -> Result<u64> {
        if n < 2 {
            return Ok(2);
        }
        let candidate = if n.is_multiple_of(2) { n + 1 } else { n + 2 };
        let exceeds = Error::RangeExceedsLimit {
            arg: candidate,
            limit: self.config.limit,
        };
        if candidate > self.config.limit {
            return Err(exceeds);
        }
        self.next_set_bit(candidate / 2)
            .map(|i| 2 * i + 1)
            .ok_or(exceeds)
    }

    /// pi_2(x): primes `p <= x` with `p + 2` also prime. Needs `x + 2 <= limit`.
    pub fn twin_prime_count(&self, x: u64) -> Result<u64> {
        self.check(x.saturating_add(2))?;
        if x < 3 {
            return Ok(0);
        }
        let last = (x - 1) / 2;
        let last_word = (last / 64) as usize;
        let mut count = 0u64;
        for wi in 0..=last_word {
            let w = self.words[wi];
            let next = self.words.get(wi + 1).copied().unwrap_or(0);
            let mut pairs = w & ((w >> 1) | (next << 63));
            if wi == last_word {
                let shift = last % 64;
                if shift < 63 {
                    pairs &= (1u64 << (shift + 1)) - 1;
                }
            }
            count += pairs.count_ones() as u64;
        }
        Ok(count)
    }

    /// Primes `p` with `lo <= p <= hi`, ascending. Empty when `lo > hi`.
    pub fn primes_in(&self, lo: u64, hi: u64) -> Result<Primes<'_>> {
        self.check(hi)?;
        Ok(Primes::new(self, lo, hi))
    }

    /// Every sieved prime `>= lo`, ascending, ending at the limit.
    pub fn primes_from(&self, lo: u64) -> Primes<'_> {
        Primes::new(self, lo, self.config.limit)
    }
}

/// Ascending iterator over sieved primes in a closed interval.
#[derive(Debug, Clone)]
pub struct Primes<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
    last_bit: u64,
    emit_two: bool,
    done: bool,
}

impl<'a> Primes<'a> {
    fn new(engine: &'a PrimeEngine, lo: u64, hi: u64) -> Self {
        let emit_two = lo <= 2 && hi >= 2;
        let first_odd = lo.max(3) | 1;
        if hi < 3 || first_odd > hi {
            return Primes {
                words: &engine.words,
                word_idx: 0,
                current: 0,
                last_bit: 0,
                emit_two,
                done: true,
            };
        }
        let first_bit = first_odd / 2;
        let last_bit = (hi - 1) / 2;
        let word_idx = (first_bit / 64) as usize;
        Primes {
            words: &engine.words,
            word_idx,
            current: engine.words[word_idx] & (u64::MAX << (first_bit % 64)),
            last_bit,
            emit_two,
            done: false,
        }
    }
}

impl Iterator for Primes<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.emit_two {
            self.emit_two = false;
            return Some(2);
        }
        if self.done {
            return None;
        }
        loop {
            if self.current != 0 {
                let bit = self.word_idx as u64 * 64 + self.current.trailing_zeros() as u64;
                if bit > self.last_bit {
                    self.done = true;
                    return None;
                }
                self.current &= self.current - 1;
                return Some(2 * bit + 1);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() || self.word_idx as u64 * 64 > self.last_bit {
                self.done = true;
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Odd primes up to `bound` by a plain sieve.
fn base_primes(bound: u64) -> Vec<u64> {
    let bound = bound as usize;
    if bound < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; bound + 1];
    let mut out = Vec::new();
    for i in (3..=bound).step_by(2) {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= bound {
            composite[j] = true;
            j += 2 * i;
        }
    }
    out
}

fn sieve_segment(seg: &mut [u64], first_word: usize, nbits: u64, base: &[u64]) {
    seg.fill(u64::MAX);
    let lo_bit = first_word as u64 * 64;
    let hi_bit = (lo_bit + seg.len() as u64 * 64).min(nbits);
    // Bits past the end of the range.
    for b in hi_bit..lo_bit + seg.len() as u64 * 64 {
        let local = b - lo_bit;
        seg[(local / 64) as usize] &= !(1u64 << (local % 64));
    }
    if lo_bit == 0 {
        seg[0] &= !1; // the number 1
    }
    let lo_num = 2 * lo_bit + 1;
    for &p in base {
        let sq = p * p;
        if sq > 2 * hi_bit {
            break;
        }
        let mut m = lo_num.div_ceil(p) * p;
        if m % 2 == 0 {
            m += p;
        }
        let start = m.max(sq);
        let mut b = start / 2;
        while b < hi_bit {
            let local = b - lo_bit;
            seg[(local / 64) as usize] &= !(1u64 << (local % 64));
            b += p;
        }
    }
}

#[cfg(feature = "parallel")]
fn sieve_all(words: &mut [u64], wps: usize, nbits: u64, base: &[u64], threads: usize) {
    use rayon::prelude::*;
    let run = |words: &mut [u64]| {
        words
            .par_chunks_mut(wps)
            .enumerate()
            .for_each(|(s, seg)| sieve_segment(seg, s * wps, nbits, base));
    };
    if threads == 0 {
        run(words);
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| run(words)),
            Err(_) => run(words),
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn sieve_all(words: &mut [u64], wps: usize, nbits: u64, base: &[u64], _threads: usize) {
    for (s, seg) in words.chunks_mut(wps).enumerate() {
        sieve_segment(seg, s * wps, nbits, base);
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime bases are exact below 3.3e24.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
