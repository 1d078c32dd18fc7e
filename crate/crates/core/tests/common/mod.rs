//! Independent oracles for integration tests: a plain byte sieve and trial
//! division, sharing no code with the library's packed sieve.

#![allow(dead_code)]

/// `flags[i]` is true iff `i` is prime, for `0 <= i <= n`.
pub fn byte_sieve(n: usize) -> Vec<bool> {
    let mut flags = vec![true; n + 1];
    flags[0] = false;
    if n >= 1 {
        flags[1] = false;
    }
    let mut i = 2;
    while i * i <= n {
        if flags[i] {
            let mut j = i * i;
            while j <= n {
                flags[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    flags
}

pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// All primes `<= n`, ascending.
pub fn primes_upto(n: usize) -> Vec<u64> {
    byte_sieve(n)
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| p.then_some(i as u64))
        .collect()
}

/// `a[n]` for `1 <= n <= hi` (index 0 unused), by scanning down from a
/// sieve that reaches past the next prime after `hi`.
pub fn a_values(hi: usize) -> Vec<u64> {
    let flags = byte_sieve(hi + 2000);
    let mut a = vec![0u64; hi + 1];
    let mut next = (hi + 1..).find(|&i| flags[i]).unwrap();
    for n in (1..=hi).rev() {
        a[n] = (next - n) as u64;
        if flags[n] {
            next = n;
        }
    }
    a
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
