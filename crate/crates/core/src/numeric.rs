//! Small numeric helpers: compensated summation, log-factorial and harmonic
//! tables, and lossless hexadecimal float text.

use std::sync::OnceLock;

/// Neumaier-compensated running sum. Summation order is the caller's; two
/// sums fed the same terms in the same order have identical bit patterns.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        CompensatedSum {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    /// Rebuilds a sum from its raw parts (checkpoint restore).
    pub const fn from_parts(sum: f64, compensation: f64) -> Self {
        CompensatedSum { sum, compensation }
    }

    pub fn parts(&self) -> (f64, f64) {
        (self.sum, self.compensation)
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}

/// Arguments up to this value are served from direct-summation tables.
pub const TABLE_MAX: u64 = 256;

struct Tables {
    ln: Vec<f64>,
    ln_factorial: Vec<f64>,
    harmonic: Vec<f64>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let n = TABLE_MAX as usize;
        let mut ln = vec![0.0; n + 1];
        let mut ln_factorial = vec![0.0; n + 1];
        let mut harmonic = vec![0.0; n + 1];
        let mut lf = CompensatedSum::new();
        let mut h = CompensatedSum::new();
        for j in 1..=n {
            ln[j] = (j as f64).ln();
            lf.add(ln[j]);
            h.add(1.0 / j as f64);
            ln_factorial[j] = lf.value();
            harmonic[j] = h.value();
        }
        Tables {
            ln,
            ln_factorial,
            harmonic,
        }
    })
}

/// Natural log of a positive integer, with `ln(0)` mapped to negative infinity.
#[inline]
pub fn ln_u64(n: u64) -> f64 {
    if n <= TABLE_MAX {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        tables().ln[n as usize]
    } else {
        (n as f64).ln()
    }
}

/// `ln(d!)`: direct summation up to [`TABLE_MAX`], Stirling series beyond.
#[inline]
pub fn ln_factorial(d: u64) -> f64 {
    if d <= TABLE_MAX {
        tables().ln_factorial[d as usize]
    } else {
        let n = d as f64;
        let inv = 1.0 / n;
        let inv2 = inv * inv;
        n * n.ln() - n
            + 0.5 * (std::f64::consts::TAU * n).ln()
            + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
    }
}

/// Harmonic number `H(m) = 1 + 1/2 + ... + 1/m`, with `H(0) = 0`.
#[inline]
pub fn harmonic(m: u64) -> f64 {
    if m <= TABLE_MAX {
        tables().harmonic[m as usize]
    } else {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let n = m as f64;
        let inv2 = 1.0 / (n * n);
        n.ln() + EULER_GAMMA + 0.5 / n - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0))
    }
}

/// Formats a finite or non-finite `f64` as C99-style hexadecimal text
/// (`0x1.8p+1`, `-0x0p+0`, `inf`, `nan`). Parsing the result with
/// [`parse_hex_float`] restores the exact bit pattern.
pub fn format_hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 {
        (0, -1022)
    } else {
        (1, exp_bits - 1023)
    };
    let mut frac = format!("{mantissa:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    let esign = if exp < 0 { '-' } else { '+' };
    if frac.is_empty() {
        format!("{sign}0x{lead}p{esign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{frac}p{esign}{}", exp.abs())
    }
}

/// Parses text produced by [`format_hex_float`]. Accepts only the canonical
/// shape (1 leading hex digit, up to 13 fraction digits).
pub fn parse_hex_float(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let signed = |v: f64| if neg { -v } else { v };
    match body {
        "nan" => return Some(f64::NAN),
        "inf" => return Some(signed(f64::INFINITY)),
        _ => {}
    }
    let body = body.strip_prefix("0x")?;
    let (mant, exp) = body.split_once('p')?;
    let exp: i32 = exp.parse().ok()?;
    let (lead, frac) = match mant.split_once('.') {
        Some((l, f)) => (l, f),
        None => (mant, ""),
    };
    if frac.len() > 13 || frac.is_empty() && mant.contains('.') {
        return None;
    }
    let lead = match lead {
        "0" => 0u64,
        "1" => 1u64,
        _ => return None,
    };
    let frac_bits = if frac.is_empty() {
        0
    } else {
        u64::from_str_radix(frac, 16).ok()? << (4 * (13 - frac.len()))
    };
    let bits = match lead {
        0 => {
            if frac_bits == 0 && exp == 0 {
                0
            } else if exp == -1022 {
                frac_bits
            } else {
                return None;
            }
        }
        _ => {
            if !(-1022..=1023).contains(&exp) {
                return None;
            }
            (((exp + 1023) as u64) << 52) | frac_bits
        }
    };
    Some(signed(f64::from_bits(bits)))
}
