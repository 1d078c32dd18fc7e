//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure. Oracles live in test code (`common`) and share nothing with
//! the library beyond its public API.

mod common;

use std::process::Command;
use std::time::Instant;

use gapseq::asymptotics::{self, bounds, Table, GAP_SQUARE_EXPONENT};
use gapseq::identities::{self, falling_factorial, IdentitySweep, ProductMode, ProductValue};
use gapseq::sequence::{a_of, gcd_characterization_check, solution_count, stream_a};
use gapseq::PrimeEngine;
use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{a_values, is_prime_trial, primes_upto, rel_err};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

const N_IDENTITY: u64 = 1_000_000;
const N_EXACT: u64 = 10_000;

/// Test-side data for `n <= 10^6`: the sequence, the primes and prefix sums
/// over gaps, all from the byte sieve.
struct Oracle {
    a: Vec<u64>,
    primes: Vec<u64>,
    /// `s[n] = a_1 + ... + a_n`.
    s: Vec<u128>,
}

impl Oracle {
    fn new() -> Self {
        let a = a_values(N_IDENTITY as usize);
        let primes = primes_upto(N_IDENTITY as usize + 2000);
        let mut s = vec![0u128; a.len()];
        for n in 1..a.len() {
            s[n] = s[n - 1] + a[n] as u128;
        }
        Oracle { a, primes, s }
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1(e: &PrimeEngine, o: &Oracle) -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0u64;
    let mut first_bad = None;
    for pt in IdentitySweep::new(e, N_IDENTITY, 0).map_err(|x| x.to_string())? {
        let want = o.s[pt.n as usize];
        if pt.s_closed != want || pt.s_brute != want {
            mismatches += 1;
            first_bad.get_or_insert(pt.n);
        }
    }
    // The point query must agree with the sweep.
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(3..=N_IDENTITY);
        let closed = identities::sum_a_closed(e, n).map_err(|x| x.to_string())?;
        if closed != o.s[n as usize] {
            mismatches += 1;
            first_bad.get_or_insert(n);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(mismatches == 0, || {
        format!("{mismatches} mismatches, first at n = {first_bad:?}")
    })?;
    ensure(secs < 30.0, || format!("took {secs:.1}s, budget 30s"))?;
    Ok("S_n closed = brute = oracle for 3 <= n <= 10^6".into())
}

fn criterion_2(e: &PrimeEngine, o: &Oracle) -> Outcome {
    let mut exact_checked = 0u64;
    let mut worst = 0.0f64;
    let mut oracle_log = 0.0f64; // ln(a_1 ... a_{n-1})
    let mut n_expected = 3u64;
    oracle_log += (o.a[1] as f64).ln() + (o.a[2] as f64).ln();
    for pt in IdentitySweep::new(e, N_IDENTITY, N_EXACT).map_err(|x| x.to_string())? {
        ensure(pt.n == n_expected, || {
            format!("sweep skipped to n = {}", pt.n)
        })?;
        if pt.n <= N_EXACT {
            ensure(pt.exact_equal == Some(true), || {
                format!("exact P_(n-1) mismatch at n = {}", pt.n)
            })?;
            exact_checked += 1;
        }
        let err =
            rel_err(pt.log_p_closed, oracle_log).max(rel_err(pt.log_p_closed, pt.log_p_brute));
        worst = worst.max(err);
        ensure(err <= 1e-9, || {
            format!("log P_(n-1) off by {err:e} at n = {}", pt.n)
        })?;
        oracle_log += (o.a[pt.n as usize] as f64).ln();
        n_expected += 1;
    }
    ensure(n_expected == N_IDENTITY + 1, || "sweep ended early".into())?;
    // Public operation against a test-side big-integer product.
    let mut product = BigUint::from(1u32);
    for n in 3..=N_EXACT {
        if n > 3 {
            product *= o.a[n as usize - 1];
        }
        if n % 53 == 0 || n <= 60 || n == N_EXACT {
            let closed = identities::prod_a_closed(e, n, ProductMode::Exact, N_EXACT)
                .map_err(|x| x.to_string())?;
            let brute = identities::prod_a_brute(e, n, ProductMode::Exact, N_EXACT)
                .map_err(|x| x.to_string())?;
            let want = ProductValue::Exact(product.clone());
            ensure(closed == want && brute == want, || {
                format!("exact product at n = {n}")
            })?;
        }
    }
    Ok(format!(
        "exact P_(n-1) equal for {exact_checked} values of n <= 10^4; \
         log-space worst relative error {worst:.1e} for n <= 10^6"
    ))
}

fn criterion_3(e: &PrimeEngine, o: &Oracle) -> Outcome {
    // Test-side prime-branch formulas, evaluated from oracle primes.
    let mut sum_d2: i128 = 0;
    let mut prefix_exact = BigUint::from(1u32);
    let mut checked = 0u64;
    let mut sweep = IdentitySweep::new(e, N_IDENTITY, N_EXACT).map_err(|x| x.to_string())?;
    for (i, w) in o.primes.windows(2).enumerate() {
        let (p, p_next) = (w[0] as i128, w[1] as i128);
        if p >= 3 && p as u64 <= N_IDENTITY {
            let n = p;
            let sum_prime = 2 * p_next - p + sum_d2;
            let sum_composite = p * p + 2 * (n + 1 - p) * p_next + sum_d2 - n * n - n;
            ensure(sum_prime == sum_composite && sum_prime % 2 == 0, || {
                format!("branches disagree at n = {n}")
            })?;
            ensure((sum_prime / 2) as u128 == o.s[n as usize], || {
                format!("prime branch wrong at n = {n}")
            })?;
            let pt = sweep
                .find(|pt| pt.n == n as u64)
                .ok_or_else(|| format!("sweep missed n = {n}"))?;
            ensure(pt.inputs.n_is_prime() && pt.inputs.tail_len() == 0, || {
                format!("tail not empty at prime n = {n}")
            })?;
            ensure(
                falling_factorial(pt.inputs.last_gap(), pt.inputs.tail_len())
                    == BigUint::from(1u32),
                || format!("empty tail is not 1 at n = {n}"),
            )?;
            ensure(pt.s_closed == (sum_prime / 2) as u128, || {
                format!("closed S_n at n = {n}")
            })?;
            ensure(
                pt.log_p_closed.to_bits() == pt.inputs.sum_log_factorial_before.to_bits(),
                || format!("log product picked up a tail at n = {n}"),
            )?;
            if n as u64 <= N_EXACT {
                ensure(pt.exact_equal == Some(true), || {
                    format!("exact product at n = {n}")
                })?;
                let closed = identities::prod_a_closed(e, n as u64, ProductMode::Exact, N_EXACT)
                    .map_err(|x| x.to_string())?;
                ensure(closed == ProductValue::Exact(prefix_exact.clone()), || {
                    format!("prime-branch product at n = {n}")
                })?;
            }
            checked += 1;
        }
        let d = (p_next - p) as u64;
        sum_d2 += (d * d) as i128;
        if (p as u64) < N_EXACT {
            prefix_exact *= identities::factorial(d);
        }
        if i > 0 && p as u64 > N_IDENTITY {
            break;
        }
    }
    ensure(checked == 78_497, || {
        format!("checked {checked} primes, expected 78497")
    })?;
    Ok(format!(
        "prime and composite branches agree at all {checked} primes 3 <= n <= 10^6"
    ))
}

fn criterion_4(e: &PrimeEngine) -> Outcome {
    let want = [1u64, 1, 2, 1, 2, 1, 4];
    let got: Vec<u64> = stream_a(e, 1, 7)
        .map_err(|x| x.to_string())?
        .map(|r| r.a_n)
        .collect();
    ensure(got == want, || format!("stream gave {got:?}"))?;
    for (i, &w) in want.iter().enumerate() {
        let v = a_of(e, i as u64 + 1).map_err(|x| x.to_string())?;
        ensure(v == w, || format!("a_{} = {v}", i + 1))?;
    }
    Ok("a_1..a_7 = 1,1,2,1,2,1,4".into())
}

fn criterion_5(e: &PrimeEngine) -> Outcome {
    let mut min = (u64::MAX, 0);
    for a in 1..=30 {
        let c = solution_count(e, a, 10_000_000).map_err(|x| x.to_string())?;
        ensure(c >= 5, || {
            format!("only {c} solutions of a_n = {a} below 10^7")
        })?;
        min = min.min((c, a));
    }
    let x = 100_000u64;
    let oracle = a_values(x as usize);
    let mut total = 0;
    for a in 1..=1000 {
        let c = solution_count(e, a, x).map_err(|x| x.to_string())?;
        let direct = oracle[1..].iter().filter(|&&v| v == a).count() as u64;
        ensure(c == direct, || {
            format!("count for a = {a}: {c} vs oracle {direct}")
        })?;
        total += c;
    }
    ensure(total == x, || format!("counts sum to {total}, not {x}"))?;
    Ok(format!(
        "every a <= 30 has >= 5 solutions below 10^7 (fewest: {} for a = {}); counts partition 10^5",
        min.0, min.1
    ))
}

fn rows_within(
    e: &PrimeEngine,
    table: Table,
    grid: &[u64],
) -> Result<Vec<asymptotics::RatioRow>, String> {
    let rows = asymptotics::run_table(e, table, grid).map_err(|x| x.to_string())?;
    for r in &rows {
        bounds::check_row(table, r)?;
    }
    Ok(rows)
}

fn max_abs_residual(rows: &[asymptotics::RatioRow]) -> f64 {
    rows.iter()
        .map(|r| r.residual.unwrap().abs())
        .fold(0.0, f64::max)
}

fn criterion_6(e: &PrimeEngine) -> Outcome {
    let start = Instant::now();
    let grid = asymptotics::geometric_grid(10_000, 100_000_000, 10);
    let rows = rows_within(e, Table::Harmonic, &grid)?;
    let worst = max_abs_residual(&rows);
    ensure(worst <= bounds::HARMONIC_RESIDUAL_MAX, || {
        format!("residual {worst}")
    })?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1}s, budget 120s"))?;
    Ok(format!(
        "max |residual| {worst:.4} <= {} on 10^4..10^8",
        bounds::HARMONIC_RESIDUAL_MAX
    ))
}

fn criterion_7(e: &PrimeEngine) -> Outcome {
    let grid = asymptotics::geometric_grid(1_000, 1_000_000, 10);
    let rows = rows_within(e, Table::Lemma6, &grid)?;
    let worst = max_abs_residual(&rows);
    ensure(worst <= bounds::LEMMA6_RESIDUAL_MAX, || {
        format!("residual {worst}")
    })?;
    Ok(format!(
        "max |residual| {worst:.4} <= {} on 10^3..10^6",
        bounds::LEMMA6_RESIDUAL_MAX
    ))
}

fn criterion_8(e: &PrimeEngine) -> Outcome {
    let grid = asymptotics::default_grid();
    let rows = rows_within(e, Table::Sum, &grid)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for r in &rows {
        let upper = r.raw / (r.x as f64).powf(GAP_SQUARE_EXPONENT);
        ensure(r.ratio >= 0.1 && upper <= 10.0, || {
            format!("x = {}: ratio {}, sum / x^(23/18) = {upper}", r.x, r.ratio)
        })?;
        lo = lo.min(r.ratio);
        hi = hi.max(upper);
    }
    let (fit, _) =
        asymptotics::gap_square_exponent(e, &asymptotics::geometric_grid(10_000, 10_000_000, 10))
            .map_err(|x| x.to_string())?;
    ensure(
        fit.slope > 1.0 && fit.slope < GAP_SQUARE_EXPONENT && fit.r_squared >= 0.99,
        || format!("fit slope {} r^2 {}", fit.slope, fit.r_squared),
    )?;
    Ok(format!(
        "min sum/(x ln x) {lo:.4} >= 0.1, max sum/x^(23/18) {hi:.4} <= 10; \
         squared-gap slope {:.4} in (1, 23/18), r^2 {:.6}",
        fit.slope, fit.r_squared
    ))
}

fn criterion_9(e: &PrimeEngine) -> Outcome {
    let grid = asymptotics::default_grid();
    let rows = rows_within(e, Table::LogSum, &grid)?;
    ensure(bounds::LOG_SUM_LOWER > 0.0, || {
        "lower constant must be positive".into()
    })?;
    for r in &rows {
        let x = r.x as f64;
        ensure(
            r.ratio >= bounds::LOG_SUM_LOWER && r.ratio <= bounds::LOG_SUM_UPPER * x.ln(),
            || format!("x = {}: ratio {}", r.x, r.ratio),
        )?;
        let p_k = e
            .nth_prime(e.prime_count(r.x).map_err(|x| x.to_string())?)
            .map_err(|x| x.to_string())?;
        let bound = 0.09 * p_k as f64 - 3.0;
        ensure(r.raw > bound, || {
            format!("x = {}: {} <= 0.09 p_k - 3 = {bound}", r.x, r.raw)
        })?;
    }
    Ok(format!(
        "sum ln a_n / x within [{}, {} ln x] on 10^3..10^8; explicit 0.09 p_k - 3 bound holds",
        bounds::LOG_SUM_LOWER,
        bounds::LOG_SUM_UPPER
    ))
}

fn criterion_10(e: &PrimeEngine) -> Outcome {
    const X: u64 = 100_000;
    let flags: Vec<bool> = (0..=X + 200).map(is_prime_trial).collect();
    let mut pi = 0u64;
    let mut twins = 0u64;
    let mut nth = Vec::new();
    for x in 0..=X {
        if flags[x as usize] {
            pi += 1;
            nth.push(x);
            if flags[x as usize + 2] {
                twins += 1;
            }
        }
        let got = e.prime_count(x).map_err(|x| x.to_string())?;
        ensure(got == pi, || format!("pi({x}) = {got}, oracle {pi}"))?;
        ensure(e.is_prime(x) == flags[x as usize], || {
            format!("is_prime({x})")
        })?;
        let t = e.twin_prime_count(x).map_err(|x| x.to_string())?;
        ensure(t == twins, || format!("pi_2({x}) = {t}, oracle {twins}"))?;
        let next = (x + 1..).find(|&m| flags[m as usize]).unwrap();
        let got = e.next_prime(x).map_err(|x| x.to_string())?;
        ensure(got == next, || {
            format!("next_prime({x}) = {got}, oracle {next}")
        })?;
    }
    for (k, &p) in nth.iter().enumerate() {
        let got = e.nth_prime(k as u64 + 1).map_err(|x| x.to_string())?;
        ensure(got == p, || format!("p_{} = {got}, oracle {p}", k + 1))?;
    }
    for n in 2..=10_000 {
        let ok = gcd_characterization_check(e, n).map_err(|x| x.to_string())?;
        ensure(ok, || format!("gcd characterization fails at n = {n}"))?;
    }
    Ok(format!(
        "pi, nth_prime, next_prime, pi_2 match trial division for x <= 10^5 ({pi} primes); \
         gcd characterization holds for 2 <= n <= 10^4"
    ))
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gapseq"))
        .args(args)
        .output()
        .map_err(|x| x.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })?;
    Ok(out.stdout)
}

fn criterion_11() -> Outcome {
    let run = [
        "asympt",
        "--which",
        "harmonic",
        "--grid",
        "1e4,1e5,1e6",
        "--format",
        "csv",
    ];
    let first = cli(&run)?;
    let second = cli(&run)?;
    ensure(first == second, || "two runs differ".into())?;
    ensure(
        first.starts_with(b"x,raw,normalizer,ratio,residual,label\n"),
        || "not CSV".into(),
    )?;
    let single = cli(&[&run[..], &["--threads", "1"]].concat())?;
    ensure(first == single, || "thread count changed the output".into())?;
    let dir = tempfile::tempdir().map_err(|x| x.to_string())?;
    for stop in ["1", "2"] {
        let ck = dir.path().join(format!("stop{stop}.json"));
        let ck = ck.to_str().unwrap();
        cli(&[&run[..], &["--save", ck, "--stop-after", stop]].concat())?;
        let resumed = cli(&[
            "asympt", "--which", "harmonic", "--resume", ck, "--format", "csv",
        ])?;
        ensure(resumed == first, || {
            format!("resume after {stop} rows differs")
        })?;
    }
    Ok(format!(
        "repeat, single-thread and resumed runs byte-identical ({} bytes of CSV)",
        first.len()
    ))
}

fn main() {
    let start = Instant::now();
    let engine = PrimeEngine::with_limit(100_001_600).expect("sieve to 10^8");
    let oracle = Oracle::new();
    println!(
        "acceptance: sieve to {} and oracle ready in {:.2}s",
        engine.limit(),
        start.elapsed().as_secs_f64()
    );

    let criteria: Vec<Criterion> = vec![
        ("sum identity", Box::new(|| criterion_1(&engine, &oracle))),
        (
            "product identity",
            Box::new(|| criterion_2(&engine, &oracle)),
        ),
        (
            "branch consistency",
            Box::new(|| criterion_3(&engine, &oracle)),
        ),
        ("sequence ground truth", Box::new(|| criterion_4(&engine))),
        ("solution counts", Box::new(|| criterion_5(&engine))),
        ("harmonic residual", Box::new(|| criterion_6(&engine))),
        ("log-gap residual", Box::new(|| criterion_7(&engine))),
        ("sum sandwich", Box::new(|| criterion_8(&engine))),
        ("log-sum sandwich", Box::new(|| criterion_9(&engine))),
        ("oracle suite", Box::new(|| criterion_10(&engine))),
        ("determinism", Box::new(criterion_11)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.1}s total",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
