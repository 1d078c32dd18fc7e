//! The `gapseq` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation error (range, limit,
//! I/O), 3 verification failure (an identity did not hold or a calibrated
//! bound was violated).

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::asymptotics::{self, bounds, required_limit, RatioRow, Table, TableRunner};
use crate::error::{Error, Result};
use crate::gapstats::{BoundMode, Checkpoint, GapAggregate, GapCursor};
use crate::identities::{self, ProductMode, ProductValue, DEFAULT_EXACT_CAP};
use crate::sequence;
use crate::sieve::{PrimeEngine, SieveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const DEFAULT_LIMIT: u64 = 100_000_000;

/// Headroom above an argument for the prime that follows it.
const NEXT_PRIME_MARGIN: u64 = 1600;

#[derive(Debug, Parser)]
#[command(
    name = "gapseq",
    version,
    about = "Distance to the next prime: sequence, identities, asymptotics"
)]
struct Cli {
    /// Sieve bound (default 1e8, raised automatically when a command needs more)
    #[arg(long, global = true, value_parser = parse_count)]
    limit: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Write results here instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Sieve worker threads (0 = auto); never changes any emitted value
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Largest n for exact big-integer products (default 1e5, capped at the limit)
    #[arg(long, global = true, value_parser = parse_count)]
    exact_cap: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stream (n, a_n) over a range
    Seq {
        #[arg(long, value_parser = parse_count)]
        from: u64,
        #[arg(long, value_parser = parse_count)]
        to: u64,
    },
    /// Partial sum S_n = a_1 + ... + a_n
    Sum(SumArgs),
    /// Partial product P_{n-1} = a_1 ... a_{n-1}
    Prod(ProdArgs),
    /// Number of n <= x with a_n = a
    Count {
        #[arg(long, value_parser = parse_count)]
        a: u64,
        #[arg(long, value_parser = parse_count)]
        x: u64,
    },
    /// Check the closed forms for S_n and P_{n-1} against brute force
    Verify {
        #[arg(long, value_parser = parse_list)]
        n: NumberList,
        #[arg(long)]
        exact: bool,
    },
    /// Ratio and residual tables against asymptotic main terms
    Asympt(AsymptArgs),
    /// Save or resume a gap-aggregate checkpoint
    Checkpoint(CheckpointArgs),
}

#[derive(Debug, Args)]
struct SumArgs {
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long, group = "route")]
    closed: bool,
    #[arg(long, group = "route")]
    brute: bool,
    #[arg(long, group = "route")]
    both: bool,
}

#[derive(Debug, Args)]
struct ProdArgs {
    #[arg(long, value_parser = parse_count)]
    n: u64,
    #[arg(long, group = "mode")]
    exact: bool,
    #[arg(long, group = "mode")]
    log: bool,
}

#[derive(Debug, Args)]
struct AsymptArgs {
    /// sum, harmonic, logsum, lemma6, gaps2 or panaitopol
    #[arg(long, value_parser = parse_table)]
    which: Table,
    /// Strictly increasing x values (default 1e3,1e4,...,1e8)
    #[arg(long, value_parser = parse_list)]
    grid: Option<NumberList>,
    /// Write a checkpoint after every row
    #[arg(long)]
    save: Option<PathBuf>,
    /// Continue the run stored in this checkpoint
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Stop after computing this many new rows
    #[arg(long)]
    stop_after: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("io").required(true).multiple(true).args(["save", "resume"]))]
struct CheckpointArgs {
    #[arg(long)]
    save: Option<PathBuf>,
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Advance the aggregate to this target before saving
    #[arg(long, value_parser = parse_count)]
    x: Option<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Value)]
    mode: ModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// gaps d_i with p_i <= x
    Value,
    /// gaps d_i with i <= x
    Index,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NumberList(Vec<u64>);

/// Parses `12345`, `1_000`, `1e6`, or `10^6`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim().replace('_', "");
    let bad = || format!("not a non-negative integer: {s:?}");
    if let Some((m, e)) = s.split_once(['e', 'E']) {
        let m: u64 = m.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        return 10u64
            .checked_pow(e)
            .and_then(|p| p.checked_mul(m))
            .ok_or_else(bad);
    }
    if let Some((b, e)) = s.split_once('^') {
        let b: u64 = b.parse().map_err(|_| bad())?;
        let e: u32 = e.parse().map_err(|_| bad())?;
        return b.checked_pow(e).ok_or_else(bad);
    }
    s.parse().map_err(|_| bad())
}

fn parse_list(s: &str) -> std::result::Result<NumberList, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_count)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(NumberList)
}

fn parse_table(s: &str) -> std::result::Result<Table, String> {
    s.parse::<Table>().map_err(|e| e.to_string())
}

/// Runs the CLI on `argv` (including the program name), writing to the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, err) {
        Ok(outcome) => {
            if let Err(e) = emit(&cli, &outcome.doc, out) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_COMPUTE;
            }
            for msg in &outcome.failures {
                let _ = writeln!(err, "verification failed: {msg}");
            }
            if !outcome.failures.is_empty() {
                EXIT_VERIFY
            } else if outcome.had_errors {
                EXIT_COMPUTE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_COMPUTE,
            }
        }
    }
}

/// Runs the CLI against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    run_with(argv, &mut out, &mut err)
}

enum Cell {
    Int(u128),
    Real(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as u128)
    }
}

impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl Cell {
    /// CSV text: reals with 17 significant digits.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn display(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.10}"),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => {
                u64::try_from(*v).map_or_else(|_| Value::String(v.to_string()), Value::from)
            }
            Cell::Real(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Empty => Value::Null,
        }
    }
}

struct Document {
    headers: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    /// Extra top-level JSON members; also printed as `# key: value` after CSV.
    extra: Vec<(&'static str, Value)>,
}

impl Document {
    fn new(headers: Vec<&'static str>) -> Self {
        Document {
            headers,
            rows: Vec::new(),
            extra: Vec::new(),
        }
    }

    fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Csv => {
                s.push_str(&self.headers.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                for (k, v) in &self.extra {
                    let _ = writeln!(s, "# {k}: {v}");
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .headers
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut top = Map::new();
                top.insert("rows".into(), Value::Array(rows));
                for (k, v) in &self.extra {
                    top.insert(k.to_string(), v.clone());
                }
                s = serde_json::to_string_pretty(&Value::Object(top)).expect("json");
                s.push('\n');
            }
            Format::Table => {
                let cells: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|r| r.iter().map(Cell::display).collect())
                    .collect();
                let widths: Vec<usize> = self
                    .headers
                    .iter()
                    .enumerate()
                    .map(|(i, h)| {
                        cells
                            .iter()
                            .map(|r| r[i].len())
                            .max()
                            .unwrap_or(0)
                            .max(h.len())
                    })
                    .collect();
                let line = |items: Vec<&str>| {
                    items
                        .iter()
                        .zip(&widths)
                        .map(|(c, w)| format!("{c:>w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                s.push_str(&line(self.headers.clone()));
                s.push('\n');
                for r in &cells {
                    s.push_str(&line(r.iter().map(String::as_str).collect()));
                    s.push('\n');
                }
                for (k, v) in &self.extra {
                    let _ = writeln!(s, "{k}: {v}");
                }
            }
        }
        s
    }
}

struct Outcome {
    doc: Document,
    failures: Vec<String>,
    had_errors: bool,
}

impl Outcome {
    fn ok(doc: Document) -> Self {
        Outcome {
            doc,
            failures: Vec::new(),
            had_errors: false,
        }
    }
}

fn emit(cli: &Cli, doc: &Document, out: &mut dyn Write) -> Result<()> {
    let text = doc.render(cli.format);
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn engine_for(cli: &Cli, needed: u64) -> Result<PrimeEngine> {
    let limit = cli.limit.unwrap_or(DEFAULT_LIMIT.max(needed));
    if let Some(cap) = cli.exact_cap.filter(|&cap| cap > limit) {
        return Err(Error::InvalidConfig(format!(
            "exact cap {cap} exceeds the sieve limit {limit}"
        )));
    }
    PrimeEngine::new(SieveConfig::new(limit).with_threads(cli.threads))
}

fn exact_cap(cli: &Cli, engine: &PrimeEngine) -> u64 {
    cli.exact_cap
        .unwrap_or(DEFAULT_EXACT_CAP.min(engine.limit()))
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Result<Outcome> {
    match &cli.command {
        Command::Seq { from, to } => {
            let engine = engine_for(cli, to.saturating_add(NEXT_PRIME_MARGIN))?;
            let mut doc = Document::new(vec!["n", "a_n"]);
            for r in sequence::stream_a(&engine, *from, *to)? {
                doc.rows.push(vec![r.n.into(), r.a_n.into()]);
            }
            Ok(Outcome::ok(doc))
        }
        Command::Sum(args) => {
            let engine = engine_for(cli, args.n.saturating_add(NEXT_PRIME_MARGIN))?;
            let (closed, brute) = match (args.brute, args.both) {
                (true, _) => (false, true),
                (_, true) => (true, true),
                _ => (true, false),
            };
            let mut headers = vec!["n"];
            let mut row: Vec<Cell> = vec![args.n.into()];
            let c = if closed {
                Some(identities::sum_a_closed(&engine, args.n)?)
            } else {
                None
            };
            let b = if brute {
                Some(identities::sum_a_brute(&engine, args.n)?)
            } else {
                None
            };
            if let Some(c) = c {
                headers.push("s_closed");
                row.push(c.into());
            }
            if let Some(b) = b {
                headers.push("s_brute");
                row.push(b.into());
            }
            let mut doc = Document::new(headers);
            doc.rows.push(row);
            let mut outcome = Outcome::ok(doc);
            if let (Some(c), Some(b)) = (c, b) {
                if c != b {
                    outcome
                        .failures
                        .push(format!("S_{}: closed {c} != brute {b}", args.n));
                }
            }
            Ok(outcome)
        }
        Command::Prod(args) => {
            let engine = engine_for(cli, args.n.saturating_add(NEXT_PRIME_MARGIN))?;
            let mode = if args.exact {
                ProductMode::Exact
            } else {
                ProductMode::LogSpace
            };
            let value = identities::prod_a_closed(&engine, args.n, mode, exact_cap(cli, &engine))?;
            let mut doc = Document::new(vec!["n", "log_p", "p_exact"]);
            let exact_text: Cell = match &value {
                ProductValue::Exact(b) => b.to_str_radix(10).into(),
                ProductValue::Log(_) => Cell::Empty,
            };
            doc.rows
                .push(vec![args.n.into(), value.as_log().into(), exact_text]);
            Ok(Outcome::ok(doc))
        }
        Command::Count { a, x } => {
            let engine = engine_for(cli, x.saturating_add(*a))?;
            let count = sequence::solution_count(&engine, *a, *x)?;
            let mut doc = Document::new(vec!["a", "x", "count"]);
            doc.rows.push(vec![(*a).into(), (*x).into(), count.into()]);
            Ok(Outcome::ok(doc))
        }
        Command::Verify { n, exact } => verify(cli, &n.0, *exact),
        Command::Asympt(args) => asympt(cli, args, err),
        Command::Checkpoint(args) => checkpoint(cli, args),
    }
}

fn verify(cli: &Cli, ns: &[u64], exact: bool) -> Result<Outcome> {
    let max = ns.iter().copied().max().unwrap_or(1);
    let engine = engine_for(cli, max.saturating_add(NEXT_PRIME_MARGIN))?;
    let reports = identities::verify_identities(&engine, ns, exact, exact_cap(cli, &engine));
    let mut doc = Document::new(vec![
        "n",
        "branch",
        "s_closed",
        "s_brute",
        "log_p_closed",
        "log_p_brute",
        "exact_match",
        "passed",
        "error",
    ]);
    let mut outcome_failures = Vec::new();
    let mut had_errors = false;
    for (&n, rep) in ns.iter().zip(reports) {
        match rep {
            Ok(r) => {
                let branch = serde_json::to_value(r.branch_used)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                let exact_match: Cell = if exact {
                    r.exact_product_matches().into()
                } else {
                    Cell::Empty
                };
                if !r.passed() {
                    outcome_failures.push(format!("identities do not hold at n = {n}"));
                }
                doc.rows.push(vec![
                    n.into(),
                    branch.into(),
                    r.s_closed.into(),
                    r.s_brute.into(),
                    r.log_p_closed.into(),
                    r.log_p_brute.into(),
                    exact_match,
                    r.passed().into(),
                    Cell::Empty,
                ]);
            }
            Err(e) => {
                had_errors = true;
                let mut row: Vec<Cell> = vec![n.into()];
                row.extend((0..6).map(|_| Cell::Empty));
                row.push(false.into());
                row.push(e.to_string().into());
                doc.rows.push(row);
            }
        }
    }
    Ok(Outcome {
        doc,
        failures: outcome_failures,
        had_errors,
    })
}

fn ratio_document(rows: &[RatioRow]) -> Document {
    let mut doc = Document::new(vec!["x", "raw", "normalizer", "ratio", "residual", "label"]);
    for r in rows {
        doc.rows.push(vec![
            r.x.into(),
            r.raw.into(),
            r.normalizer.into(),
            r.ratio.into(),
            r.residual.into(),
            r.label.into(),
        ]);
    }
    doc
}

fn asympt(cli: &Cli, args: &AsymptArgs, err: &mut dyn Write) -> Result<Outcome> {
    let resumed = args.resume.as_deref().map(Checkpoint::load).transpose()?;
    let (table, grid) = match &resumed {
        Some(cp) => {
            let progress = cp.table.as_ref().ok_or_else(|| {
                Error::InvalidArgument("checkpoint does not belong to a table run".into())
            })?;
            if progress.table != args.which {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint is for table {}, not {}",
                    progress.table, args.which
                )));
            }
            if let Some(g) = &args.grid {
                if g.0 != progress.grid {
                    return Err(Error::InvalidArgument(
                        "grid differs from the checkpoint".into(),
                    ));
                }
            }
            (progress.table, progress.grid.clone())
        }
        None => (
            args.which,
            args.grid
                .as_ref()
                .map_or_else(asymptotics::default_grid, |g| g.0.clone()),
        ),
    };
    let needed = grid.last().map_or(2, |&x| required_limit(table, x));
    let engine = engine_for(cli, needed)?;
    let mut runner = match &resumed {
        Some(cp) => TableRunner::resume(&engine, cp)?,
        None => TableRunner::new(&engine, table, grid)?,
    };
    let mut computed = 0usize;
    while !runner.is_done() {
        if args.stop_after.is_some_and(|n| computed >= n) {
            let _ = writeln!(err, "stopped after {computed} new rows");
            break;
        }
        runner.step()?;
        computed += 1;
        if let Some(path) = &args.save {
            runner.checkpoint().save(path)?;
        }
    }
    if let Some(path) = &args.save {
        if computed == 0 {
            runner.checkpoint().save(path)?;
        }
    }

    let complete = runner.is_done();
    let rows = runner.into_rows();
    let mut doc = ratio_document(&rows);
    let mut failures: Vec<String> = rows
        .iter()
        .filter_map(|r| bounds::check_row(table, r).err())
        .collect();
    if table == Table::LogSum {
        for r in &rows {
            if let Err(msg) = bounds::check_log_sum_explicit(&engine, r) {
                failures.push(msg);
            }
        }
    }
    if table == Table::Gaps2 && complete && rows.len() >= 3 {
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.x as f64, r.raw)).collect();
        let fit = asymptotics::fit_power_law(&points)?;
        doc.extra
            .push(("fit", serde_json::to_value(fit).expect("fit serializes")));
        if let Err(msg) = bounds::check_gap_square_fit(&fit) {
            failures.push(msg);
        }
    }
    Ok(Outcome {
        doc,
        failures,
        had_errors: false,
    })
}

fn checkpoint(cli: &Cli, args: &CheckpointArgs) -> Result<Outcome> {
    let start = match &args.resume {
        Some(p) => Checkpoint::load(p)?.aggregate,
        None => GapAggregate::new(),
    };
    let needed = match (args.x, args.mode) {
        (None, _) => start.last_prime,
        (Some(x), ModeArg::Value) => x.saturating_add(NEXT_PRIME_MARGIN),
        (Some(x), ModeArg::Index) => required_limit(Table::Lemma6, x),
    }
    .max(start.last_prime);
    let engine = engine_for(cli, needed)?;
    if !engine.is_prime(start.last_prime) || engine.prime_count(start.last_prime)? != start.k + 1 {
        return Err(Error::CorruptedPayload(
            "checkpoint aggregate does not match the sieve".into(),
        ));
    }
    let mut cursor = GapCursor::resume(&engine, start);
    if let Some(x) = args.x {
        let mode = match args.mode {
            ModeArg::Value => BoundMode::PrimeValue,
            ModeArg::Index => BoundMode::GapIndex,
        };
        match mode {
            BoundMode::PrimeValue => cursor.advance_through_value(x)?,
            BoundMode::GapIndex => cursor.advance_to_index(x)?,
        };
    }
    let agg = *cursor.aggregate();
    if let Some(path) = &args.save {
        Checkpoint::new(engine.limit(), agg).save(path)?;
    }
    let mut doc = Document::new(vec![
        "k",
        "last_prime",
        "sum_d",
        "sum_d2",
        "twin_gaps",
        "sum_log_d",
        "sum_log_d_factorial",
        "sum_harmonic",
    ]);
    doc.rows.push(vec![
        agg.k.into(),
        agg.last_prime.into(),
        agg.sum_d.into(),
        agg.sum_d2.into(),
        agg.twin_gaps.into(),
        agg.sum_log_d.value().into(),
        agg.sum_log_d_factorial.value().into(),
        agg.sum_harmonic.value().into(),
    ]);
    Ok(Outcome::ok(doc))
}
