//! Checkpoint files: one UTF-8 JSON object.
//!
//! ```text
//! {
//!   "version": 1,
//!   "engine_limit": 100000000,
//!   "created_at": "2026-10-18T12:00:00Z",
//!   "aggregate": {
//!     "k": 4, "last_prime": 11, "sum_d": 9, "sum_d2": 25, "twin_gaps": 2,
//!     "sum_log_d": ["0x1.62e42fefa39efp+1", "0x0p+0"],
//!     ...each real accumulator is [sum, compensation] in hex-float text...
//!   },
//!   "table": { ... }            // optional, present for table runs
//!   "crc32": "<8 lowercase hex digits>"
//! }
//! ```
//!
//! `crc32` is the CRC-32 (IEEE) of the compact JSON serialization of every
//! other field, in the order above. Reals are written with
//! [`format_hex_float`] so that they reload with identical bit patterns.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GapAggregate;
use crate::asymptotics::{RatioRow, Table};
use crate::error::{Error, Result};
use crate::numeric::{format_hex_float, parse_hex_float, CompensatedSum};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Progress of an asymptotics table run: the rows already emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct TableProgress {
    pub table: Table,
    pub grid: Vec<u64>,
    pub rows: Vec<RatioRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub engine_limit: u64,
    pub aggregate: GapAggregate,
    pub created_at: String,
    pub table: Option<TableProgress>,
}

impl Checkpoint {
    pub fn new(engine_limit: u64, aggregate: GapAggregate) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            engine_limit,
            aggregate,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            table: None,
        }
    }

    pub fn with_table(mut self, table: TableProgress) -> Self {
        self.table = Some(table);
        self
    }

    pub fn to_json(&self) -> String {
        let body = Body::from(self);
        let compact = serde_json::to_string(&body).expect("checkpoint serializes");
        let file = File {
            body,
            crc32: format!("{:08x}", crc32fast::hash(compact.as_bytes())),
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptedPayload(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CorruptedPayload("missing version".into()))?;
        if version != CHECKPOINT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                found: version.min(u32::MAX as u64) as u32,
                expected: CHECKPOINT_VERSION,
            });
        }
        let file: File =
            serde_json::from_value(value).map_err(|e| Error::CorruptedPayload(e.to_string()))?;
        let compact = serde_json::to_string(&file.body).expect("checkpoint serializes");
        let crc = format!("{:08x}", crc32fast::hash(compact.as_bytes()));
        if crc != file.crc32 {
            return Err(Error::CorruptedPayload(format!(
                "checksum mismatch: stored {}, computed {crc}",
                file.crc32
            )));
        }
        file.body.try_into()
    }

    /// Writes to a sibling temp file then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_json().as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

pub fn save_checkpoint(agg: &GapAggregate, engine_limit: u64, path: &Path) -> Result<Checkpoint> {
    let cp = Checkpoint::new(engine_limit, *agg);
    cp.save(path)?;
    Ok(cp)
}

pub fn load_checkpoint(path: &Path) -> Result<GapAggregate> {
    Ok(Checkpoint::load(path)?.aggregate)
}

#[derive(Serialize, Deserialize)]
struct File {
    #[serde(flatten)]
    body: Body,
    crc32: String,
}

#[derive(Serialize, Deserialize)]
struct Body {
    version: u32,
    engine_limit: u64,
    created_at: String,
    aggregate: AggregateRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<TableRecord>,
}

#[derive(Serialize, Deserialize)]
struct AggregateRecord {
    k: u64,
    last_prime: u64,
    sum_d: u64,
    sum_d2: u64,
    twin_gaps: u64,
    sum_log_d: [String; 2],
    sum_log_d_factorial: [String; 2],
    sum_harmonic: [String; 2],
    sum_log_log_index: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct TableRecord {
    which: String,
    grid: Vec<u64>,
    rows: Vec<RowRecord>,
}

#[derive(Serialize, Deserialize)]
struct RowRecord {
    x: u64,
    raw: String,
    normalizer: String,
    ratio: String,
    residual: Option<String>,
}

fn real(s: &str) -> Result<f64> {
    parse_hex_float(s).ok_or_else(|| Error::CorruptedPayload(format!("bad real {s:?}")))
}

fn encode_sum(s: &CompensatedSum) -> [String; 2] {
    let (sum, comp) = s.parts();
    [format_hex_float(sum), format_hex_float(comp)]
}

fn decode_sum(parts: &[String; 2]) -> Result<CompensatedSum> {
    Ok(CompensatedSum::from_parts(
        real(&parts[0])?,
        real(&parts[1])?,
    ))
}

impl From<&Checkpoint> for Body {
    fn from(cp: &Checkpoint) -> Self {
        let a = &cp.aggregate;
        Body {
            version: cp.version,
            engine_limit: cp.engine_limit,
            created_at: cp.created_at.clone(),
            aggregate: AggregateRecord {
                k: a.k,
                last_prime: a.last_prime,
                sum_d: a.sum_d,
                sum_d2: a.sum_d2,
                twin_gaps: a.twin_gaps,
                sum_log_d: encode_sum(&a.sum_log_d),
                sum_log_d_factorial: encode_sum(&a.sum_log_d_factorial),
                sum_harmonic: encode_sum(&a.sum_harmonic),
                sum_log_log_index: encode_sum(&a.sum_log_log_index),
            },
            table: cp.table.as_ref().map(|t| TableRecord {
                which: t.table.name().to_string(),
                grid: t.grid.clone(),
                rows: t
                    .rows
                    .iter()
                    .map(|r| RowRecord {
                        x: r.x,
                        raw: format_hex_float(r.raw),
                        normalizer: format_hex_float(r.normalizer),
                        ratio: format_hex_float(r.ratio),
                        residual: r.residual.map(format_hex_float),
                    })
                    .collect(),
            }),
        }
    }
}

impl TryFrom<Body> for Checkpoint {
    type Error = Error;

    fn try_from(body: Body) -> Result<Self> {
        let a = body.aggregate;
        let aggregate = GapAggregate {
            k: a.k,
            last_prime: a.last_prime,
            sum_d: a.sum_d,
            sum_d2: a.sum_d2,
            twin_gaps: a.twin_gaps,
            sum_log_d: decode_sum(&a.sum_log_d)?,
            sum_log_d_factorial: decode_sum(&a.sum_log_d_factorial)?,
            sum_harmonic: decode_sum(&a.sum_harmonic)?,
            sum_log_log_index: decode_sum(&a.sum_log_log_index)?,
        };
        if aggregate.sum_d + 2 != aggregate.last_prime {
            return Err(Error::CorruptedPayload(
                "sum_d does not telescope to last_prime".into(),
            ));
        }
        let table = match body.table {
            None => None,
            Some(t) => {
                let table: Table = t
                    .which
                    .parse()
                    .map_err(|_| Error::CorruptedPayload(format!("unknown table {:?}", t.which)))?;
                let rows = t
                    .rows
                    .into_iter()
                    .map(|r| {
                        Ok(RatioRow {
                            x: r.x,
                            raw: real(&r.raw)?,
                            normalizer: real(&r.normalizer)?,
                            ratio: real(&r.ratio)?,
                            residual: r.residual.as_deref().map(real).transpose()?,
                            label: table.label(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(TableProgress {
                    table,
                    grid: t.grid,
                    rows,
                })
            }
        };
        Ok(Checkpoint {
            version: body.version,
            engine_limit: body.engine_limit,
            aggregate,
            created_at: body.created_at,
            table,
        })
    }
}
