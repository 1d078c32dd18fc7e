//! Browser bindings for the demo page in `www/`.
//!
//! Each call sieves just far enough for its arguments. Sizes are capped so a
//! page stays responsive.

use gapseq::asymptotics::{self, Table};
use gapseq::identities;
use gapseq::sequence::stream_a;
use gapseq::PrimeEngine;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest sieve bound a single call may request.
pub const MAX_LIMIT: u64 = 30_000_000;
/// Longest window `sequence_window` returns.
pub const MAX_WINDOW: u64 = 20_000;
const MARGIN: u64 = 1600;

fn engine(limit: u64) -> Result<PrimeEngine, String> {
    if limit > MAX_LIMIT {
        return Err(format!(
            "needs primes up to {limit}; the demo stops at {MAX_LIMIT}"
        ));
    }
    PrimeEngine::with_limit(limit.max(2)).map_err(|e| e.to_string())
}

/// `a_n` for `lo <= n <= hi`.
pub fn window(lo: u64, hi: u64) -> Result<Vec<u32>, String> {
    if hi >= lo && hi - lo >= MAX_WINDOW {
        return Err(format!("window is limited to {MAX_WINDOW} values"));
    }
    let e = engine(hi.saturating_add(MARGIN))?;
    let stream = stream_a(&e, lo, hi).map_err(|e| e.to_string())?;
    Ok(stream.map(|r| r.a_n as u32).collect())
}

/// Rows of one table on the grid `10^3, 10^4, ..., 10^max_exp`, as JSON.
pub fn curve(which: &str, max_exp: u32) -> Result<String, String> {
    let table: Table = which.parse().map_err(|e: gapseq::Error| e.to_string())?;
    if !(3..=9).contains(&max_exp) {
        return Err("max_exp must be between 3 and 9".into());
    }
    let grid = asymptotics::geometric_grid(1_000, 10u64.pow(max_exp), 10);
    let last = *grid.last().expect("grid is non-empty");
    let e = engine(asymptotics::required_limit(table, last))?;
    let rows = asymptotics::run_table(&e, table, &grid).map_err(|e| e.to_string())?;
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| asymptotics::bounds::check_row(table, r).err())
        .collect();
    Ok(json!({ "table": table.name(), "rows": rows, "failures": failures }).to_string())
}

/// Closed forms against brute force at `n`, as JSON.
pub fn check(n: u64, exact: bool) -> Result<String, String> {
    let e = engine(n.saturating_add(MARGIN))?;
    let cap = identities::DEFAULT_EXACT_CAP.min(e.limit());
    let report =
        identities::verify_one(&e, n, exact && n <= cap, cap).map_err(|e| e.to_string())?;
    let passed = report.passed();
    let mut value = serde_json::to_value(report).map_err(|e| e.to_string())?;
    value["passed"] = json!(passed);
    Ok(value.to_string())
}

#[wasm_bindgen]
pub fn sequence_window(lo: u64, hi: u64) -> Result<Vec<u32>, JsError> {
    window(lo, hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ratio_curve(which: &str, max_exp: u32) -> Result<String, JsError> {
    curve(which, max_exp).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn identity_check(n: u64, exact: bool) -> Result<String, JsError> {
    check(n, exact).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn window_values() {
        assert_eq!(window(1, 7).unwrap(), vec![1, 1, 2, 1, 2, 1, 4]);
        assert_eq!(window(89, 97).unwrap(), vec![8, 7, 6, 5, 4, 3, 2, 1, 4]);
        assert!(window(0, 5).is_err());
        assert!(window(1, 1 + MAX_WINDOW).is_err());
        assert!(window(MAX_LIMIT, MAX_LIMIT + 10).is_err());
    }

    #[test]
    fn curve_json() {
        let v: Value = serde_json::from_str(&curve("harmonic", 5).unwrap()).unwrap();
        assert_eq!(v["table"], "harmonic");
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2]["x"], 100_000);
        assert!(v["failures"].as_array().unwrap().is_empty());
        assert!(curve("nope", 5).is_err());
        assert!(curve("sum", 2).is_err());
        assert!(curve("lemma6", 9).is_err());
    }

    #[test]
    fn check_json() {
        let v: Value = serde_json::from_str(&check(9, true).unwrap()).unwrap();
        assert_eq!(v["s_closed"], 17);
        assert_eq!(v["p_exact_closed"], "48");
        assert_eq!(v["branch_used"], "composite_branch");
        assert_eq!(v["passed"], true);
        let v: Value = serde_json::from_str(&check(1_000_003, true).unwrap()).unwrap();
        assert_eq!(v["passed"], true);
        assert!(v["p_exact_closed"].is_null());
        assert!(check(0, false).is_err());
    }
}
