//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

/// Exact `C(n, k)` for small `n`.
pub fn choose(n: u64, k: u64) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// `P(X >= k)` for `X ~ Binomial(n, 1/2)`, summed term by term.
pub fn upper_tail(n: u64, k: u64) -> f64 {
    let num: u128 = (k..=n).map(|j| choose(n, j)).sum();
    num as f64 / 2f64.powi(n as i32)
}

/// `P(X <= k)` for `X ~ Binomial(n, 1/2)`.
pub fn lower_tail(n: u64, k: u64) -> f64 {
    let num: u128 = (0..=k).map(|j| choose(n, j)).sum();
    num as f64 / 2f64.powi(n as i32)
}

/// Step-up rejections by the textbook definition: find the largest `k`
/// with `p_(k) <= k alpha / m` and reject every p-value at or below `p_(k)`.
pub fn bh_oracle(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = (1..=m).rev().find(|&k| sorted[k - 1] <= k as f64 * alpha / m as f64).map(|k| sorted[k - 1]);
    p.iter().map(|&x| threshold.is_some_and(|t| x <= t)).collect()
}

#[derive(Debug, Clone)]
pub struct FixtureRow {
    pub table: String,
    pub model: String,
    pub method: String,
    pub n12: u64,
    pub n21: u64,
    pub n_star: u64,
    pub z: f64,
    pub p: f64,
    pub reject: bool,
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/appendix_tables.csv")
}

/// Rows transcribed from the published result tables.
pub fn appendix_rows() -> Vec<FixtureRow> {
    let mut reader = csv::Reader::from_path(fixture_path()).expect("fixture present");
    reader
        .records()
        .map(|r| {
            let r = r.expect("well-formed fixture");
            FixtureRow {
                table: r[0].to_string(),
                model: r[1].to_string(),
                method: r[2].to_string(),
                n12: r[3].parse().unwrap(),
                n21: r[4].parse().unwrap(),
                n_star: r[5].parse().unwrap(),
                z: r[6].parse().unwrap(),
                p: r[7].parse().unwrap(),
                reject: &r[8] == "True",
            }
        })
        .collect()
}

/// Splice spans into text back to front, independently of the library.
pub fn splice(text: &str, spans: &[(usize, usize, &str, &str)]) -> String {
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| std::cmp::Reverse(s.0));
    let mut out = text.to_string();
    for (start, end, before, after) in sorted {
        assert_eq!(&out[start..end], before);
        out.replace_range(start..end, after);
    }
    out
}
