//! Statistics for binary matched pairs.
//!
//! Every routine here is a pure function of its inputs. The 2x2 table
//! follows the usual matched-pair layout: rows are the original arm,
//! columns the perturbed arm, and only the discordant cells `n12` and
//! `n21` carry information about marginal homogeneity.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Discordant-pair count above which the normal approximation replaces
/// the exact conditional test.
pub const EXACT_MAX_DISCORDANT: u64 = 10;

/// Counts of joint outcomes over `n` matched pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyTable {
    /// Both arms correct.
    pub n11: u64,
    /// Original correct, perturbed wrong.
    pub n12: u64,
    /// Original wrong, perturbed correct.
    pub n21: u64,
    /// Both arms wrong.
    pub n22: u64,
}

impl ContingencyTable {
    pub fn new(n11: u64, n12: u64, n21: u64, n22: u64) -> Self {
        Self { n11, n12, n21, n22 }
    }

    /// Table carrying only the discordant cells.
    pub fn discordant(n12: u64, n21: u64) -> Self {
        Self { n11: 0, n12, n21, n22: 0 }
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n12 + self.n21 + self.n22
    }

    /// `n* = n12 + n21`.
    pub fn n_star(&self) -> u64 {
        self.n12 + self.n21
    }

    /// Record one pair graded in both arms.
    pub fn record(&mut self, original_correct: bool, perturbed_correct: bool) {
        match (original_correct, perturbed_correct) {
            (true, true) => self.n11 += 1,
            (true, false) => self.n12 += 1,
            (false, true) => self.n21 += 1,
            (false, false) => self.n22 += 1,
        }
    }

    pub fn swapped(&self) -> Self {
        Self { n12: self.n21, n21: self.n12, ..*self }
    }
}

/// Alternative hypothesis about the discordant probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestDirection {
    /// `pi12 < pi21`: the perturbation helps.
    Less,
    /// `pi12 > pi21`: the perturbation hurts.
    Greater,
    TwoSided,
}

impl fmt::Display for TestDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestDirection::Less => "less",
            TestDirection::Greater => "greater",
            TestDirection::TwoSided => "two_sided",
        })
    }
}

impl std::str::FromStr for TestDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "less" => Ok(TestDirection::Less),
            "greater" => Ok(TestDirection::Greater),
            "two_sided" | "twosided" => Ok(TestDirection::TwoSided),
            other => Err(format!("unknown test direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub n12: u64,
    pub n21: u64,
    pub n_star: u64,
    pub z_stat: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub direction: TestDirection,
}

/// McNemar statistic `(n21 - n12) / sqrt(n12 + n21)`, zero when there are
/// no discordant pairs.
pub fn mcnemar_z(table: &ContingencyTable) -> f64 {
    let n_star = table.n_star();
    if n_star == 0 {
        return 0.0;
    }
    (table.n21 as f64 - table.n12 as f64) / (n_star as f64).sqrt()
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Phi(z)` without cancellation for large `z`.
fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Lower and upper tails `P(X <= k)` and `P(X >= k)` for `X ~ Binomial(n, 1/2)`.
fn binomial_half_tails(n: u64, k: u64) -> (f64, f64) {
    debug_assert!(k <= n);
    // log pmf via the ratio recurrence C(n, j) = C(n, j-1) * (n - j + 1) / j
    let ln_half_n = -(n as f64) * std::f64::consts::LN_2;
    let mut ln_coef = 0.0f64;
    let mut lower = 0.0f64;
    let mut upper = 0.0f64;
    for j in 0..=n {
        if j > 0 {
            ln_coef += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        let pmf = (ln_coef + ln_half_n).exp();
        if j <= k {
            lower += pmf;
        }
        if j >= k {
            upper += pmf;
        }
    }
    (lower.min(1.0), upper.min(1.0))
}

/// Exact conditional test: given `n*`, `n21 ~ Binomial(n*, 1/2)` under the null.
pub fn exact_test(table: &ContingencyTable, direction: TestDirection) -> TestResult {
    let n_star = table.n_star();
    let p_value = if n_star == 0 {
        1.0
    } else {
        let (lower, upper) = binomial_half_tails(n_star, table.n21);
        match direction {
            TestDirection::Less => upper,
            TestDirection::Greater => lower,
            TestDirection::TwoSided => (2.0 * lower.min(upper)).min(1.0),
        }
    };
    TestResult {
        n12: table.n12,
        n21: table.n21,
        n_star,
        z_stat: mcnemar_z(table),
        p_value,
        method: TestMethod::Exact,
        direction,
    }
}

/// Normal approximation using the McNemar statistic.
pub fn normal_test(table: &ContingencyTable, direction: TestDirection) -> TestResult {
    let n_star = table.n_star();
    let z = mcnemar_z(table);
    let p_value = if n_star == 0 {
        1.0
    } else {
        match direction {
            TestDirection::Less => std_normal_sf(z),
            TestDirection::Greater => std_normal_cdf(z),
            TestDirection::TwoSided => (2.0 * std_normal_sf(z.abs())).min(1.0),
        }
    };
    TestResult {
        n12: table.n12,
        n21: table.n21,
        n_star,
        z_stat: z,
        p_value,
        method: TestMethod::Normal,
        direction,
    }
}

/// Exact test for `n* <= 10`, normal approximation above.
pub fn select_test(table: &ContingencyTable, direction: TestDirection) -> TestResult {
    if table.n_star() <= EXACT_MAX_DISCORDANT {
        exact_test(table, direction)
    } else {
        normal_test(table, direction)
    }
}

/// Benjamini-Hochberg outcome for one input p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdrDecision {
    /// Position in the input slice.
    pub index: usize,
    pub raw_p: f64,
    /// 1-based rank after a stable ascending sort.
    pub rank: usize,
    pub adjusted_p: f64,
    pub reject: bool,
}

/// Benjamini-Hochberg step-up procedure at level `alpha`.
///
/// Output order matches input order. Ties are ranked by input position,
/// and since the step-up cutoff is the largest admissible rank, every tie
/// at a rejected p-value is rejected too.
pub fn bh_procedure(raw_p: &[f64], alpha: f64) -> Vec<FdrDecision> {
    let m = raw_p.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw_p[a].total_cmp(&raw_p[b]));

    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(pos, &idx)| raw_p[idx] <= (pos + 1) as f64 * alpha / m as f64)
        .map(|(pos, _)| pos + 1)
        .unwrap_or(0);

    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (pos, &idx) in order.iter().enumerate().rev() {
        let candidate = m as f64 * raw_p[idx] / (pos + 1) as f64;
        running = running.min(candidate).min(1.0);
        adjusted[pos] = running;
    }

    let mut out = vec![
        FdrDecision { index: 0, raw_p: 0.0, rank: 0, adjusted_p: 0.0, reject: false };
        m
    ];
    for (pos, &idx) in order.iter().enumerate() {
        out[idx] = FdrDecision {
            index: idx,
            raw_p: raw_p[idx],
            rank: pos + 1,
            adjusted_p: adjusted[pos],
            reject: pos < cutoff,
        };
    }
    out
}
