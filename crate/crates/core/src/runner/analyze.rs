//! From run records to one tested row per (model, method) cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::exec::{tabulate, ArmOutcome, RunRecord};
use super::plan::{BhFamily, ExperimentPlan, InvalidPolicy};
use super::RunError;
use crate::paired_stats::{bh_procedure, select_test, ContingencyTable, TestDirection};
use crate::perturbation::ArmLabel;
use crate::prompting::PromptMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub prompting_method: String,
    pub n12: u64,
    pub n21: u64,
    pub n_star: u64,
    pub z_stat: f64,
    /// Raw p-value of the selected test.
    pub p_value: f64,
    /// Benjamini-Hochberg decision within the row's family.
    pub reject: bool,
    pub p_value_adjusted: f64,
    pub excluded_pairs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    pub model: String,
    pub method: PromptMethod,
    pub table: ContingencyTable,
    pub excluded: u64,
}

/// Group records by (model, method) in order of first appearance and fold
/// each group into a contingency table.
pub fn tables_from_records(records: &[RunRecord], policy: InvalidPolicy) -> Result<Vec<CellTable>, RunError> {
    type Arms = [Option<ArmOutcome>; 2];
    let mut order: Vec<(String, PromptMethod)> = Vec::new();
    let mut groups: Vec<BTreeMap<usize, Arms>> = Vec::new();
    for r in records {
        let key = (r.model.clone(), r.method);
        let slot = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                groups.push(BTreeMap::new());
                order.len() - 1
            }
        };
        let arms = groups[slot].entry(r.pair_index).or_default();
        let i = match r.arm {
            ArmLabel::Original => 0,
            ArmLabel::Perturbed => 1,
        };
        if arms[i].replace(r.outcome()).is_some() {
            return Err(RunError::Records(format!(
                "duplicate {} record for pair {} ({}, {})",
                r.arm.as_str(),
                r.pair_index,
                r.model,
                r.method
            )));
        }
    }
    order
        .into_iter()
        .zip(groups)
        .map(|((model, method), pairs)| {
            let mut outcomes = Vec::with_capacity(pairs.len());
            for (index, arms) in pairs {
                match arms {
                    [Some(a), Some(b)] => outcomes.push((a, b)),
                    _ => {
                        return Err(RunError::Records(format!("pair {index} of ({model}, {method}) is missing an arm")))
                    }
                }
            }
            let (table, excluded) = tabulate(outcomes, policy);
            Ok(CellTable { model, method, table, excluded })
        })
        .collect()
}

/// Test every cell and apply Benjamini-Hochberg within each family.
pub fn rows_from_tables(cells: &[CellTable], direction: TestDirection, alpha: f64, family: BhFamily) -> Vec<ResultRow> {
    let tests: Vec<_> = cells.iter().map(|c| select_test(&c.table, direction)).collect();
    let mut rows: Vec<ResultRow> = cells
        .iter()
        .zip(&tests)
        .map(|(c, t)| ResultRow {
            model: c.model.clone(),
            prompting_method: c.method.as_str().to_string(),
            n12: t.n12,
            n21: t.n21,
            n_star: t.n_star,
            z_stat: t.z_stat,
            p_value: t.p_value,
            reject: false,
            p_value_adjusted: t.p_value,
            excluded_pairs: c.excluded,
        })
        .collect();

    let families: Vec<Vec<usize>> = match family {
        BhFamily::PerHypothesisGrid => vec![(0..cells.len()).collect()],
        BhFamily::PerModel => {
            let mut by_model: Vec<(&str, Vec<usize>)> = Vec::new();
            for (i, c) in cells.iter().enumerate() {
                match by_model.iter_mut().find(|(m, _)| *m == c.model) {
                    Some((_, members)) => members.push(i),
                    None => by_model.push((&c.model, vec![i])),
                }
            }
            by_model.into_iter().map(|(_, members)| members).collect()
        }
    };
    for members in families {
        let raw: Vec<f64> = members.iter().map(|&i| tests[i].p_value).collect();
        for (d, &i) in bh_procedure(&raw, alpha).iter().zip(&members) {
            rows[i].reject = d.reject;
            rows[i].p_value_adjusted = d.adjusted_p;
        }
    }
    rows
}

/// Tabulate and test records under the plan's direction, alpha, family
/// and invalid-reply policy.
pub fn analyze(records: &[RunRecord], plan: &ExperimentPlan) -> Result<Vec<ResultRow>, RunError> {
    if let Some(r) = records.iter().find(|r| r.hypothesis != plan.hypothesis) {
        return Err(RunError::Records(format!("record for {} in a {} analysis", r.hypothesis, plan.hypothesis)));
    }
    let cells = tables_from_records(records, plan.invalid_policy)?;
    Ok(rows_from_tables(&cells, plan.direction, plan.alpha, plan.bh_family))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::{GradeOutcome, GradeVerdict};
    use crate::perturbation::Hypothesis;

    fn record(model: &str, method: PromptMethod, pair: usize, arm: ArmLabel, verdict: Option<GradeVerdict>) -> RunRecord {
        RunRecord {
            hypothesis: Hypothesis::H1,
            model: model.into(),
            method,
            pair_index: pair,
            base_id: format!("b{pair}"),
            arm,
            instance_id: format!("b{pair}"),
            prompt_digest: String::new(),
            response_text: None,
            from_cache: false,
            attempt_count: 1,
            grade: verdict.map(|verdict| GradeOutcome { verdict, extracted: None, rule_fired: "test".into() }),
            error: None,
        }
    }

    #[test]
    fn tables_and_families() {
        use GradeVerdict::*;
        let mut records = Vec::new();
        // model m1: 12 pairs correct -> wrong, model m2: balanced
        for i in 0..12 {
            records.push(record("m1", PromptMethod::Baseline, i, ArmLabel::Original, Some(Correct)));
            records.push(record("m1", PromptMethod::Baseline, i, ArmLabel::Perturbed, Some(Wrong)));
        }
        for i in 0..12 {
            let (a, b) = if i % 2 == 0 { (Correct, Wrong) } else { (Wrong, Correct) };
            records.push(record("m2", PromptMethod::Baseline, i, ArmLabel::Perturbed, Some(b)));
            records.push(record("m2", PromptMethod::Baseline, i, ArmLabel::Original, Some(a)));
        }
        records.push(record("m2", PromptMethod::Baseline, 12, ArmLabel::Original, Some(Invalid)));
        records.push(record("m2", PromptMethod::Baseline, 12, ArmLabel::Perturbed, None));

        let cells = tables_from_records(&records, InvalidPolicy::ExcludePair).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!((cells[0].table.n12, cells[0].table.n21), (12, 0));
        assert_eq!((cells[1].table.n12, cells[1].table.n21, cells[1].excluded), (6, 6, 1));

        let rows = rows_from_tables(&cells, TestDirection::Greater, 0.05, BhFamily::PerHypothesisGrid);
        assert!(rows[0].reject);
        assert!(!rows[1].reject);
        assert!((rows[0].z_stat + 12f64.sqrt()).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.p_value_adjusted >= r.p_value));

        let per_model = rows_from_tables(&cells, TestDirection::Greater, 0.05, BhFamily::PerModel);
        assert_eq!(per_model[0].p_value_adjusted, per_model[0].p_value);
    }

    #[test]
    fn inconsistent_records() {
        let dup = vec![
            record("m", PromptMethod::Os, 0, ArmLabel::Original, Some(GradeVerdict::Correct)),
            record("m", PromptMethod::Os, 0, ArmLabel::Original, Some(GradeVerdict::Correct)),
        ];
        assert!(matches!(tables_from_records(&dup, InvalidPolicy::ExcludePair), Err(RunError::Records(_))));
        let missing = vec![record("m", PromptMethod::Os, 0, ArmLabel::Original, Some(GradeVerdict::Correct))];
        assert!(matches!(tables_from_records(&missing, InvalidPolicy::ExcludePair), Err(RunError::Records(_))));
    }
}
