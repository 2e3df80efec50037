//! Monte Carlo calibration and power of the whole testing pipeline.
//!
//! The paired dataset stays fixed across replications; each replication
//! gets a simulated agent with a fresh seed and goes through rendering,
//! grading, tabulation, the selected test and Benjamini-Hochberg exactly as
//! a real run would.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analyze::{rows_from_tables, CellTable};
use super::exec::{evaluate_tables, prepare, PreparedExperiment};
use super::plan::{ExperimentPlan, PlanError};
use super::RunError;
use crate::corpus::{derive_seed, Corpus};
use crate::generator::{Generator, StubCompleter};
use crate::model_client::{SimulatedAgent, SimulatedAgentSpec};
use crate::perturbation::build_pairs;

/// Smallest replication count accepted.
pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub prompting_method: String,
    /// Fraction of replications whose row was rejected.
    pub rejection_rate: f64,
    pub mean_z: f64,
    pub mean_n_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub agent: String,
    pub hypothesis: String,
    pub n: usize,
    pub alpha: f64,
    pub replications: usize,
    pub cells: Vec<CalibrationCell>,
}

impl CalibrationReport {
    pub fn cell(&self, method: &str) -> Option<&CalibrationCell> {
        self.cells.iter().find(|c| c.prompting_method == method)
    }

    /// Largest rejection rate over all cells.
    pub fn max_rejection_rate(&self) -> f64 {
        self.cells.iter().map(|c| c.rejection_rate).fold(0.0, f64::max)
    }
}

/// Agent seed for replication `r`.
pub fn replication_seed(base: u64, r: usize) -> u64 {
    derive_seed(derive_seed(base, "replication"), &r.to_string())
}

/// Build the plan's paired dataset offline and estimate per-method
/// rejection rates over `replications` runs.
pub fn simulate_calibration(
    spec: &SimulatedAgentSpec,
    plan: &ExperimentPlan,
    replications: usize,
) -> Result<CalibrationReport, RunError> {
    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let generator = Generator::new(&corpus, &completer);
    let pairs = build_pairs(plan.hypothesis, plan.n, plan.seed, &generator, &plan.pair_options)?;
    let prepared = prepare(plan, pairs)?;
    simulate_prepared(spec, &prepared, replications)
}

/// Calibration over an already prepared experiment.
pub fn simulate_prepared(
    spec: &SimulatedAgentSpec,
    prepared: &PreparedExperiment,
    replications: usize,
) -> Result<CalibrationReport, RunError> {
    if replications < MIN_REPLICATIONS {
        return Err(PlanError::Invalid(format!("need at least {MIN_REPLICATIONS} replications, got {replications}")).into());
    }
    let plan = &prepared.plan;
    let per_rep = (0..replications)
        .into_par_iter()
        .map(|r| {
            let agent = SimulatedAgent::new(spec.clone().with_seed(replication_seed(spec.seed, r)));
            let cells: Vec<CellTable> = evaluate_tables(prepared, &agent)?
                .into_iter()
                .map(|(method, table, excluded)| CellTable { model: spec.name.clone(), method, table, excluded })
                .collect();
            Ok(rows_from_tables(&cells, plan.direction, plan.alpha, plan.bh_family))
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let reps = replications as f64;
    let cells = prepared
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let rows = per_rep.iter().map(|rows| &rows[i]);
            let (mut rejected, mut z, mut n_star) = (0usize, 0.0, 0.0);
            for row in rows {
                rejected += usize::from(row.reject);
                z += row.z_stat;
                n_star += row.n_star as f64;
            }
            CalibrationCell {
                prompting_method: cell.method.as_str().to_string(),
                rejection_rate: rejected as f64 / reps,
                mean_z: z / reps,
                mean_n_star: n_star / reps,
            }
        })
        .collect();
    Ok(CalibrationReport {
        agent: spec.name.clone(),
        hypothesis: plan.hypothesis.to_string(),
        n: prepared.pairs.len(),
        alpha: plan.alpha,
        replications,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::Hypothesis;

    #[test]
    fn too_few_replications() {
        let plan = ExperimentPlan { n: 10, ..ExperimentPlan::for_hypothesis(Hypothesis::H4) };
        let err = simulate_calibration(&SimulatedAgentSpec::null(0.5, 1), &plan, 10).unwrap_err();
        assert!(matches!(err, RunError::Plan(_)));
    }

    #[test]
    fn null_agent_small_run() {
        let plan = ExperimentPlan { n: 40, ..ExperimentPlan::for_hypothesis(Hypothesis::H4) };
        let report = simulate_calibration(&SimulatedAgentSpec::null(0.6, 3), &plan, 100).unwrap();
        assert_eq!(report.cells.len(), plan.methods.len());
        assert!(report.max_rejection_rate() < 0.2, "{report:?}");
    }
}
