//! Running a plan end to end: render, query, grade, tabulate, test.

pub mod analyze;
pub mod exec;
pub mod plan;
pub mod report;
pub mod simulate;

use crate::generator::Generator;
use crate::model_client::ClientError;
use crate::perturbation::{build_pairs, DatasetError, MatchedPair};
use crate::prompting::PromptError;

pub use analyze::{analyze, tables_from_records, CellTable, ResultRow};
pub use exec::{evaluate, prepare, PreparedExperiment, RunRecord};
pub use plan::{BhFamily, ExperimentPlan, InvalidPolicy, PlanConfig, PlanError};
pub use report::{parse_csv, report, ReportError, ReportFormat};
pub use simulate::{simulate_calibration, CalibrationCell, CalibrationReport};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("dataset does not match plan: {0}")]
    Mismatch(String),
    #[error("inconsistent run records: {0}")]
    Records(String),
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub records: Vec<RunRecord>,
}

/// Query every agent in the plan on the given pairs and test the results.
/// With `offline` set, remote agents answer only from their caches.
pub fn run_experiment(plan: &ExperimentPlan, pairs: Vec<MatchedPair>, offline: bool) -> Result<ExperimentOutput, RunError> {
    if plan.agents.is_empty() {
        return Err(PlanError::Invalid("plan has no agents".into()).into());
    }
    let prepared = prepare(plan, pairs)?;
    let mut records = Vec::new();
    for spec in &plan.agents {
        let agent = spec.build(offline)?;
        tracing::info!(agent = %agent.name(), hypothesis = %plan.hypothesis, "querying");
        records.extend(evaluate(&prepared, agent.as_ref())?);
    }
    let rows = analyze(&records, plan)?;
    Ok(ExperimentOutput { rows, records })
}

/// Generate the paired dataset the plan calls for, then run it.
pub fn generate_and_run(plan: &ExperimentPlan, generator: &Generator, offline: bool) -> Result<ExperimentOutput, RunError> {
    let pairs = build_pairs(plan.hypothesis, plan.n, plan.seed, generator, &plan.pair_options)?;
    run_experiment(plan, pairs, offline)
}
