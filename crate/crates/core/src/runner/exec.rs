//! Rendering, querying and grading both arms of every pair.
//!
//! Work is split into [`prepare`], which renders every prompt once, and
//! [`evaluate`], which queries one agent. Calibration reuses a prepared
//! experiment across many simulated agents.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::plan::{ExperimentPlan, InvalidPolicy};
use super::RunError;
use crate::grading::{grade, GradeOutcome, GradeVerdict};
use crate::model_client::{Agent, AgentRequest, ClientError, PairContext};
use crate::paired_stats::ContingencyTable;
use crate::perturbation::{ArmLabel, Hypothesis, MatchedPair};
use crate::prompting::{exemplar_library, render, ExemplarSet, PromptMethod, RenderOptions, RenderedPrompt};

/// One query of one arm of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub hypothesis: Hypothesis,
    pub model: String,
    pub method: PromptMethod,
    pub pair_index: usize,
    pub base_id: String,
    pub arm: ArmLabel,
    pub instance_id: String,
    /// sha256 of the rendered prompt text.
    pub prompt_digest: String,
    pub response_text: Option<String>,
    pub from_cache: bool,
    pub attempt_count: u32,
    /// Absent when the agent failed.
    pub grade: Option<GradeOutcome>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn outcome(&self) -> ArmOutcome {
        match &self.grade {
            None => ArmOutcome::Failed,
            Some(g) => match g.verdict {
                GradeVerdict::Correct => ArmOutcome::Correct,
                GradeVerdict::Wrong => ArmOutcome::Wrong,
                GradeVerdict::Invalid => ArmOutcome::Invalid,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArmOutcome {
    Correct,
    Wrong,
    Invalid,
    /// The agent never produced a reply.
    Failed,
}

/// Fold pair outcomes into a table. Returns the table and the number of
/// excluded pairs.
pub fn tabulate(outcomes: impl IntoIterator<Item = (ArmOutcome, ArmOutcome)>, policy: InvalidPolicy) -> (ContingencyTable, u64) {
    let mut table = ContingencyTable::default();
    let mut excluded = 0;
    let binary = |o: ArmOutcome| match (o, policy) {
        (ArmOutcome::Correct, _) => Some(true),
        (ArmOutcome::Wrong, _) | (ArmOutcome::Invalid, InvalidPolicy::CountAsWrong) => Some(false),
        _ => None,
    };
    for (orig, pert) in outcomes {
        match (binary(orig), binary(pert)) {
            (Some(a), Some(b)) => table.record(a, b),
            _ => excluded += 1,
        }
    }
    (table, excluded)
}

#[derive(Debug, Clone)]
pub struct PreparedArm {
    pub prompt: RenderedPrompt,
    pub digest: String,
}

#[derive(Debug, Clone)]
pub struct PreparedCell {
    pub method: PromptMethod,
    /// `[original, perturbed]` per pair, in pair order.
    pub arms: Vec<[PreparedArm; 2]>,
}

#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub plan: ExperimentPlan,
    pub pairs: Vec<MatchedPair>,
    pub cells: Vec<PreparedCell>,
}

pub fn prompt_digest(prompt: &RenderedPrompt) -> String {
    hex::encode(Sha256::digest(prompt.text().as_bytes()))
}

/// Render one arm. In hint-leak experiments the original arm uses the
/// hint-free base of the control method.
pub fn render_arm(
    plan: &ExperimentPlan,
    pair: &MatchedPair,
    label: ArmLabel,
    method: PromptMethod,
    library: &ExemplarSet,
) -> Result<RenderedPrompt, RunError> {
    let arm = pair.arm(label);
    let hint_leak = plan.hypothesis == Hypothesis::H6;
    let used = if hint_leak && label == ArmLabel::Original { method.base() } else { method };
    let options = RenderOptions { system_mode: plan.render.system_mode, exemplar: arm.exemplar, allow_control: hint_leak };
    let mut prompt = render(&arm.instance, used, library, &options)?;
    prompt.method = used;
    Ok(prompt)
}

pub fn prepare(plan: &ExperimentPlan, pairs: Vec<MatchedPair>) -> Result<PreparedExperiment, RunError> {
    plan.validate()?;
    if pairs.is_empty() {
        return Err(RunError::Mismatch("paired dataset is empty".into()));
    }
    if let Some(p) = pairs.iter().find(|p| p.hypothesis != plan.hypothesis) {
        return Err(RunError::Mismatch(format!(
            "pair {} belongs to {}, plan tests {}",
            p.base_id, p.hypothesis, plan.hypothesis
        )));
    }
    let library = exemplar_library();
    let mut cells = Vec::with_capacity(plan.methods.len());
    for &method in &plan.methods {
        let arms = pairs
            .par_iter()
            .map(|pair| {
                let make = |label| -> Result<PreparedArm, RunError> {
                    let prompt = render_arm(plan, pair, label, method, &library)?;
                    Ok(PreparedArm { digest: prompt_digest(&prompt), prompt })
                };
                Ok([make(ArmLabel::Original)?, make(ArmLabel::Perturbed)?])
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        cells.push(PreparedCell { method, arms });
    }
    Ok(PreparedExperiment { plan: plan.clone(), pairs, cells })
}

fn fatal(e: &ClientError) -> bool {
    matches!(e, ClientError::AuthMissing(_) | ClientError::Config(_))
}

fn query_arm(
    prepared: &PreparedExperiment,
    agent: &dyn Agent,
    model: &str,
    method: PromptMethod,
    index: usize,
    label: ArmLabel,
    arm: &PreparedArm,
) -> Result<RunRecord, RunError> {
    let pair = &prepared.pairs[index];
    let instance = &pair.arm(label).instance;
    let request = AgentRequest {
        prompt: &arm.prompt,
        instance,
        context: PairContext { base_id: pair.base_id.clone(), pair_index: pair.index, arm: label },
    };
    let mut record = RunRecord {
        hypothesis: pair.hypothesis,
        model: model.to_string(),
        method,
        pair_index: pair.index,
        base_id: pair.base_id.clone(),
        arm: label,
        instance_id: instance.id.clone(),
        prompt_digest: arm.digest.clone(),
        response_text: None,
        from_cache: false,
        attempt_count: 0,
        grade: None,
        error: None,
    };
    match agent.respond(&request) {
        Ok(response) => {
            record.grade = Some(grade(instance, &response.text));
            record.response_text = Some(response.text);
            record.from_cache = response.from_cache;
            record.attempt_count = response.attempt_count;
        }
        Err(e) if fatal(&e) => return Err(RunError::Client(e)),
        Err(e) => {
            tracing::warn!(pair = pair.index, arm = label.as_str(), error = %e, "query failed; pair will be excluded");
            record.error = Some(e.to_string());
        }
    }
    Ok(record)
}

fn with_pool<T: Send>(threads: usize, work: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Query both arms of every pair for every method. Records come back in
/// (method, pair, arm) order regardless of scheduling.
pub fn evaluate(prepared: &PreparedExperiment, agent: &dyn Agent) -> Result<Vec<RunRecord>, RunError> {
    let threads = agent.parallelism().min(prepared.plan.parallelism).max(1);
    let model = agent.name();
    let mut out = Vec::new();
    for cell in &prepared.cells {
        let records = with_pool(threads, || {
            cell.arms
                .par_iter()
                .enumerate()
                .map(|(i, [orig, pert])| {
                    Ok([
                        query_arm(prepared, agent, &model, cell.method, i, ArmLabel::Original, orig)?,
                        query_arm(prepared, agent, &model, cell.method, i, ArmLabel::Perturbed, pert)?,
                    ])
                })
                .collect::<Result<Vec<_>, RunError>>()
        })?;
        out.extend(records.into_iter().flatten());
    }
    Ok(out)
}

/// Contingency table per method without building records. Used where only
/// counts matter, such as calibration.
pub fn evaluate_tables(prepared: &PreparedExperiment, agent: &dyn Agent) -> Result<Vec<(PromptMethod, ContingencyTable, u64)>, RunError> {
    let mut out = Vec::with_capacity(prepared.cells.len());
    for cell in &prepared.cells {
        let mut outcomes = Vec::with_capacity(cell.arms.len());
        for (i, arms) in cell.arms.iter().enumerate() {
            let pair = &prepared.pairs[i];
            let mut pair_outcome = [ArmOutcome::Failed; 2];
            for (slot, label) in [ArmLabel::Original, ArmLabel::Perturbed].into_iter().enumerate() {
                let instance = &pair.arm(label).instance;
                let request = AgentRequest {
                    prompt: &arms[slot].prompt,
                    instance,
                    context: PairContext { base_id: pair.base_id.clone(), pair_index: pair.index, arm: label },
                };
                pair_outcome[slot] = match agent.respond(&request) {
                    Ok(r) => match grade(instance, &r.text).verdict {
                        GradeVerdict::Correct => ArmOutcome::Correct,
                        GradeVerdict::Wrong => ArmOutcome::Wrong,
                        GradeVerdict::Invalid => ArmOutcome::Invalid,
                    },
                    Err(e) if fatal(&e) => return Err(RunError::Client(e)),
                    Err(_) => ArmOutcome::Failed,
                };
            }
            outcomes.push((pair_outcome[0], pair_outcome[1]));
        }
        let (table, excluded) = tabulate(outcomes, prepared.plan.invalid_policy);
        out.push((cell.method, table, excluded));
    }
    Ok(out)
}

pub fn records_to_jsonl(records: &[RunRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<RunRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
