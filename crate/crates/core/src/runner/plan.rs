//! Experiment plans and their configuration file form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::generator::GenerationConfig;
use crate::model_client::AgentSpec;
use crate::paired_stats::TestDirection;
use crate::perturbation::{Hypothesis, PairOptions};
use crate::prompting::{PromptMethod, RenderOptions};

/// Which result rows share one Benjamini-Hochberg family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BhFamily {
    /// Every (model, method) cell of one hypothesis.
    #[default]
    PerHypothesisGrid,
    /// Each model's methods separately.
    PerModel,
}

/// How an unparseable reply enters the contingency table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidPolicy {
    /// Drop the whole pair and count it as excluded.
    #[default]
    ExcludePair,
    /// Treat the reply as a wrong answer.
    CountAsWrong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub agents: Vec<AgentSpec>,
    pub methods: Vec<PromptMethod>,
    pub direction: TestDirection,
    pub alpha: f64,
    pub seed: u64,
    pub bh_family: BhFamily,
    pub invalid_policy: InvalidPolicy,
    pub pair_options: PairOptions,
    pub render: RenderOptions,
    /// Upper bound on concurrent queries per agent.
    pub parallelism: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error("cannot read config {path}: {message}")]
    Config { path: String, message: String },
}

impl ExperimentPlan {
    /// Defaults for a hypothesis: standard n, direction and methods,
    /// alpha 0.05, no agents.
    pub fn for_hypothesis(hypothesis: Hypothesis) -> Self {
        Self {
            hypothesis,
            n: hypothesis.default_n(),
            agents: Vec::new(),
            methods: hypothesis.allowed_methods(),
            direction: hypothesis.default_direction(),
            alpha: 0.05,
            seed: 0,
            bh_family: BhFamily::default(),
            invalid_policy: InvalidPolicy::default(),
            pair_options: PairOptions::default(),
            render: RenderOptions::default(),
            parallelism: 8,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Invalid(m));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.methods.is_empty() {
            return bad("no prompting methods".into());
        }
        let allowed = self.hypothesis.allowed_methods();
        for m in &self.methods {
            if !allowed.contains(m) {
                return bad(format!("method {m} is not valid for {}", self.hypothesis));
            }
        }
        if self.parallelism < 1 {
            return bad("parallelism must be at least 1".into());
        }
        Ok(())
    }
}

/// Configuration file: every field optional, with an optional generator
/// endpoint for non-offline dataset generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub hypothesis: Option<Hypothesis>,
    pub n: Option<usize>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    pub methods: Option<Vec<PromptMethod>>,
    pub direction: Option<TestDirection>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub bh_family: Option<BhFamily>,
    pub invalid_policy: Option<InvalidPolicy>,
    pub pair_options: Option<PairOptions>,
    pub render: Option<RenderOptions>,
    pub parallelism: Option<usize>,
    pub generator: Option<GenerationConfig>,
}

impl PlanConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        let path = path.as_ref();
        let err = |message: String| PlanError::Config { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::parse(&text).map_err(|e| err(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Fill unspecified fields from the hypothesis defaults.
    pub fn into_plan(self, hypothesis: Option<Hypothesis>) -> Result<ExperimentPlan, PlanError> {
        let h = hypothesis
            .or(self.hypothesis)
            .ok_or_else(|| PlanError::Invalid("no hypothesis given".into()))?;
        let mut plan = ExperimentPlan::for_hypothesis(h);
        plan.agents = self.agents;
        if let Some(v) = self.n {
            plan.n = v;
        }
        if let Some(v) = self.methods {
            plan.methods = v;
        }
        if let Some(v) = self.direction {
            plan.direction = v;
        }
        if let Some(v) = self.alpha {
            plan.alpha = v;
        }
        if let Some(v) = self.seed {
            plan.seed = v;
        }
        if let Some(v) = self.bh_family {
            plan.bh_family = v;
        }
        if let Some(v) = self.invalid_policy {
            plan.invalid_policy = v;
        }
        if let Some(v) = self.pair_options {
            plan.pair_options = v;
        }
        if let Some(v) = self.render {
            plan.render = v;
        }
        if let Some(v) = self.parallelism {
            plan.parallelism = v;
        }
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_client::Feature;

    #[test]
    fn defaults_follow_hypothesis() {
        let p = ExperimentPlan::for_hypothesis(Hypothesis::H5);
        assert_eq!((p.n, p.direction, p.alpha), (200, TestDirection::TwoSided, 0.05));
        p.validate().unwrap();
        let mut bad = ExperimentPlan::for_hypothesis(Hypothesis::H1);
        bad.methods = vec![PromptMethod::ControlZsCot];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn toml_config() {
        let text = r#"
            hypothesis = "H2"
            n = 50
            seed = 9
            direction = "greater"
            methods = ["os"]
            bh_family = "per_model"

            [[agents]]
            type = "simulated"
            name = "biased"
            base_success = 0.5
            [agents.feature_deltas]
            contains_linda_exemplar = 0.3

            [[agents]]
            type = "remote"
            base_url = "http://localhost:8080/v1"
            model_name = "local"
            parallelism = 2
        "#;
        let plan = PlanConfig::parse(text).unwrap().into_plan(None).unwrap();
        plan.validate().unwrap();
        assert_eq!(plan.n, 50);
        assert_eq!(plan.bh_family, BhFamily::PerModel);
        assert_eq!(plan.agents.len(), 2);
        match &plan.agents[0] {
            AgentSpec::Simulated(s) => assert_eq!(s.feature_deltas[&Feature::ContainsLindaExemplar], 0.3),
            other => panic!("{other:?}"),
        }
        match &plan.agents[1] {
            AgentSpec::Remote(c) => assert_eq!((c.parallelism, c.temperature), (2, 0.0)),
            other => panic!("{other:?}"),
        }
        assert!(PlanConfig::parse("bogus = 1").is_err());
    }
}
