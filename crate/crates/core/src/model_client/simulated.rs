//! Deterministic simulated agents with configurable token bias.
//!
//! An agent answers correctly with probability `q + Σ deltas`, clamped to
//! `[0, 1]`, where the sum runs over the features present in the prompt
//! and instance. Each (pair, arm, method) gets its own uniform draw.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentRequest, AgentResponse, ClientError};
use crate::corpus::derive_seed;
use crate::generator::{Answer, ProblemInstance, Verdict};
use crate::prompting::{answer_sentence, HintLevel, RenderedPrompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    ContainsLindaExemplar,
    ContainsCelebrity,
    HasHintWeak,
    HasHintStrong,
    ClassicQuantifierPattern,
    RelevantConjunct,
    ReputableFraming,
}

const LINDA_MARKER: &str = "Linda is 31 years old";

/// Features present in a rendered prompt for `instance`.
pub fn detect_features(prompt: &RenderedPrompt, instance: &ProblemInstance) -> Vec<Feature> {
    let mut out = Vec::new();
    if prompt.messages.iter().any(|m| m.content.contains(LINDA_MARKER)) {
        out.push(Feature::ContainsLindaExemplar);
    }
    if instance.meta.entities.get("celebrity").is_some_and(|c| instance.statement.contains(c.as_str())) {
        out.push(Feature::ContainsCelebrity);
    }
    match prompt.method.hint_level() {
        Some(HintLevel::Weak) => out.push(Feature::HasHintWeak),
        Some(HintLevel::Strong) => out.push(Feature::HasHintStrong),
        None => {}
    }
    let q = &instance.meta.quantifiers;
    if !q.is_empty() && q.iter().all(|q| q.text == "All" || q.text == "Some" || q.text == "some") {
        out.push(Feature::ClassicQuantifierPattern);
    }
    if instance.is_conjunction()
        && instance.meta.relevant_conjunct.is_some()
        && instance.meta.conjunct == instance.meta.relevant_conjunct
    {
        out.push(Feature::RelevantConjunct);
    }
    if instance.meta.framing.as_deref() == Some("reputable") {
        out.push(Feature::ReputableFraming);
    }
    out
}

fn default_name() -> String {
    "simulated".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedAgentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    /// Success probability `q` with no features present.
    pub base_success: f64,
    #[serde(default)]
    pub feature_deltas: BTreeMap<Feature, f64>,
    #[serde(default)]
    pub seed: u64,
    /// Probability of an unparseable reply, drawn independently.
    #[serde(default)]
    pub invalid_rate: f64,
}

impl SimulatedAgentSpec {
    pub fn null(q: f64, seed: u64) -> Self {
        Self { name: default_name(), base_success: q, feature_deltas: BTreeMap::new(), seed, invalid_rate: 0.0 }
    }

    pub fn with_delta(mut self, feature: Feature, delta: f64) -> Self {
        self.feature_deltas.insert(feature, delta);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn success_probability(&self, features: &[Feature]) -> f64 {
        let shift: f64 = features.iter().filter_map(|f| self.feature_deltas.get(f)).sum();
        (self.base_success + shift).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedAgent {
    spec: SimulatedAgentSpec,
}

fn unit(seed: u64) -> f64 {
    (seed >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Reply text for a chosen answer.
pub fn reply_for(answer: Answer) -> String {
    answer_sentence(answer)
}

/// The answer a wrong agent gives.
pub fn wrong_answer(gold: Answer, option_count: usize) -> Answer {
    match gold {
        Answer::Option(g) => Answer::Option(if option_count > 1 { (g + 1) % option_count } else { g + 1 }),
        Answer::Verdict(Verdict::Yes) => Answer::NO,
        Answer::Verdict(Verdict::No) => Answer::YES,
    }
}

impl SimulatedAgent {
    pub fn new(spec: SimulatedAgentSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &SimulatedAgentSpec {
        &self.spec
    }

    /// Whether this agent answers correctly, plus whether the reply is
    /// unparseable.
    pub fn outcome(&self, request: &AgentRequest<'_>) -> (bool, bool) {
        let ctx = &request.context;
        let pair_seed = derive_seed(derive_seed(self.spec.seed, &ctx.base_id), &ctx.pair_index.to_string());
        let draw_seed = derive_seed(derive_seed(pair_seed, request.prompt.method.as_str()), ctx.arm.as_str());
        let p = self.spec.success_probability(&detect_features(request.prompt, request.instance));
        let correct = unit(draw_seed) < p;
        let invalid = self.spec.invalid_rate > 0.0 && unit(derive_seed(draw_seed, "invalid")) < self.spec.invalid_rate;
        (correct, invalid)
    }
}

impl Agent for SimulatedAgent {
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    fn respond(&self, request: &AgentRequest<'_>) -> Result<AgentResponse, ClientError> {
        let (correct, invalid) = self.outcome(request);
        let gold = request.instance.gold;
        let text = if invalid {
            "I am unable to decide between these.".to_string()
        } else if correct {
            reply_for(gold)
        } else {
            reply_for(wrong_answer(gold, request.instance.options.len()))
        };
        Ok(AgentResponse { text, from_cache: false, latency: Duration::ZERO, attempt_count: 1 })
    }

    fn parallelism(&self) -> usize {
        usize::MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{FallacyKind, InstanceMeta, QuestionStyle};
    use crate::model_client::PairContext;
    use crate::perturbation::ArmLabel;
    use crate::prompting::{exemplar_library, render, ExemplarChoice, PromptMethod, RenderOptions};

    fn instance(i: usize) -> ProblemInstance {
        ProblemInstance {
            id: format!("x-{i}"),
            fallacy_kind: FallacyKind::ConjV2,
            statement: "Tom was tired. He went home. Which is more likely?".into(),
            options: vec!["Tom slept.".into(), "Tom slept to rest.".into()],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta: InstanceMeta::default(),
        }
    }

    fn accuracy(agent: &SimulatedAgent, exemplar: ExemplarChoice, arm: ArmLabel) -> f64 {
        let lib = exemplar_library();
        let opts = RenderOptions { exemplar: Some(exemplar), ..Default::default() };
        let n = 10_000;
        let correct = (0..n)
            .filter(|&i| {
                let inst = instance(i);
                let prompt = render(&inst, PromptMethod::Os, &lib, &opts).unwrap();
                let req = AgentRequest {
                    prompt: &prompt,
                    instance: &inst,
                    context: PairContext { base_id: inst.id.clone(), pair_index: i, arm },
                };
                agent.respond(&req).unwrap().text == "The answer is (a)."
            })
            .count();
        correct as f64 / n as f64
    }

    #[test]
    fn linda_delta_shifts_accuracy() {
        let agent = SimulatedAgent::new(SimulatedAgentSpec::null(0.5, 3).with_delta(Feature::ContainsLindaExemplar, 0.3));
        let linda = accuracy(&agent, ExemplarChoice::Linda, ArmLabel::Original);
        let bob = accuracy(&agent, ExemplarChoice::Bob, ArmLabel::Perturbed);
        assert!((linda - 0.8).abs() < 0.02, "{linda}");
        assert!((bob - 0.5).abs() < 0.02, "{bob}");
    }

    #[test]
    fn certain_agent_always_gold_and_deterministic() {
        let agent = SimulatedAgent::new(SimulatedAgentSpec::null(1.0, 0));
        assert_eq!(accuracy(&agent, ExemplarChoice::Bob, ArmLabel::Original), 1.0);
        let a = SimulatedAgent::new(SimulatedAgentSpec::null(0.5, 9));
        assert_eq!(accuracy(&a, ExemplarChoice::Bob, ArmLabel::Original), accuracy(&a, ExemplarChoice::Bob, ArmLabel::Original));
    }

    #[test]
    fn clamping() {
        let s = SimulatedAgentSpec::null(0.9, 0).with_delta(Feature::HasHintStrong, 0.5).with_delta(Feature::ContainsCelebrity, -2.0);
        assert_eq!(s.success_probability(&[Feature::HasHintStrong]), 1.0);
        assert_eq!(s.success_probability(&[Feature::ContainsCelebrity]), 0.0);
        assert_eq!(s.success_probability(&[]), 0.9);
    }

    #[test]
    fn wrong_answers() {
        assert_eq!(wrong_answer(Answer::Option(0), 2), Answer::Option(1));
        assert_eq!(wrong_answer(Answer::Option(1), 2), Answer::Option(0));
        assert_eq!(wrong_answer(Answer::NO, 0), Answer::YES);
    }
}
