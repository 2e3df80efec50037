//! Rendering problem instances into the messages sent to an agent.
//!
//! A rendered user message has up to four blocks separated by blank lines:
//! the preamble (task instruction, or a hint that begins with it), the
//! exemplars, the problem, and for chain-of-thought methods the
//! step-by-step line.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::generator::{Answer, ProblemInstance, QuestionStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

pub const OPTION_INSTRUCTION: &str =
    "Your task is to answer the following question by explicitly selecting either option (a), (b), etc.";
pub const YES_NO_INSTRUCTION: &str = "Your task is to answer the following question by explicitly saying 'Yes' or 'No'.";
pub const STEP_BY_STEP: &str = "Let us think step by step.";
pub const SYLLOGISM_QUESTION: &str = "Is this logically sound?";

const WEAK_HINT_CONJUNCTION: &str = "Your task is to answer the following question by explicitly selecting either option (a), (b), etc. Please be aware that this is a Linda Problem designed to explore the concept of the conjunction fallacy. Here is the question and let’s think step by step.";

const WEAK_HINT_SYLLOGISM: &str = "Your task is to answer the following question by explicitly saying 'Yes' or 'No'. Please be aware that this is a Linda Problem designed to explore the concept of the syllogistic fallacy.";

const STRONG_HINT_CONJUNCTION: &str = "Your task is to answer the following question by explicitly selecting either option (a), (b), etc. Please aware that this is a Linda Problem designed to explore the concept of the conjunction fallacy. The conjunction fallacy occurs when individuals incorrectly judge the conjunction of two events as more probable than one of the events alone. For instance, many might believe that Linda, who is described as a bright, single woman deeply concerned with discrimination and social justice, is more likely to be both a bank teller and active in the feminist movement than just a bank teller. This judgment violates the basic probability rule: the probability of a conjunction, P(A and B), is always less than or equal to the probabilities of its constituents, P(A) or P(B). This error often stems from the representativeness heuristic, where people estimate the likelihood of an event by how closely it matches their mental prototype. To correctly solve problems like this, you must adopt probabilistic thinking: abstract the problem from its narrative context and focus solely on the probabilistic models. Ignore all extraneous background information and consistently choose the option involving a single event as it statistically holds a higher likelihood than the conjunction of multiple events. Here is the question and let’s think step by step.";

const STRONG_HINT_SYLLOGISM: &str = "Your task is to answer the following question by explicitly saying 'Yes' or 'No'. Please aware that this is a Syllogistic Fallacy Problem. This type of reasoning is known as a syllogism. Pay close attention to quantifiers such as 'All', 'Some', 'No', or similar terms. These terms help define the distribution of properties or elements within the given groups or categories in the premises. Next, assess whether the attribute ascribed in the conclusion necessarily follows from the attributes described in the premises. Consider if the subset described in the second premise encompasses or overlaps with the elements in the first premise that are carried into the conclusion. A common pitfall in syllogistic reasoning is the erroneous assumption that a characteristic of a subset of a group (from the premises) applies to another subset of the same or different group (in the conclusion), without explicit justification. Ignore the background information about the objects and focus on the logical structure of the argument. Here is an example.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintLevel {
    Weak,
    Strong,
}

impl fmt::Display for HintLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HintLevel::Weak => "weak",
            HintLevel::Strong => "strong",
        })
    }
}

impl FromStr for HintLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weak" => Ok(HintLevel::Weak),
            "strong" => Ok(HintLevel::Strong),
            _ => Err(format!("unknown hint level `{s}`")),
        }
    }
}

/// Which family of fallacy a problem belongs to; selects instruction,
/// hint text and exemplars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemFamily {
    Conjunction,
    Syllogistic,
}

impl ProblemFamily {
    pub fn of(instance: &ProblemInstance) -> Self {
        match instance.question_style {
            QuestionStyle::ChooseOption => ProblemFamily::Conjunction,
            QuestionStyle::YesNo => ProblemFamily::Syllogistic,
        }
    }

    pub fn instruction(&self) -> &'static str {
        match self {
            ProblemFamily::Conjunction => OPTION_INSTRUCTION,
            ProblemFamily::Syllogistic => YES_NO_INSTRUCTION,
        }
    }
}

/// Hint paragraph for `(level, family)`. Every hint opens with the
/// family's instruction sentence.
pub fn hint_text(level: HintLevel, family: ProblemFamily) -> &'static str {
    match (level, family) {
        (HintLevel::Weak, ProblemFamily::Conjunction) => WEAK_HINT_CONJUNCTION,
        (HintLevel::Weak, ProblemFamily::Syllogistic) => WEAK_HINT_SYLLOGISM,
        (HintLevel::Strong, ProblemFamily::Conjunction) => STRONG_HINT_CONJUNCTION,
        (HintLevel::Strong, ProblemFamily::Syllogistic) => STRONG_HINT_SYLLOGISM,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMethod {
    Baseline,
    ZsCot,
    Os,
    OsCot,
    Fs,
    FsCot,
    WeakControlZsCot,
    ControlZsCot,
    WeakControlOsCot,
    ControlOsCot,
}

impl PromptMethod {
    pub const ALL: [PromptMethod; 10] = [
        PromptMethod::Baseline,
        PromptMethod::ZsCot,
        PromptMethod::Os,
        PromptMethod::OsCot,
        PromptMethod::Fs,
        PromptMethod::FsCot,
        PromptMethod::WeakControlZsCot,
        PromptMethod::ControlZsCot,
        PromptMethod::WeakControlOsCot,
        PromptMethod::ControlOsCot,
    ];

    pub const STANDARD: [PromptMethod; 6] = [
        PromptMethod::Baseline,
        PromptMethod::ZsCot,
        PromptMethod::Os,
        PromptMethod::OsCot,
        PromptMethod::Fs,
        PromptMethod::FsCot,
    ];

    pub const CONTROL: [PromptMethod; 4] = [
        PromptMethod::WeakControlZsCot,
        PromptMethod::ControlZsCot,
        PromptMethod::WeakControlOsCot,
        PromptMethod::ControlOsCot,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptMethod::Baseline => "baseline",
            PromptMethod::ZsCot => "zs_cot",
            PromptMethod::Os => "os",
            PromptMethod::OsCot => "os_cot",
            PromptMethod::Fs => "fs",
            PromptMethod::FsCot => "fs_cot",
            PromptMethod::WeakControlZsCot => "weak_control_zs_cot",
            PromptMethod::ControlZsCot => "control_zs_cot",
            PromptMethod::WeakControlOsCot => "weak_control_os_cot",
            PromptMethod::ControlOsCot => "control_os_cot",
        }
    }

    pub fn is_cot(&self) -> bool {
        !matches!(self, PromptMethod::Baseline | PromptMethod::Os | PromptMethod::Fs)
    }

    pub fn exemplar_count(&self) -> usize {
        match self {
            PromptMethod::Os | PromptMethod::OsCot | PromptMethod::WeakControlOsCot | PromptMethod::ControlOsCot => 1,
            PromptMethod::Fs | PromptMethod::FsCot => 3,
            _ => 0,
        }
    }

    pub fn hint_level(&self) -> Option<HintLevel> {
        match self {
            PromptMethod::WeakControlZsCot | PromptMethod::WeakControlOsCot => Some(HintLevel::Weak),
            PromptMethod::ControlZsCot | PromptMethod::ControlOsCot => Some(HintLevel::Strong),
            _ => None,
        }
    }

    pub fn is_control(&self) -> bool {
        self.hint_level().is_some()
    }

    /// The hint-free method a control method is built on.
    pub fn base(&self) -> PromptMethod {
        match self {
            PromptMethod::WeakControlZsCot | PromptMethod::ControlZsCot => PromptMethod::ZsCot,
            PromptMethod::WeakControlOsCot | PromptMethod::ControlOsCot => PromptMethod::OsCot,
            other => *other,
        }
    }
}

impl fmt::Display for PromptMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown prompting method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerFormat {
    OptionLetter,
    YesNo,
}

/// A worked example shown before the target problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub key: String,
    pub family: ProblemFamily,
    pub statement: String,
    pub options: Vec<String>,
    pub answer: Answer,
    pub reasoning: String,
}

impl Exemplar {
    /// Exemplar block; `with_reasoning` adds the worked reasoning before
    /// the answer line.
    pub fn render(&self, with_reasoning: bool) -> String {
        let mut out = String::from("Example:\n");
        out.push_str(&problem_block(self.family, &self.statement, &self.options));
        out.push_str("\nAnswer: ");
        if with_reasoning {
            out.push_str(&self.reasoning);
            out.push(' ');
        }
        out.push_str(&answer_sentence(self.answer));
        out
    }
}

/// `The answer is (a).` or `Yes.` / `No.`
pub fn answer_sentence(answer: Answer) -> String {
    match answer {
        Answer::Option(i) => format!("The answer is {answer}.", answer = Answer::Option(i)),
        verdict => format!("{verdict}."),
    }
}

fn problem_block(family: ProblemFamily, statement: &str, options: &[String]) -> String {
    match family {
        ProblemFamily::Conjunction => {
            let mut out = statement.to_string();
            for (i, option) in options.iter().enumerate() {
                out.push_str(&format!("\n({}) {}", Answer::option_letter(i), option));
            }
            out
        }
        ProblemFamily::Syllogistic => format!("{SYLLOGISM_QUESTION}\n{statement}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub linda: Exemplar,
    pub bob: Exemplar,
    pub conjunction: Vec<Exemplar>,
    pub syllogistic: Vec<Exemplar>,
}

impl ExemplarSet {
    pub fn for_family(&self, family: ProblemFamily) -> &[Exemplar] {
        match family {
            ProblemFamily::Conjunction => &self.conjunction,
            ProblemFamily::Syllogistic => &self.syllogistic,
        }
    }
}

fn conj(key: &str, statement: &str, a: &str, b: &str, gold: usize, reasoning: &str) -> Exemplar {
    Exemplar {
        key: key.into(),
        family: ProblemFamily::Conjunction,
        statement: statement.into(),
        options: vec![a.into(), b.into()],
        answer: Answer::Option(gold),
        reasoning: reasoning.into(),
    }
}

fn syll(key: &str, statement: &str, reasoning: &str) -> Exemplar {
    Exemplar {
        key: key.into(),
        family: ProblemFamily::Syllogistic,
        statement: statement.into(),
        options: Vec::new(),
        answer: Answer::NO,
        reasoning: reasoning.into(),
    }
}

/// The Linda and Bob exemplars plus three stub exemplars per family.
///
/// The stub exemplars avoid the name Linda so that only the Linda/Bob
/// comparison carries that token.
pub fn exemplar_library() -> ExemplarSet {
    let conjunction_reasoning = "Option (b) describes the event in option (a) together with an additional event, so it can never be more probable than option (a) alone.";
    ExemplarSet {
        linda: conj(
            "linda",
            "Linda is 31 years old, single, outspoken, and very bright. She majored in philosophy. As a student, she was deeply concerned with issues of discrimination and social justice, and also participated in antinuclear demonstrations. Which is more probable?",
            "Linda is a bank teller.",
            "Linda is a bank teller and is active in the feminist movement.",
            0,
            conjunction_reasoning,
        ),
        bob: conj(
            "bob",
            "Bob is 29 years old, deeply passionate about environmental conservation, and volunteers his weekends at local park clean-ups. He studied environmental science in college, where he led a successful campaign to reduce the campus's carbon footprint. Bob is also an avid cyclist and promotes sustainable living practices whenever possible. Based on this information, which is more possible?",
            "Bob works for a renewable energy company and is an active member of a local environmental advocacy group.",
            "Bob works for a renewable energy company.",
            1,
            "Option (a) describes the event in option (b) together with an additional event, so it can never be more probable than option (b) alone.",
        ),
        conjunction: vec![
            conj(
                "conj-anselm",
                "Anselm is 45 years old and spends every weekend restoring vintage motorcycles in his garage. He studied mechanical engineering and often helps neighbors repair their cars. Which is more probable?",
                "Anselm is an accountant.",
                "Anselm is an accountant and is a member of a classic motorcycle club.",
                0,
                conjunction_reasoning,
            ),
            conj(
                "conj-ottilie",
                "Ottilie trained for months for the city marathon. On race morning she woke up with a sprained ankle. Which is more likely?",
                "Ottilie withdrew from the race because her ankle was too painful to run on.",
                "Ottilie withdrew from the race.",
                1,
                "Option (a) describes the event in option (b) together with an additional event, so it can never be more probable than option (b) alone.",
            ),
            conj(
                "conj-casimir",
                "Casimir, a 38-year-old man, was diagnosed with influenza last week. Which one is more likely?",
                "fever",
                "fever and muscle aches",
                0,
                conjunction_reasoning,
            ),
        ],
        syllogistic: vec![
            syll(
                "syll-kettles",
                "All kettles are appliances. Some appliances are energy efficient. Therefore, some kettles are energy efficient.",
                "The premises only say that some appliances are energy efficient. Those appliances need not overlap with the set of kettles, so the conclusion does not follow.",
            ),
            syll(
                "syll-ferns",
                "All ferns are plants. Some plants grow in deserts. Therefore, some ferns grow in deserts.",
                "The plants that grow in deserts could all be something other than ferns, since the second premise never connects that subset to ferns. The conclusion does not follow.",
            ),
            syll(
                "syll-sardines",
                "All sardines are fish. Some fish live in freshwater lakes. Therefore, some sardines live in freshwater lakes.",
                "Knowing that a subset of fish lives in freshwater lakes says nothing about whether that subset contains any sardines, so the conclusion does not follow.",
            ),
        ],
    }
}

/// Which one-shot exemplar to use in place of the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarChoice {
    Linda,
    Bob,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Put the preamble in a system message instead of the user message.
    #[serde(default)]
    pub system_mode: bool,
    /// Replace the one-shot exemplar.
    #[serde(default)]
    pub exemplar: Option<ExemplarChoice>,
    /// Control methods are only meaningful in hint-leak experiments.
    #[serde(default)]
    pub allow_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub messages: Vec<Message>,
    pub answer_format: AnswerFormat,
    pub instance_id: String,
    pub method: PromptMethod,
}

impl RenderedPrompt {
    /// All message contents joined by blank lines.
    pub fn text(&self) -> String {
        self.messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("method {method} needs {needed} exemplars but only {available} are available")]
    InsufficientExemplars { method: PromptMethod, needed: usize, available: usize },
    #[error("control method {0} is only valid in hint-leak experiments")]
    ControlNotAllowed(PromptMethod),
    #[error("exemplar override requires a one-shot method, got {0}")]
    ExemplarOverride(PromptMethod),
}

/// Preamble for a family and optional hint level.
pub fn preamble(family: ProblemFamily, hint: Option<HintLevel>) -> &'static str {
    match hint {
        Some(level) => hint_text(level, family),
        None => family.instruction(),
    }
}

/// Render `instance` under `method`.
pub fn render(
    instance: &ProblemInstance,
    method: PromptMethod,
    exemplars: &ExemplarSet,
    options: &RenderOptions,
) -> Result<RenderedPrompt, PromptError> {
    if method.is_control() && !options.allow_control {
        return Err(PromptError::ControlNotAllowed(method));
    }
    let family = ProblemFamily::of(instance);
    let needed = method.exemplar_count();
    let chosen: Vec<&Exemplar> = match options.exemplar {
        Some(choice) => {
            if needed != 1 {
                return Err(PromptError::ExemplarOverride(method));
            }
            vec![match choice {
                ExemplarChoice::Linda => &exemplars.linda,
                ExemplarChoice::Bob => &exemplars.bob,
            }]
        }
        None => {
            let pool = exemplars.for_family(family);
            if pool.len() < needed {
                return Err(PromptError::InsufficientExemplars { method, needed, available: pool.len() });
            }
            pool.iter().take(needed).collect()
        }
    };

    let head = preamble(family, method.hint_level());
    let mut body: Vec<String> = chosen.iter().map(|e| e.render(method.is_cot())).collect();
    body.push(problem_block(family, &instance.statement, &instance.options));
    if method.is_cot() {
        body.push(STEP_BY_STEP.to_string());
    }
    let messages = if options.system_mode {
        vec![Message::system(head), Message::user(body.join("\n\n"))]
    } else {
        let mut all = vec![head.to_string()];
        all.extend(body);
        vec![Message::user(all.join("\n\n"))]
    };
    Ok(RenderedPrompt {
        messages,
        answer_format: match family {
            ProblemFamily::Conjunction => AnswerFormat::OptionLetter,
            ProblemFamily::Syllogistic => AnswerFormat::YesNo,
        },
        instance_id: instance.id.clone(),
        method,
    })
}

/// Serialize prompts one per line for audit.
pub fn dump_prompts<'a>(prompts: impl IntoIterator<Item = &'a RenderedPrompt>) -> String {
    prompts
        .into_iter()
        .map(|p| serde_json::to_string(p).expect("prompts serialize") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{syllogism_statement, FallacyKind, InstanceMeta};

    /// A generated problem must never coincide with, or borrow the
    /// entities of, a stub exemplar shown alongside it.
    #[test]
    fn stub_exemplars_avoid_pool_entities() {
        use crate::corpus::{Corpus, PoolKind};
        let corpus = Corpus::bundled();
        let lib = exemplar_library();
        let words = |text: &str| -> Vec<String> {
            text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
        };
        let stub_words: Vec<String> = lib
            .conjunction
            .iter()
            .chain(&lib.syllogistic)
            .flat_map(|e| words(&e.statement).into_iter().take(2))
            .collect();
        for kind in [PoolKind::Object, PoolKind::GenericName] {
            for entry in corpus.pool(kind).entries() {
                let value = entry.value.to_lowercase();
                assert!(!stub_words.contains(&value), "{value} appears in a stub exemplar");
            }
        }
    }

    fn conj_instance() -> ProblemInstance {
        ProblemInstance {
            id: "t-1".into(),
            fallacy_kind: FallacyKind::ConjV1,
            statement: "Kai is a community leader. Which is more probable?".into(),
            options: vec!["Kai is a law enforcement worker.".into(), "Kai is a law enforcement worker and surfs.".into()],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta: InstanceMeta::default(),
        }
    }

    fn syll_instance() -> ProblemInstance {
        let (statement, quantifiers) = syllogism_statement("roses", "flowers", "fade quickly");
        ProblemInstance {
            id: "t-2".into(),
            fallacy_kind: FallacyKind::Syllogism,
            statement,
            options: vec![],
            question_style: QuestionStyle::YesNo,
            gold: Answer::NO,
            meta: InstanceMeta { quantifiers, ..Default::default() },
        }
    }

    fn instruction_count(text: &str) -> usize {
        text.matches(OPTION_INSTRUCTION).count() + text.matches(YES_NO_INSTRUCTION).count()
    }

    #[test]
    fn baseline_conjunction() {
        let p = render(&conj_instance(), PromptMethod::Baseline, &exemplar_library(), &RenderOptions::default()).unwrap();
        let text = p.text();
        assert!(text.contains("option (a), (b)"));
        assert!(!text.contains("Example:"));
        assert!(text.ends_with("(b) Kai is a law enforcement worker and surfs."));
        assert_eq!(p.answer_format, AnswerFormat::OptionLetter);
        assert_eq!(p.messages.len(), 1);
        assert_eq!(p.messages[0].role, Role::User);
    }

    #[test]
    fn syllogism_zs_cot() {
        let p = render(&syll_instance(), PromptMethod::ZsCot, &exemplar_library(), &RenderOptions::default()).unwrap();
        let text = p.text();
        assert!(text.contains("'Yes' or 'No'"));
        assert!(text.ends_with(STEP_BY_STEP));
        assert!(text.contains("Is this logically sound?\nAll roses are flowers."));
    }

    #[test]
    fn exemplar_counts_and_single_instruction() {
        let lib = exemplar_library();
        let opts = RenderOptions { allow_control: true, ..Default::default() };
        for inst in [conj_instance(), syll_instance()] {
            for method in PromptMethod::ALL {
                let p = render(&inst, method, &lib, &opts).unwrap();
                let text = p.text();
                assert_eq!(text.matches("Example:").count(), method.exemplar_count(), "{method}");
                assert_eq!(instruction_count(&text), 1, "{method}");
                assert!(!text.contains("Linda is 31"), "{method}");
                assert_eq!(p, render(&inst, method, &lib, &opts).unwrap());
            }
        }
    }

    #[test]
    fn control_requires_permission() {
        let err = render(&conj_instance(), PromptMethod::ControlZsCot, &exemplar_library(), &RenderOptions::default());
        assert_eq!(err, Err(PromptError::ControlNotAllowed(PromptMethod::ControlZsCot)));
    }

    #[test]
    fn insufficient_exemplars() {
        let mut lib = exemplar_library();
        lib.conjunction.truncate(2);
        let err = render(&conj_instance(), PromptMethod::Fs, &lib, &RenderOptions::default()).unwrap_err();
        assert!(matches!(err, PromptError::InsufficientExemplars { needed: 3, available: 2, .. }));
    }

    #[test]
    fn hints_open_with_instruction() {
        for level in [HintLevel::Weak, HintLevel::Strong] {
            for family in [ProblemFamily::Conjunction, ProblemFamily::Syllogistic] {
                let h = hint_text(level, family);
                assert!(h.starts_with(family.instruction()));
                assert!(h[family.instruction().len()..].starts_with(' '));
            }
        }
        assert!(hint_text(HintLevel::Weak, ProblemFamily::Conjunction).contains("Please be aware that this is a Linda Problem"));
        assert!(hint_text(HintLevel::Strong, ProblemFamily::Syllogistic)
            .contains("Pay close attention to quantifiers such as 'All', 'Some', 'No'"));
        assert!(hint_text(HintLevel::Strong, ProblemFamily::Conjunction).contains("adopt probabilistic thinking"));
    }

    #[test]
    fn linda_and_bob() {
        let lib = exemplar_library();
        assert_eq!(lib.linda.options[0], "Linda is a bank teller.");
        assert_eq!(lib.linda.answer, Answer::Option(0));
        assert!(lib.bob.statement.contains("Bob is 29 years old"));
        assert!(lib.bob.options.iter().all(|o| o.contains("renewable energy company")));
        assert_eq!(lib.bob.options[lib.bob.answer_index()], "Bob works for a renewable energy company.");
        for e in lib.syllogistic.iter() {
            assert_eq!(e.answer, Answer::NO);
            assert!(e.reasoning.contains("need not overlap") || e.reasoning.contains("subset"));
        }
        let opts = RenderOptions { exemplar: Some(ExemplarChoice::Linda), ..Default::default() };
        let p = render(&conj_instance(), PromptMethod::Os, &lib, &opts).unwrap();
        assert!(p.text().contains("Linda is 31 years old"));
        assert!(p.text().contains("Answer: The answer is (a)."));
    }

    #[test]
    fn system_mode_splits_preamble() {
        let opts = RenderOptions { system_mode: true, ..Default::default() };
        let p = render(&conj_instance(), PromptMethod::Os, &exemplar_library(), &opts).unwrap();
        assert_eq!(p.messages.len(), 2);
        assert_eq!(p.messages[0].role, Role::System);
        assert_eq!(p.messages[0].content, OPTION_INSTRUCTION);
    }

    impl Exemplar {
        fn answer_index(&self) -> usize {
            match self.answer {
                Answer::Option(i) => i,
                _ => panic!(),
            }
        }
    }
}
