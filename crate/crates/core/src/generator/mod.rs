//! Synthetic conjunction-fallacy and syllogism problems.
//!
//! Each instance is fully determined by `(kind, dataset seed, index)` and
//! the completer. With the [`StubCompleter`] generation is offline and
//! byte-reproducible.

pub mod completer;
pub mod parse;
pub mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use completer::{CompletionError, CompletionRequest, CompletionTask, RemoteCompleter, StubCompleter, TextCompleter};

use crate::corpus::{derive_seed, Corpus, PoolEntry, PoolKind, SeededSampler};
use crate::prompting::Message;

/// Attempts per completion before the instance is abandoned.
pub const MAX_COMPLETION_ATTEMPTS: u32 = 3;

/// Endpoint used for remote (non-stub) generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub endpoint: crate::model_client::EndpointConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallacyKind {
    ConjV1,
    ConjV2,
    ConjV3,
    ConjV4,
    ConjV5,
    ConjV6,
    Syllogism,
}

impl FallacyKind {
    pub const ALL: [FallacyKind; 7] = [
        FallacyKind::ConjV1,
        FallacyKind::ConjV2,
        FallacyKind::ConjV3,
        FallacyKind::ConjV4,
        FallacyKind::ConjV5,
        FallacyKind::ConjV6,
        FallacyKind::Syllogism,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FallacyKind::ConjV1 => "conj_v1",
            FallacyKind::ConjV2 => "conj_v2",
            FallacyKind::ConjV3 => "conj_v3",
            FallacyKind::ConjV4 => "conj_v4",
            FallacyKind::ConjV5 => "conj_v5",
            FallacyKind::ConjV6 => "conj_v6",
            FallacyKind::Syllogism => "syllogism",
        }
    }

    pub fn is_conjunction(&self) -> bool {
        !matches!(self, FallacyKind::Syllogism)
    }

    pub fn connector(&self) -> Option<Connector> {
        match self {
            FallacyKind::ConjV2 => Some(Connector::To),
            FallacyKind::ConjV3 => Some(Connector::Because),
            FallacyKind::ConjV4 => Some(Connector::SoThat),
            _ => None,
        }
    }
}

impl fmt::Display for FallacyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FallacyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FallacyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown fallacy kind `{s}`"))
    }
}

/// Word joining the two events of a story-based conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connector {
    To,
    Because,
    SoThat,
}

impl Connector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Connector::To => "to",
            Connector::Because => "because",
            Connector::SoThat => "so that",
        }
    }

    /// Story-seed attribute holding the context-relevant completion.
    pub fn attr_key(&self) -> &'static str {
        match self {
            Connector::To => "to",
            Connector::Because => "because",
            Connector::SoThat => "so_that",
        }
    }

    pub fn kind(&self) -> FallacyKind {
        match self {
            Connector::To => FallacyKind::ConjV2,
            Connector::Because => FallacyKind::ConjV3,
            Connector::SoThat => FallacyKind::ConjV4,
        }
    }
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStyle {
    ChooseOption,
    YesNo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Yes,
    No,
}

/// A discrete answer: an option index or a yes/no verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Option(usize),
    Verdict(Verdict),
}

impl Answer {
    pub const NO: Answer = Answer::Verdict(Verdict::No);
    pub const YES: Answer = Answer::Verdict(Verdict::Yes);

    pub fn option_letter(index: usize) -> char {
        (b'a' + index as u8) as char
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Option(i) => write!(f, "({})", Answer::option_letter(*i)),
            Answer::Verdict(Verdict::Yes) => f.write_str("Yes"),
            Answer::Verdict(Verdict::No) => f.write_str("No"),
        }
    }
}

/// Byte range into a text field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        text.get(self.start..self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantifierSlot {
    /// `All` opening the first premise.
    All,
    /// `Some` opening the second premise.
    SomePremise,
    /// `some` in the conclusion.
    SomeConclusion,
}

/// Current text of one quantifier slot. An empty `text` means the
/// quantifier was dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantifierSpan {
    pub slot: QuantifierSlot,
    pub span: Span,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTuple {
    pub dataset_seed: u64,
    pub index: u64,
    pub instance_seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub seed: Option<SeedTuple>,
    pub completer: String,
    /// Sampled strings that appear verbatim in the statement or options.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub entities: BTreeMap<String, String>,
    /// Sampled generation parameters that need not appear verbatim.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    /// Word joining the single event to the added event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connector: Option<String>,
    /// Added event currently present in the conjunctive option.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjunct: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevant_conjunct: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irrelevant_conjunct: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub celebrity_span: Option<Span>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantifiers: Vec<QuantifierSpan>,
    /// `new_options[i] = old_options[permutation[i]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    /// Source of framing tokens added to the premises.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub framing: Option<String>,
}

/// One generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub id: String,
    pub fallacy_kind: FallacyKind,
    pub statement: String,
    pub options: Vec<String>,
    pub question_style: QuestionStyle,
    pub gold: Answer,
    pub meta: InstanceMeta,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("instance {id} violates its invariants: {message}")]
pub struct InvalidInstance {
    pub id: String,
    pub message: String,
}

/// Split a trailing period off.
pub fn split_terminal(s: &str) -> (&str, &str) {
    let s = s.trim_end();
    match s.strip_suffix('.') {
        Some(base) => (base, "."),
        None => (s, ""),
    }
}

/// `"{single} {connector} {conjunct}"`, keeping the single event's final period.
pub fn compose_conjunction(single: &str, connector: &str, conjunct: &str) -> String {
    let (base, terminal) = split_terminal(single);
    format!("{base} {connector} {conjunct}{terminal}")
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

impl ProblemInstance {
    pub fn is_conjunction(&self) -> bool {
        self.fallacy_kind.is_conjunction()
    }

    /// Index of the conjunctive (non-gold) option.
    pub fn conjunctive_option(&self) -> Option<usize> {
        match (self.is_conjunction(), self.gold) {
            (true, Answer::Option(g)) if g < 2 => Some(1 - g),
            _ => None,
        }
    }

    pub fn check(&self) -> Result<(), InvalidInstance> {
        let fail = |message: String| Err(InvalidInstance { id: self.id.clone(), message });
        if self.id.is_empty() {
            return fail("empty id".into());
        }
        if self.statement.trim().is_empty() {
            return fail("empty statement".into());
        }
        if self.is_conjunction() {
            if self.question_style != QuestionStyle::ChooseOption {
                return fail("conjunction problems choose an option".into());
            }
            if self.options.len() != 2 || self.options.iter().any(|o| o.trim().is_empty()) {
                return fail("conjunction problems need two non-empty options".into());
            }
            let Answer::Option(g) = self.gold else {
                return fail("gold must be an option index".into());
            };
            if g > 1 {
                return fail(format!("gold index {g} out of range"));
            }
            let single = parse::normalize_ws(&self.options[g]);
            let conj = parse::normalize_ws(&self.options[1 - g]);
            let base = split_terminal(&single).0;
            if !(conj.starts_with(base) && conj.len() > single.len() && conj[base.len()..].starts_with(' ')) {
                return fail(format!("gold option `{single}` is not the single event of `{conj}`"));
            }
            if let (Some(c), Some(x)) = (&self.meta.connector, &self.meta.conjunct) {
                if self.options[1 - g] != compose_conjunction(&self.options[g], c, x) {
                    return fail("conjunctive option does not match connector and conjunct".into());
                }
            }
        } else {
            if self.question_style != QuestionStyle::YesNo || !self.options.is_empty() {
                return fail("syllogisms are yes/no questions without options".into());
            }
            if self.gold != Answer::NO {
                return fail("syllogism gold must be NO".into());
            }
            for q in &self.meta.quantifiers {
                if q.span.slice(&self.statement) != Some(q.text.as_str()) {
                    return fail(format!("quantifier span {:?} is stale", q.slot));
                }
            }
        }
        for (key, value) in &self.meta.entities {
            let present = self.statement.contains(value.as_str()) || self.options.iter().any(|o| o.contains(value.as_str()));
            if !present {
                return fail(format!("entity {key}=`{value}` not found in text"));
            }
        }
        if let Some(span) = self.meta.celebrity_span {
            let name = self.meta.entities.get("celebrity");
            if span.slice(&self.statement) != name.map(String::as_str) {
                return fail("celebrity span does not locate the name".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerationError {
    #[error("completion for {task} stayed malformed after {attempts} attempts ({reason}); last output: {raw:?}")]
    Malformed {
        task: String,
        attempts: u32,
        reason: String,
        raw: String,
    },
    #[error(transparent)]
    Completion(#[from] CompletionError),
    #[error(transparent)]
    Invalid(#[from] InvalidInstance),
    #[error("produced {produced} of {requested} {kind} instances before giving up after {failures} failed seeds")]
    Exhausted {
        kind: FallacyKind,
        requested: usize,
        produced: usize,
        failures: usize,
    },
    #[error("{0}")]
    Precondition(String),
}

/// Swap the two options with probability one half and record the permutation.
pub fn shuffle_options(instance: ProblemInstance, sampler: &mut SeededSampler) -> ProblemInstance {
    if instance.question_style != QuestionStyle::ChooseOption || instance.options.len() != 2 {
        return instance;
    }
    let swap = sampler.coin();
    apply_permutation(instance, if swap { &[1, 0] } else { &[0, 1] })
}

/// Reorder options so `new[i] = old[perm[i]]`, remapping gold.
pub fn apply_permutation(mut instance: ProblemInstance, perm: &[usize]) -> ProblemInstance {
    let old = std::mem::take(&mut instance.options);
    instance.options = perm.iter().map(|&i| old[i].clone()).collect();
    if let Answer::Option(g) = instance.gold {
        let new_gold = perm.iter().position(|&i| i == g).expect("permutation covers gold");
        instance.gold = Answer::Option(new_gold);
    }
    let composed = match &instance.meta.permutation {
        Some(prev) => perm.iter().map(|&i| prev[i]).collect(),
        None => perm.to_vec(),
    };
    instance.meta.permutation = Some(composed);
    instance
}

/// Identity of one instance within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSeed {
    pub kind: FallacyKind,
    pub dataset_seed: u64,
    pub index: u64,
}

impl InstanceSeed {
    pub fn new(kind: FallacyKind, dataset_seed: u64, index: u64) -> Self {
        Self { kind, dataset_seed, index }
    }

    pub fn id(&self) -> String {
        format!("{}-{}-{:05}", self.kind, self.dataset_seed, self.index)
    }

    pub fn instance_seed(&self) -> u64 {
        derive_seed(derive_seed(self.dataset_seed, self.kind.as_str()), &self.index.to_string())
    }

    pub fn tuple(&self) -> SeedTuple {
        SeedTuple { dataset_seed: self.dataset_seed, index: self.index, instance_seed: self.instance_seed() }
    }

    pub fn sampler(&self, stream: &str) -> SeededSampler {
        SeededSampler::new(self.instance_seed(), stream)
    }

    fn completer_seed(&self) -> u64 {
        derive_seed(self.instance_seed(), "completer")
    }
}

/// Builds problem instances from a corpus and a completer.
pub struct Generator<'a> {
    corpus: &'a Corpus,
    completer: &'a dyn TextCompleter,
    max_attempts: u32,
}

impl<'a> Generator<'a> {
    pub fn new(corpus: &'a Corpus, completer: &'a dyn TextCompleter) -> Self {
        Self { corpus, completer, max_attempts: MAX_COMPLETION_ATTEMPTS }
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    /// Ask the completer until `parse` accepts the output.
    fn complete_parsed<T>(
        &self,
        seed: &InstanceSeed,
        task: CompletionTask,
        messages: Vec<Message>,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<(T, String), GenerationError> {
        let mut last = (String::new(), String::new());
        for attempt in 0..self.max_attempts {
            let request = CompletionRequest {
                seed: seed.completer_seed(),
                attempt,
                task: task.clone(),
                messages: messages.clone(),
            };
            let raw = self.completer.complete(&request)?;
            match parse(&raw) {
                Ok(v) => return Ok((v, raw)),
                Err(reason) => {
                    tracing::warn!(id = %seed.id(), attempt, %reason, "rejected completion");
                    last = (reason, raw);
                }
            }
        }
        Err(GenerationError::Malformed {
            task: format!("{task:?}"),
            attempts: self.max_attempts,
            reason: last.0,
            raw: last.1,
        })
    }

    fn base_meta(&self, seed: &InstanceSeed) -> InstanceMeta {
        InstanceMeta { seed: Some(seed.tuple()), completer: self.completer.label(), ..Default::default() }
    }

    fn person(&self, sampler: &mut SeededSampler) -> (String, String, u64) {
        let gender = self.corpus.pool(PoolKind::Gender).sample(sampler).value.clone();
        let race = self.corpus.pool(PoolKind::Race).sample(sampler).value.clone();
        let range = self.corpus.pool(PoolKind::AgeRange).sample(sampler);
        let age = sampler.range_inclusive(range.attr_u64("min").unwrap_or(18), range.attr_u64("max").unwrap_or(80));
        (gender, race, age)
    }

    fn finish(&self, instance: ProblemInstance, seed: &InstanceSeed) -> Result<ProblemInstance, GenerationError> {
        let instance = shuffle_options(instance, &mut seed.sampler("shuffle"));
        instance.check()?;
        Ok(instance)
    }

    /// Linda-style bio with an occupation and a bio-relevant hobby.
    pub fn gen_variant1(&self, seed: &InstanceSeed) -> Result<ProblemInstance, GenerationError> {
        let mut sampler = seed.sampler("entities");
        let (gender, race, age) = self.person(&mut sampler);
        let occupation = self.corpus.pool(PoolKind::Occupation).sample(&mut sampler).value.clone();

        let bio_prompt = templates::fill(
            templates::BIO,
            &[("random_gender", &gender), ("random_race", &race), ("random_age", &age.to_string())],
        );
        let ((bio, name), bio_raw) = self.complete_parsed(
            seed,
            CompletionTask::Bio { gender: gender.clone(), race: race.clone(), age },
            vec![Message::user(&bio_prompt)],
            parse::parse_bio,
        )?;
        let (hobby, _) = self.complete_parsed(
            seed,
            CompletionTask::RelevantHobby,
            vec![Message::user(&bio_prompt), Message::assistant(&bio_raw), Message::user(templates::RELEVANT_HOBBY)],
            |t| parse::parse_hobby_sentence(t, &name),
        )?;
        let (random_hobby, _) = self.complete_parsed(
            seed,
            CompletionTask::RandomHobby,
            vec![Message::user(templates::RANDOM_HOBBY)],
            |t| {
                let h = parse::parse_random_hobby(t, &name)?;
                if h.eq_ignore_ascii_case(&hobby) {
                    Err("random hobby equals the relevant one".into())
                } else {
                    Ok(h)
                }
            },
        )?;

        let single = format!("{name} is {} {occupation}.", article(&occupation));
        let conj = compose_conjunction(&single, "and", &hobby);
        let mut meta = self.base_meta(seed);
        meta.entities.insert("name".into(), name);
        meta.entities.insert("occupation".into(), occupation);
        meta.attributes.insert("gender".into(), gender);
        meta.attributes.insert("race".into(), race);
        meta.attributes.insert("age".into(), age.to_string());
        meta.connector = Some("and".into());
        meta.conjunct = Some(hobby.clone());
        meta.relevant_conjunct = Some(hobby);
        meta.irrelevant_conjunct = Some(random_hobby);
        let instance = ProblemInstance {
            id: seed.id(),
            fallacy_kind: FallacyKind::ConjV1,
            statement: format!("{bio} Which is more probable?"),
            options: vec![single, conj],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta,
        };
        self.finish(instance, seed)
    }

    /// Story-based conjunction: context, last sentence, and a completion
    /// after `connector`.
    pub fn gen_variant_2_3_4(
        &self,
        seed: &InstanceSeed,
        story: &PoolEntry,
        connector: Connector,
    ) -> Result<ProblemInstance, GenerationError> {
        let sentences = story.sentences();
        if sentences.len() < 3 {
            return Err(GenerationError::Precondition(format!("story {} has fewer than 3 sentences", story.value)));
        }
        let (last, context) = sentences.split_last().expect("non-empty");
        let context = context.join(" ");
        let option_a = last.trim().to_string();
        let prefix = format!("{} {}", split_terminal(&option_a).0, connector);
        let prompt = templates::fill(
            templates::STORY_ENDING,
            &[("context", &context), ("option_a", &option_a), ("option_b_prefix", &format!("{prefix} "))],
        );
        let (relevant, raw) = self.complete_parsed(
            seed,
            CompletionTask::StoryEnding { story: story.value.clone(), connector, relevant: true },
            vec![Message::user(&prompt)],
            |t| parse::parse_story_completion(t, &prefix, connector),
        )?;
        let follow_up = templates::fill(templates::STORY_ENDING_IRRELEVANT, &[("connector", connector.as_str())]);
        let (irrelevant, _) = self.complete_parsed(
            seed,
            CompletionTask::StoryEnding { story: story.value.clone(), connector, relevant: false },
            vec![Message::user(&prompt), Message::assistant(&raw), Message::user(&follow_up)],
            |t| {
                let c = parse::parse_story_completion(t, &prefix, connector)?;
                if c.eq_ignore_ascii_case(&relevant) {
                    Err("irrelevant completion equals the relevant one".into())
                } else {
                    Ok(c)
                }
            },
        )?;

        let mut meta = self.base_meta(seed);
        meta.attributes.insert("story".into(), story.value.clone());
        meta.connector = Some(connector.as_str().into());
        meta.conjunct = Some(relevant.clone());
        meta.relevant_conjunct = Some(relevant.clone());
        meta.irrelevant_conjunct = Some(irrelevant);
        let instance = ProblemInstance {
            id: seed.id(),
            fallacy_kind: connector.kind(),
            statement: format!("{context} Which is more likely?"),
            options: vec![option_a.clone(), compose_conjunction(&option_a, connector.as_str(), &relevant)],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta,
        };
        self.finish(instance, seed)
    }

    /// Patient vignette; both options share one symptom of the disease.
    pub fn gen_variant5(&self, seed: &InstanceSeed) -> Result<ProblemInstance, GenerationError> {
        let mut sampler = seed.sampler("entities");
        let (gender, race, age) = self.person(&mut sampler);
        let disease = self.corpus.pool(PoolKind::Disease).sample(&mut sampler);
        let symptoms = disease.symptoms();
        let one = sampler.index(symptoms.len());
        let mut two = sampler.index(symptoms.len() - 1);
        if two >= one {
            two += 1;
        }
        let (symptom_one, symptom_two) = (symptoms[one].to_string(), symptoms[two].to_string());
        let age_s = age.to_string();
        let slots = [
            ("random_gender", gender.as_str()),
            ("random_race", race.as_str()),
            ("random_age", age_s.as_str()),
            ("random_disease", disease.value.as_str()),
            ("random_symptom_one", symptom_one.as_str()),
            ("random_symptom_two", symptom_two.as_str()),
            ("example", templates::DISEASE_EXAMPLE),
        ];
        let task = |second: Option<String>| CompletionTask::DiseaseQuiz {
            gender: gender.clone(),
            race: race.clone(),
            age,
            disease: disease.value.clone(),
            symptom_one: symptom_one.clone(),
            symptom_two: second,
        };
        let (relevant, _) = self.complete_parsed(
            seed,
            task(Some(symptom_two.clone())),
            vec![Message::user(&templates::fill(templates::DISEASE_QUIZ, &slots))],
            |t| parse::parse_disease_quiz(t, &disease.value, &symptom_one, Some(&symptom_two)),
        )?;
        let (irrelevant, _) = self.complete_parsed(
            seed,
            task(None),
            vec![Message::user(&templates::fill(templates::DISEASE_QUIZ_IRRELEVANT, &slots))],
            |t| {
                let p = parse::parse_disease_quiz(t, &disease.value, &symptom_one, None)?;
                if symptoms.iter().any(|s| p.conjunct.eq_ignore_ascii_case(s)) {
                    Err(format!("`{}` is a symptom of {}", p.conjunct, disease.value))
                } else {
                    Ok(p)
                }
            },
        )?;

        let mut meta = self.base_meta(seed);
        meta.entities.insert("disease".into(), disease.value.clone());
        meta.entities.insert("symptom_one".into(), symptom_one.clone());
        meta.attributes.insert("gender".into(), gender);
        meta.attributes.insert("race".into(), race);
        meta.attributes.insert("age".into(), age_s);
        meta.attributes.insert("symptom_two".into(), symptom_two);
        meta.connector = Some("and".into());
        meta.conjunct = Some(relevant.conjunct.clone());
        meta.relevant_conjunct = Some(relevant.conjunct.clone());
        meta.irrelevant_conjunct = Some(irrelevant.conjunct);
        let instance = ProblemInstance {
            id: seed.id(),
            fallacy_kind: FallacyKind::ConjV5,
            statement: relevant.statement,
            options: vec![relevant.single.clone(), compose_conjunction(&relevant.single, "and", &relevant.conjunct)],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta,
        };
        self.finish(instance, seed)
    }

    /// Celebrity scenario: an unlikely event, then the same event `but` a
    /// very likely one.
    pub fn gen_variant6(&self, seed: &InstanceSeed) -> Result<ProblemInstance, GenerationError> {
        let mut sampler = seed.sampler("entities");
        let celebrity = self.corpus.pool(PoolKind::Celebrity).sample(&mut sampler).value.clone();
        let prompt = templates::fill(templates::CELEBRITY, &[("random_celebrity", &celebrity)]);
        let (parsed, _) = self.complete_parsed(
            seed,
            CompletionTask::Celebrity { name: celebrity.clone() },
            vec![Message::user(&prompt)],
            |t| parse::parse_celebrity(t, &celebrity),
        )?;
        let start = parsed.statement.find(&celebrity).expect("parser checked the name");
        let mut meta = self.base_meta(seed);
        meta.entities.insert("celebrity".into(), celebrity.clone());
        meta.celebrity_span = Some(Span::new(start, start + celebrity.len()));
        meta.connector = Some("but".into());
        meta.conjunct = Some(parsed.conjunct.clone());
        meta.relevant_conjunct = Some(parsed.conjunct.clone());
        let instance = ProblemInstance {
            id: seed.id(),
            fallacy_kind: FallacyKind::ConjV6,
            statement: parsed.statement,
            options: vec![parsed.single.clone(), compose_conjunction(&parsed.single, "but", &parsed.conjunct)],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta,
        };
        self.finish(instance, seed)
    }

    /// Invalid `All/Some/Therefore some` syllogism; gold is always NO.
    pub fn gen_syllogism(&self, seed: &InstanceSeed) -> Result<ProblemInstance, GenerationError> {
        let mut sampler = seed.sampler("entities");
        let object = self.corpus.pool(PoolKind::Object).sample(&mut sampler).value.clone();
        let prompt = templates::fill(templates::SYLLOGISM, &[("random_object", &object)]);
        let (parsed, _) = self.complete_parsed(
            seed,
            CompletionTask::Syllogism { object: object.clone() },
            vec![Message::user(&prompt)],
            |t| parse::parse_syllogism(t, &object),
        )?;
        let (statement, quantifiers) = syllogism_statement(&object, &parsed.category, &parsed.trait_phrase);
        let mut meta = self.base_meta(seed);
        meta.entities.insert("object".into(), object);
        meta.entities.insert("category".into(), parsed.category);
        meta.entities.insert("trait".into(), parsed.trait_phrase);
        meta.quantifiers = quantifiers;
        let instance = ProblemInstance {
            id: seed.id(),
            fallacy_kind: FallacyKind::Syllogism,
            statement,
            options: Vec::new(),
            question_style: QuestionStyle::YesNo,
            gold: Answer::NO,
            meta,
        };
        instance.check()?;
        Ok(instance)
    }

    /// Generate one instance of `kind`.
    pub fn generate_one(&self, seed: &InstanceSeed) -> Result<ProblemInstance, GenerationError> {
        match seed.kind {
            FallacyKind::ConjV1 => self.gen_variant1(seed),
            FallacyKind::ConjV2 | FallacyKind::ConjV3 | FallacyKind::ConjV4 => {
                let connector = seed.kind.connector().expect("story variants have connectors");
                let mut sampler = seed.sampler("story");
                let story = self.corpus.pool(PoolKind::StorySeed).sample(&mut sampler);
                self.gen_variant_2_3_4(seed, story, connector)
            }
            FallacyKind::ConjV5 => self.gen_variant5(seed),
            FallacyKind::ConjV6 => self.gen_variant6(seed),
            FallacyKind::Syllogism => self.gen_syllogism(seed),
        }
    }

    /// Exactly `n` instances with distinct ids, or an error.
    ///
    /// Seeds whose completions stay malformed are skipped and the next
    /// index is tried; more than `max(n, 10)` skipped seeds abort.
    pub fn generate(&self, kind: FallacyKind, n: usize, dataset_seed: u64) -> Result<Vec<ProblemInstance>, GenerationError> {
        let mut out = Vec::with_capacity(n);
        let mut failures = 0usize;
        let budget = n.max(10);
        let mut index = 0u64;
        while out.len() < n {
            let seed = InstanceSeed::new(kind, dataset_seed, index);
            index += 1;
            match self.generate_one(&seed) {
                Ok(instance) => out.push(instance),
                Err(err @ (GenerationError::Malformed { .. } | GenerationError::Invalid(_))) => {
                    failures += 1;
                    tracing::warn!(id = %seed.id(), error = %err, "skipping seed");
                    if failures > budget {
                        return Err(GenerationError::Exhausted { kind, requested: n, produced: out.len(), failures });
                    }
                }
                Err(err) => return Err(err),
            }
        }
        Ok(out)
    }
}

/// Canonical argument text and the spans of its three quantifiers.
pub fn syllogism_statement(object: &str, category: &str, trait_phrase: &str) -> (String, Vec<QuantifierSpan>) {
    let p1 = format!("All {object} are {category}.");
    let p2 = format!("Some {category} {trait_phrase}.");
    let conclusion_lead = "Therefore, ";
    let p3 = format!("{conclusion_lead}some {object} {trait_phrase}.");
    let p2_start = p1.len() + 1;
    let p3_some = p2_start + p2.len() + 1 + conclusion_lead.len();
    let statement = format!("{p1} {p2} {p3}");
    let quantifiers = vec![
        QuantifierSpan { slot: QuantifierSlot::All, span: Span::new(0, 3), text: "All".into() },
        QuantifierSpan { slot: QuantifierSlot::SomePremise, span: Span::new(p2_start, p2_start + 4), text: "Some".into() },
        QuantifierSpan { slot: QuantifierSlot::SomeConclusion, span: Span::new(p3_some, p3_some + 4), text: "some".into() },
    ];
    (statement, quantifiers)
}

/// Write instances as JSON lines.
pub fn to_jsonl(instances: &[ProblemInstance]) -> String {
    instances
        .iter()
        .map(|i| serde_json::to_string(i).expect("instances serialize") + "\n")
        .collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<ProblemInstance>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
