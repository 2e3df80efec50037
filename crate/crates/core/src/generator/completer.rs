//! Text completers used during generation.

use serde::Deserialize;

use super::Connector;
use crate::model_client::{ClientError, RemoteClient};
use crate::corpus::{Corpus, PoolKind, SeededSampler};
use crate::prompting::Message;

#[derive(Debug, Clone, PartialEq)]
pub enum CompletionTask {
    Bio { gender: String, race: String, age: u64 },
    RelevantHobby,
    RandomHobby,
    StoryEnding { story: String, connector: Connector, relevant: bool },
    DiseaseQuiz {
        gender: String,
        race: String,
        age: u64,
        disease: String,
        symptom_one: String,
        /// `None` asks for an intentionally irrelevant symptom.
        symptom_two: Option<String>,
    },
    Celebrity { name: String },
    Syllogism { object: String },
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    /// Per-instance seed; the stub derives every draw from it.
    pub seed: u64,
    /// Retry counter, starting at 0.
    pub attempt: u32,
    pub task: CompletionTask,
    /// Conversation so far, ending with the prompt for this task.
    pub messages: Vec<Message>,
}

#[derive(Debug, thiserror::Error)]
pub enum CompletionError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("stub completer cannot serve this request: {0}")]
    Unsupported(String),
}

pub trait TextCompleter: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError>;

    /// Recorded in instance metadata.
    fn label(&self) -> String;
}

#[derive(Debug, Clone, Deserialize)]
struct Profile {
    major: String,
    traits: Vec<String>,
    concern: String,
    hobby: String,
}

#[derive(Debug, Clone, Deserialize)]
struct IrrelevantCompletions {
    to: Vec<String>,
    because: Vec<String>,
    so_that: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct StubLexicon {
    profiles: Vec<Profile>,
    irrelevant_hobbies: Vec<String>,
    irrelevant_completions: IrrelevantCompletions,
}

/// Offline completer filling every task from bundled clause pools.
///
/// Output is a pure function of `(seed, task)`, and is shaped like a
/// well-behaved model reply so it goes through the same parsers.
#[derive(Debug, Clone)]
pub struct StubCompleter {
    corpus: Corpus,
    lexicon: StubLexicon,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

impl StubCompleter {
    pub fn new(corpus: Corpus) -> Self {
        let lexicon = serde_json::from_str(include_str!("../../data/stub_lexicon.json"))
            .expect("bundled stub lexicon is valid");
        Self { corpus, lexicon }
    }

    fn name(&self, seed: u64) -> &str {
        let mut s = SeededSampler::new(seed, "stub.name");
        &self.corpus.pool(PoolKind::GenericName).sample(&mut s).value
    }

    fn profile(&self, seed: u64) -> &Profile {
        let mut s = SeededSampler::new(seed, "stub.profile");
        s.pick(&self.lexicon.profiles)
    }

    fn gender_attr<'a>(&'a self, gender: &str, key: &str, fallback: &'a str) -> &'a str {
        self.corpus
            .pool(PoolKind::Gender)
            .get(gender)
            .and_then(|e| e.attr_str(key))
            .unwrap_or(fallback)
    }

    fn bio(&self, seed: u64, gender: &str, race: &str, age: u64) -> String {
        let p = self.profile(seed);
        let subject = self.gender_attr(gender, "subject", "they");
        let is = self.gender_attr(gender, "is", "are");
        let was = self.gender_attr(gender, "was", "were");
        format!(
            "{name} is {age} years old, {t1}, and {t2}. {Subj} {is} of {race} descent and majored in {major}. As a student, {subj} {was} {concern}.",
            name = self.name(seed),
            t1 = p.traits[0],
            t2 = p.traits[1],
            Subj = capitalize(subject),
            subj = subject,
            major = p.major,
            concern = p.concern,
        )
    }

    fn irrelevant_symptom(&self, seed: u64, disease: &str, symptom_one: &str) -> Result<String, CompletionError> {
        let diseases = self.corpus.pool(PoolKind::Disease);
        let own: Vec<&str> = diseases.get(disease).map(|d| d.symptoms()).unwrap_or_default();
        let mut candidates: Vec<&str> = diseases
            .entries()
            .iter()
            .flat_map(|d| d.symptoms())
            .filter(|s| *s != symptom_one && !own.contains(s))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        if candidates.is_empty() {
            return Err(CompletionError::Unsupported(format!("no symptom unrelated to {disease}")));
        }
        let mut s = SeededSampler::new(seed, "stub.irrelevant_symptom");
        Ok(s.pick(&candidates).to_string())
    }
}

impl TextCompleter for StubCompleter {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError> {
        let seed = request.seed;
        let text = match &request.task {
            CompletionTask::Bio { gender, race, age } => self.bio(seed, gender, race, *age),
            CompletionTask::RelevantHobby => format!("{} {}.", self.name(seed), self.profile(seed).hobby),
            CompletionTask::RandomHobby => {
                let mut s = SeededSampler::new(seed, "stub.random_hobby");
                format!("{}.", s.pick(&self.lexicon.irrelevant_hobbies))
            }
            CompletionTask::StoryEnding { story, connector, relevant } => {
                let clause = if *relevant {
                    self.corpus
                        .pool(PoolKind::StorySeed)
                        .get(story)
                        .and_then(|e| e.attr_str(connector.attr_key()))
                        .ok_or_else(|| CompletionError::Unsupported(format!("story {story} has no `{connector}` completion")))?
                        .to_string()
                } else {
                    let pool = match connector {
                        Connector::To => &self.lexicon.irrelevant_completions.to,
                        Connector::Because => &self.lexicon.irrelevant_completions.because,
                        Connector::SoThat => &self.lexicon.irrelevant_completions.so_that,
                    };
                    let mut s = SeededSampler::new(seed, "stub.irrelevant_completion");
                    s.pick(pool).clone()
                };
                format!("{clause}.")
            }
            CompletionTask::DiseaseQuiz { gender, race, age, disease, symptom_one, symptom_two } => {
                let second = match symptom_two {
                    Some(s) => s.clone(),
                    None => self.irrelevant_symptom(seed, disease, symptom_one)?,
                };
                let noun = self.gender_attr(gender, "noun", "person");
                let single = symptom_one.clone();
                let both = format!("{symptom_one} and {second}");
                let mut s = SeededSampler::new(seed, "stub.quiz_order");
                let (a, b) = if s.coin() { (both, single) } else { (single, both) };
                format!(
                    "{name}, a {age}-year-old {race} {noun}, was diagnosed with {disease} last month. Which one is more likely?\n(a) {a}\n(b) {b}",
                    name = self.name(seed),
                )
            }
            CompletionTask::Celebrity { name } => {
                let entry = self
                    .corpus
                    .pool(PoolKind::Celebrity)
                    .get(name)
                    .ok_or_else(|| CompletionError::Unsupported(format!("unknown celebrity {name}")))?;
                let attr = |k: &str| {
                    entry
                        .attr_str(k)
                        .ok_or_else(|| CompletionError::Unsupported(format!("celebrity {name} lacks `{k}`")))
                };
                let (scenario, unlikely, likely) = (attr("scenario")?, attr("unlikely")?, attr("likely")?);
                format!(" {scenario}. Which is more likely:\n(a) {unlikely}.\n(b) {unlikely} but {likely}.")
            }
            CompletionTask::Syllogism { object } => {
                let entry = self
                    .corpus
                    .pool(PoolKind::Object)
                    .get(object)
                    .ok_or_else(|| CompletionError::Unsupported(format!("unknown object {object}")))?;
                let category = entry.attr_str("category");
                let trait_phrase = entry.attr_str("trait");
                match (category, trait_phrase) {
                    (Some(c), Some(t)) => format!("{c}.\nSome {c} {t}.\nTherefore some {object} {t}."),
                    _ => return Err(CompletionError::Unsupported(format!("object {object} lacks category/trait"))),
                }
            }
        };
        Ok(text)
    }

    fn label(&self) -> String {
        "stub".to_string()
    }
}

/// Completer backed by a chat-completion endpoint.
///
/// Retries after a malformed completion are salted with the attempt number
/// so they bypass the response cache.
pub struct RemoteCompleter {
    client: RemoteClient,
}

impl RemoteCompleter {
    pub fn new(client: RemoteClient) -> Self {
        Self { client }
    }
}

impl TextCompleter for RemoteCompleter {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError> {
        let salt = if request.attempt == 0 { String::new() } else { format!("retry-{}", request.attempt) };
        let response = self.client.query_messages(&request.messages, &salt)?;
        Ok(response.text)
    }

    fn label(&self) -> String {
        format!("remote:{}", self.client.config().model_name)
    }
}
