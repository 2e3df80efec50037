//! Matched pairs and the six token perturbations.
//!
//! A pair holds an original and a perturbed arm. Every textual difference
//! between the arms is recorded as a [`DiffSpan`] against the original
//! arm's text, so the perturbed text can be rebuilt from the original.

use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{derive_seed, Corpus, EntityPool, PoolEntry, PoolKind, SeededSampler};
use crate::generator::{
    compose_conjunction, split_terminal, FallacyKind, GenerationError, Generator, ProblemInstance, QuantifierSlot,
};
use crate::paired_stats::TestDirection;
use crate::prompting::{exemplar_library, preamble, ExemplarChoice, HintLevel, ProblemFamily, PromptMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    #[serde(alias = "h1")]
    H1,
    #[serde(alias = "h2")]
    H2,
    #[serde(alias = "h3")]
    H3,
    #[serde(alias = "h4")]
    H4,
    #[serde(alias = "h5")]
    H5,
    #[serde(alias = "h6")]
    H6,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 6] = [Hypothesis::H1, Hypothesis::H2, Hypothesis::H3, Hypothesis::H4, Hypothesis::H5, Hypothesis::H6];

    pub fn as_str(&self) -> &'static str {
        match self {
            Hypothesis::H1 => "H1",
            Hypothesis::H2 => "H2",
            Hypothesis::H3 => "H3",
            Hypothesis::H4 => "H4",
            Hypothesis::H5 => "H5",
            Hypothesis::H6 => "H6",
        }
    }

    /// Number of pairs in the standard experiment.
    pub fn default_n(&self) -> usize {
        match self {
            Hypothesis::H1 => 400,
            Hypothesis::H2 => 500,
            Hypothesis::H3 => 100,
            Hypothesis::H4 | Hypothesis::H5 => 200,
            Hypothesis::H6 => 800,
        }
    }

    pub fn default_direction(&self) -> TestDirection {
        match self {
            Hypothesis::H1 | Hypothesis::H3 | Hypothesis::H6 => TestDirection::Less,
            Hypothesis::H2 | Hypothesis::H4 => TestDirection::Greater,
            Hypothesis::H5 => TestDirection::TwoSided,
        }
    }

    /// Prompting methods an experiment on this hypothesis may use.
    pub fn allowed_methods(&self) -> Vec<PromptMethod> {
        match self {
            Hypothesis::H2 => vec![PromptMethod::Os, PromptMethod::OsCot],
            Hypothesis::H6 => PromptMethod::CONTROL.to_vec(),
            _ => PromptMethod::STANDARD.to_vec(),
        }
    }

    /// Fallacy kinds in the dataset with relative weights.
    pub fn dataset_mix(&self) -> Vec<(FallacyKind, usize)> {
        use FallacyKind::*;
        match self {
            Hypothesis::H1 => vec![(ConjV2, 1), (ConjV3, 1), (ConjV4, 1), (ConjV5, 1)],
            Hypothesis::H2 => vec![(ConjV2, 1), (ConjV3, 1), (ConjV4, 1), (ConjV5, 1), (ConjV6, 1)],
            Hypothesis::H3 => vec![(ConjV6, 1)],
            Hypothesis::H4 | Hypothesis::H5 => vec![(Syllogism, 1)],
            Hypothesis::H6 => vec![
                (ConjV1, 1),
                (ConjV2, 1),
                (ConjV3, 1),
                (ConjV4, 1),
                (ConjV5, 1),
                (ConjV6, 1),
                (Syllogism, 2),
            ],
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Hypothesis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        let t = if t.starts_with('H') { t } else { format!("H{t}") };
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.as_str() == t)
            .ok_or_else(|| format!("unknown hypothesis `{s}` (expected H1..H6)"))
    }
}

/// Split `n` across weighted parts, largest remainder first, ties to the
/// earlier part.
pub fn split_counts(n: usize, weights: &[usize]) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    let mut counts: Vec<usize> = weights.iter().map(|w| n * w / total).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse((n * weights[i]) % total));
    let mut left = n - counts.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmLabel {
    Original,
    Perturbed,
}

impl ArmLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArmLabel::Original => "original",
            ArmLabel::Perturbed => "perturbed",
        }
    }
}

/// The part of an arm a diff applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextField {
    Statement,
    Option(usize),
    /// The rendered one-shot exemplar override, empty when absent.
    Exemplar,
    /// The instruction or hint paragraph.
    Preamble,
}

/// Replacing `before` at `[start, end)` of the original arm's field text
/// with `after` moves toward the perturbed text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffSpan {
    pub arm: ArmLabel,
    pub field: TextField,
    pub start: usize,
    pub end: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub instance: ProblemInstance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplar: Option<ExemplarChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<HintLevel>,
}

impl Arm {
    pub fn plain(instance: ProblemInstance) -> Self {
        Self { instance, exemplar: None, hint: None }
    }

    pub fn field_text(&self, field: TextField) -> Option<String> {
        match field {
            TextField::Statement => Some(self.instance.statement.clone()),
            TextField::Option(i) => self.instance.options.get(i).cloned(),
            TextField::Exemplar => Some(match self.exemplar {
                None => String::new(),
                Some(choice) => {
                    let lib = exemplar_library();
                    let e = match choice {
                        ExemplarChoice::Linda => lib.linda,
                        ExemplarChoice::Bob => lib.bob,
                    };
                    e.render(true)
                }
            }),
            TextField::Preamble => Some(preamble(ProblemFamily::of(&self.instance), self.hint).to_string()),
        }
    }

    pub fn fields(&self) -> Vec<TextField> {
        let mut f = vec![TextField::Statement];
        f.extend((0..self.instance.options.len()).map(TextField::Option));
        f.push(TextField::Exemplar);
        f.push(TextField::Preamble);
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub hypothesis: Hypothesis,
    /// Position in the paired dataset.
    pub index: usize,
    /// Id of the generated instance both arms derive from.
    pub base_id: String,
    pub original: Arm,
    pub perturbed: Arm,
    pub diff_spans: Vec<DiffSpan>,
}

impl MatchedPair {
    pub fn arm(&self, label: ArmLabel) -> &Arm {
        match label {
            ArmLabel::Original => &self.original,
            ArmLabel::Perturbed => &self.perturbed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PairError {
    #[error("instance {id}: {message}")]
    Precondition { id: String, message: String },
    #[error("instance {id}: quantifier spans are stale ({slot:?})")]
    StaleSpans { id: String, slot: QuantifierSlot },
    #[error("pair {base_id}: {message}")]
    Unsound { base_id: String, message: String },
}

fn precondition(instance: &ProblemInstance, message: impl Into<String>) -> PairError {
    PairError::Precondition { id: instance.id.clone(), message: message.into() }
}

struct Edit {
    start: usize,
    end: usize,
    after: String,
}

/// Apply non-overlapping edits given in original coordinates.
fn apply_edits(text: &str, edits: &[Edit]) -> String {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| e.start);
    let mut out = String::with_capacity(text.len() + 64);
    let mut cursor = 0;
    for e in sorted {
        assert!(e.start >= cursor, "overlapping edits");
        out.push_str(&text[cursor..e.start]);
        out.push_str(&e.after);
        cursor = e.end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Map a position in the original text through `edits`. Positions at the
/// start of an edit stay put.
fn shift(pos: usize, edits: &[Edit]) -> usize {
    let mut delta: isize = 0;
    for e in edits {
        if e.end <= pos && !(e.start == e.end && e.start == pos) {
            delta += e.after.len() as isize - (e.end - e.start) as isize;
        }
    }
    (pos as isize + delta) as usize
}

/// Rebuild a field of the perturbed arm from the original text and spans.
pub fn apply_spans(original: &str, spans: &[&DiffSpan]) -> Result<String, String> {
    let mut sorted: Vec<&&DiffSpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut out = String::new();
    let mut cursor = 0;
    for s in sorted {
        if s.start < cursor || s.end > original.len() || s.start > s.end {
            return Err(format!("span {}..{} out of order or out of range", s.start, s.end));
        }
        if original.get(s.start..s.end) != Some(s.before.as_str()) {
            return Err(format!("span {}..{} does not hold `{}`", s.start, s.end, s.before));
        }
        out.push_str(&original[cursor..s.start]);
        out.push_str(&s.after);
        cursor = s.end;
    }
    out.push_str(&original[cursor..]);
    Ok(out)
}

/// Check gold agreement, arm validity and span reconstruction.
pub fn verify_pair(pair: &MatchedPair) -> Result<(), PairError> {
    let unsound = |message: String| Err(PairError::Unsound { base_id: pair.base_id.clone(), message });
    let (o, p) = (&pair.original, &pair.perturbed);
    if o.instance.gold != p.instance.gold {
        return unsound(format!("gold differs: {} vs {}", o.instance.gold, p.instance.gold));
    }
    if o.instance.options.len() != p.instance.options.len() {
        return unsound("option counts differ".into());
    }
    for arm in [o, p] {
        if let Err(e) = arm.instance.check() {
            return unsound(e.to_string());
        }
    }
    for field in o.fields() {
        let spans: Vec<&DiffSpan> = pair.diff_spans.iter().filter(|s| s.field == field).collect();
        let before = o.field_text(field).unwrap_or_default();
        let expected = p.field_text(field).unwrap_or_default();
        match apply_spans(&before, &spans) {
            Ok(rebuilt) if rebuilt == expected => {}
            Ok(rebuilt) => return unsound(format!("{field:?} rebuilt as `{rebuilt}`, expected `{expected}`")),
            Err(e) => return unsound(format!("{field:?}: {e}")),
        }
    }
    Ok(())
}

fn perturbed_id(original: &ProblemInstance, hypothesis: Hypothesis) -> String {
    format!("{}/{}", original.id, hypothesis.as_str().to_ascii_lowercase())
}

fn span(field: TextField, start: usize, end: usize, before: &str, after: &str) -> DiffSpan {
    DiffSpan {
        arm: ArmLabel::Perturbed,
        field,
        start,
        end,
        before: before.to_string(),
        after: after.to_string(),
    }
}

/// Swap the context-relevant conjunct for the irrelevant one.
pub fn perturb_h1(instance: &ProblemInstance, index: usize) -> Result<MatchedPair, PairError> {
    let relevant = instance
        .meta
        .relevant_conjunct
        .as_deref()
        .ok_or_else(|| precondition(instance, "no relevant conjunct in meta"))?;
    let irrelevant = instance
        .meta
        .irrelevant_conjunct
        .as_deref()
        .ok_or_else(|| precondition(instance, "no irrelevant conjunct in meta"))?;
    let connector = instance.meta.connector.as_deref().ok_or_else(|| precondition(instance, "no connector in meta"))?;
    if instance.meta.conjunct.as_deref() != Some(relevant) {
        return Err(precondition(instance, "conjunctive option does not carry the relevant conjunct"));
    }
    let ci = instance.conjunctive_option().ok_or_else(|| precondition(instance, "not a two-option conjunction"))?;
    let single = &instance.options[1 - ci];
    let start = split_terminal(single).0.len() + connector.len() + 2;
    let end = start + relevant.len();
    if instance.options[ci].get(start..end) != Some(relevant) {
        return Err(precondition(instance, "conjunct not at its expected position"));
    }

    let mut perturbed = instance.clone();
    perturbed.id = perturbed_id(instance, Hypothesis::H1);
    perturbed.options[ci] = compose_conjunction(single, connector, irrelevant);
    perturbed.meta.conjunct = Some(irrelevant.to_string());
    Ok(MatchedPair {
        hypothesis: Hypothesis::H1,
        index,
        base_id: instance.id.clone(),
        original: Arm::plain(instance.clone()),
        perturbed: Arm::plain(perturbed),
        diff_spans: vec![span(TextField::Option(ci), start, end, relevant, irrelevant)],
    })
}

/// Linda one-shot exemplar in the original arm, Bob in the perturbed arm.
pub fn perturb_h2(target: &ProblemInstance, index: usize) -> MatchedPair {
    let original = Arm { instance: target.clone(), exemplar: Some(ExemplarChoice::Linda), hint: None };
    let mut instance = target.clone();
    instance.id = perturbed_id(target, Hypothesis::H2);
    let perturbed = Arm { instance, exemplar: Some(ExemplarChoice::Bob), hint: None };
    let before = original.field_text(TextField::Exemplar).unwrap_or_default();
    let after = perturbed.field_text(TextField::Exemplar).unwrap_or_default();
    MatchedPair {
        hypothesis: Hypothesis::H2,
        index,
        base_id: target.id.clone(),
        diff_spans: vec![span(TextField::Exemplar, 0, before.len(), &before, &after)],
        original,
        perturbed,
    }
}

fn whole_word(name: &str) -> Regex {
    let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    let lead = if word(name.chars().next()) { r"\b" } else { "" };
    let tail = if word(name.chars().last()) { r"\b" } else { "" };
    Regex::new(&format!("{lead}{}{tail}", regex::escape(name))).expect("escaped name is a valid pattern")
}

/// Replace every whole-word occurrence of the celebrity with a generic name.
pub fn perturb_h3(
    instance: &ProblemInstance,
    generic: &EntityPool,
    sampler: &mut SeededSampler,
    index: usize,
) -> Result<MatchedPair, PairError> {
    let celebrity = instance
        .meta
        .entities
        .get("celebrity")
        .ok_or_else(|| precondition(instance, "no celebrity in meta"))?
        .clone();
    if instance.meta.celebrity_span.is_none() {
        return Err(precondition(instance, "no celebrity span in meta"));
    }
    let pattern = whole_word(&celebrity);
    if !pattern.is_match(&instance.statement) {
        return Err(precondition(instance, format!("`{celebrity}` not found in statement")));
    }
    let usable = |e: &PoolEntry| e.value != celebrity && !celebrity.contains(e.value.as_str());
    let replacement = generic.sample_where(sampler, usable);
    if !usable(replacement) {
        return Err(precondition(instance, "generic-name pool has no usable entry"));
    }
    let replacement = replacement.value.clone();

    let mut spans = Vec::new();
    let mut replace_in = |field: TextField, text: &str| -> String {
        for m in pattern.find_iter(text) {
            spans.push(span(field, m.start(), m.end(), m.as_str(), &replacement));
        }
        pattern.replace_all(text, regex::NoExpand(&replacement)).into_owned()
    };
    let mut perturbed = instance.clone();
    perturbed.id = perturbed_id(instance, Hypothesis::H3);
    perturbed.statement = replace_in(TextField::Statement, &instance.statement);
    for (i, option) in instance.options.iter().enumerate() {
        perturbed.options[i] = replace_in(TextField::Option(i), option);
    }
    if let Some(c) = perturbed.meta.conjunct.as_mut() {
        *c = pattern.replace_all(c, regex::NoExpand(&replacement)).into_owned();
        perturbed.meta.relevant_conjunct = Some(c.clone());
    }
    perturbed.meta.entities.remove("celebrity");
    perturbed.meta.entities.insert("generic_name".into(), replacement.clone());
    perturbed.meta.attributes.insert("replaced_celebrity".into(), celebrity);
    perturbed.meta.celebrity_span = None;
    Ok(MatchedPair {
        hypothesis: Hypothesis::H3,
        index,
        base_id: instance.id.clone(),
        original: Arm::plain(instance.clone()),
        perturbed: Arm::plain(perturbed),
        diff_spans: spans,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H4Style {
    /// `All roses are` becomes `Roses are`.
    DropAll,
    /// `Some`/`some` become `A subset of`/`a subset of`.
    Rephrase,
    /// Both rewrites at once.
    #[default]
    Both,
}

impl FromStr for H4Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop_all" => Ok(H4Style::DropAll),
            "rephrase" => Ok(H4Style::Rephrase),
            "both" => Ok(H4Style::Both),
            _ => Err(format!("unknown quantifier style `{s}`")),
        }
    }
}

fn check_quantifiers(instance: &ProblemInstance) -> Result<(), PairError> {
    if instance.meta.quantifiers.is_empty() {
        return Err(precondition(instance, "no quantifier spans recorded"));
    }
    for q in &instance.meta.quantifiers {
        if q.span.slice(&instance.statement) != Some(q.text.as_str()) {
            return Err(PairError::StaleSpans { id: instance.id.clone(), slot: q.slot });
        }
    }
    Ok(())
}

fn upper_first(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_lowercase().collect::<String>() + c.as_str()).unwrap_or_default()
}

/// Statement edits plus updated quantifier records.
fn rewrite_statement(instance: &ProblemInstance, edits: Vec<Edit>, new_texts: &[(QuantifierSlot, usize, String)]) -> ProblemInstance {
    let mut out = instance.clone();
    out.statement = apply_edits(&instance.statement, &edits);
    for q in &mut out.meta.quantifiers {
        if let Some((_, start, text)) = new_texts.iter().find(|(slot, _, _)| *slot == q.slot) {
            let s = shift(*start, &edits);
            q.span = crate::generator::Span::new(s, s + text.len());
            q.text = text.clone();
        } else {
            let s = shift(q.span.start, &edits);
            q.span = crate::generator::Span::new(s, s + q.text.len());
        }
    }
    out
}

/// Rewrite quantifiers. Already-rewritten slots are left alone, so
/// applying the operator twice equals applying it once.
pub fn rewrite_quantifiers(instance: &ProblemInstance, style: H4Style) -> Result<(ProblemInstance, Vec<DiffSpan>), PairError> {
    if instance.fallacy_kind != FallacyKind::Syllogism {
        return Err(precondition(instance, "quantifier rewriting needs a syllogism"));
    }
    check_quantifiers(instance)?;
    let text = &instance.statement;
    let mut edits = Vec::new();
    let mut new_texts = Vec::new();
    for q in &instance.meta.quantifiers {
        match (q.slot, q.text.as_str(), style) {
            (QuantifierSlot::All, "All", H4Style::DropAll | H4Style::Both) => {
                // Remove "All " and capitalize the subject's first letter.
                let subject_start = q.span.end + 1;
                let first_len = text[subject_start..].chars().next().map_or(0, char::len_utf8);
                let end = subject_start + first_len;
                let after = upper_first(&text[subject_start..end]);
                edits.push(Edit { start: q.span.start, end, after });
                new_texts.push((q.slot, q.span.start, String::new()));
            }
            (QuantifierSlot::SomePremise, "Some", H4Style::Rephrase | H4Style::Both) => {
                edits.push(Edit { start: q.span.start, end: q.span.end, after: "A subset of".into() });
                new_texts.push((q.slot, q.span.start, "A subset of".into()));
            }
            (QuantifierSlot::SomeConclusion, "some", H4Style::Rephrase | H4Style::Both) => {
                edits.push(Edit { start: q.span.start, end: q.span.end, after: "a subset of".into() });
                new_texts.push((q.slot, q.span.start, "a subset of".into()));
            }
            _ => {}
        }
    }
    let spans = edits
        .iter()
        .map(|e| span(TextField::Statement, e.start, e.end, &text[e.start..e.end], &e.after))
        .collect();
    let mut out = rewrite_statement(instance, edits, &new_texts);
    if out.statement != instance.statement {
        out.meta.attributes.insert("quantifier_style".into(), format!("{style:?}").to_ascii_lowercase());
    }
    Ok((out, spans))
}

/// Original arm keeps the quantifiers; the perturbed arm rewrites them.
pub fn perturb_h4(instance: &ProblemInstance, style: H4Style, index: usize) -> Result<MatchedPair, PairError> {
    let (mut perturbed, spans) = rewrite_quantifiers(instance, style)?;
    perturbed.id = perturbed_id(instance, Hypothesis::H4);
    Ok(MatchedPair {
        hypothesis: Hypothesis::H4,
        index,
        base_id: instance.id.clone(),
        original: Arm::plain(instance.clone()),
        perturbed: Arm::plain(perturbed),
        diff_spans: spans,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramingMode {
    /// Reputable news source and university.
    #[default]
    Gold,
    /// Dubious news source and an anonymous blog.
    Random,
}

impl FromStr for FramingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" => Ok(FramingMode::Gold),
            "random" => Ok(FramingMode::Random),
            _ => Err(format!("unknown framing mode `{s}`")),
        }
    }
}

/// Prefix both premises of a quantifier-rewritten syllogism with source
/// attributions. The conclusion is untouched.
pub fn perturb_h5(
    instance: &ProblemInstance,
    corpus: &Corpus,
    mode: FramingMode,
    sampler: &mut SeededSampler,
    index: usize,
) -> Result<MatchedPair, PairError> {
    check_quantifiers(instance)?;
    let slot = |s: QuantifierSlot| instance.meta.quantifiers.iter().find(|q| q.slot == s);
    let (Some(all), Some(some)) = (slot(QuantifierSlot::All), slot(QuantifierSlot::SomePremise)) else {
        return Err(precondition(instance, "missing premise quantifier slots"));
    };
    if !all.text.is_empty() || some.text != "A subset of" {
        return Err(precondition(instance, "framing applies to the quantifier-rewritten form only"));
    }
    if instance.meta.framing.is_some() {
        return Err(precondition(instance, "instance is already framed"));
    }
    let text = &instance.statement;
    let (source_pool, framing) = match mode {
        FramingMode::Gold => (PoolKind::NewsSourceReputable, "reputable"),
        FramingMode::Random => (PoolKind::NewsSourceDubious, "dubious"),
    };
    let source = corpus.pool(source_pool).sample(sampler).value.clone();
    let institution = match mode {
        FramingMode::Gold => Some(corpus.pool(PoolKind::UniversityReputable).sample(sampler).value.clone()),
        FramingMode::Random => None,
    };

    let p1 = all.span.start;
    let p1_first = text[p1..].chars().next().map_or(0, char::len_utf8);
    let p2 = some.span.start;
    let prefix1 = format!("In a recent publication by {source}, it was noted that ");
    let prefix2 = match &institution {
        Some(u) => format!("Research from {u} supports the finding that "),
        None => "An anonymous blog post writes the finding that ".to_string(),
    };
    let edits = vec![
        Edit { start: p1, end: p1 + p1_first, after: prefix1 + &lower_first(&text[p1..p1 + p1_first]) },
        Edit { start: p2, end: p2 + 1, after: prefix2 + &lower_first(&text[p2..p2 + 1]) },
    ];
    let spans = edits
        .iter()
        .map(|e| span(TextField::Statement, e.start, e.end, &text[e.start..e.end], &e.after))
        .collect();
    let moved_some = shift(p2, &edits) + edits[1].after.len() - 1;
    let mut perturbed = rewrite_statement(instance, edits, &[]);
    for q in &mut perturbed.meta.quantifiers {
        if q.slot == QuantifierSlot::SomePremise {
            q.text = "a subset of".into();
            q.span = crate::generator::Span::new(moved_some, moved_some + q.text.len());
        }
    }
    perturbed.id = perturbed_id(instance, Hypothesis::H5);
    perturbed.meta.framing = Some(framing.into());
    perturbed.meta.entities.insert("source".into(), source);
    if let Some(u) = institution {
        perturbed.meta.entities.insert("institution".into(), u);
    }
    Ok(MatchedPair {
        hypothesis: Hypothesis::H5,
        index,
        base_id: instance.id.clone(),
        original: Arm::plain(instance.clone()),
        perturbed: Arm::plain(perturbed),
        diff_spans: spans,
    })
}

/// The perturbed arm carries a hint paragraph; the problem is unchanged.
pub fn perturb_h6(instance: &ProblemInstance, level: HintLevel, index: usize) -> MatchedPair {
    let original = Arm::plain(instance.clone());
    let mut hinted = instance.clone();
    hinted.id = perturbed_id(instance, Hypothesis::H6);
    let perturbed = Arm { instance: hinted, exemplar: None, hint: Some(level) };
    let before = original.field_text(TextField::Preamble).unwrap_or_default();
    let after = perturbed.field_text(TextField::Preamble).unwrap_or_default();
    // Every hint begins with the instruction, so the diff is an insertion.
    let diff = if let Some(rest) = after.strip_prefix(before.as_str()) {
        span(TextField::Preamble, before.len(), before.len(), "", rest)
    } else {
        span(TextField::Preamble, 0, before.len(), &before, &after)
    };
    MatchedPair {
        hypothesis: Hypothesis::H6,
        index,
        base_id: instance.id.clone(),
        original,
        perturbed,
        diff_spans: vec![diff],
    }
}

/// Subject, category and trait of a (possibly rewritten or framed)
/// `All/Some/Therefore some` syllogism.
pub fn syllogism_slots(statement: &str) -> Option<(String, String, String)> {
    static RE: std::sync::LazyLock<Regex> = std::sync::LazyLock::new(|| {
        Regex::new(
            r"^(?:In a recent publication by .+?, it was noted that )?(?:All )?(?P<obj>.+?) are (?P<cat>.+?)\. (?:Research from .+? supports the finding that |An anonymous blog post writes the finding that )?(?:Some|A subset of|a subset of) (?P<mid>.+?)\. Therefore, (?:some|a subset of) (?P<end>.+?)\.$",
        )
        .expect("valid pattern")
    });
    let c = RE.captures(statement)?;
    let obj = lower_first(&c["obj"]);
    let cat = &c["cat"];
    let trait_ = c["mid"].strip_prefix(cat)?.strip_prefix(' ')?;
    let tail = c["end"].strip_prefix(obj.as_str())?.strip_prefix(' ')?;
    (tail == trait_).then(|| (obj.clone(), cat.to_string(), trait_.to_string()))
}

/// Options controlling pair construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    #[serde(default)]
    pub h4_style: H4Style,
    #[serde(default)]
    pub h5_mode: FramingMode,
    /// Hint level recorded on hint-leak pairs. Experiments override it per
    /// control method.
    #[serde(default = "strong_hint")]
    pub h6_level: HintLevel,
}

fn strong_hint() -> HintLevel {
    HintLevel::Strong
}

impl Default for PairOptions {
    fn default() -> Self {
        Self { h4_style: H4Style::default(), h5_mode: FramingMode::default(), h6_level: strong_hint() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Pair(#[from] PairError),
}

/// Generate the instances a hypothesis needs, in dataset order.
pub fn generate_for(hypothesis: Hypothesis, n: usize, seed: u64, generator: &Generator) -> Result<Vec<ProblemInstance>, GenerationError> {
    let mix = hypothesis.dataset_mix();
    let weights: Vec<usize> = mix.iter().map(|(_, w)| *w).collect();
    let mut out = Vec::with_capacity(n);
    for ((kind, _), count) in mix.iter().zip(split_counts(n, &weights)) {
        out.extend(generator.generate(*kind, count, seed)?);
    }
    Ok(out)
}

/// Build one pair for `instance` at dataset position `index`.
pub fn make_pair(
    hypothesis: Hypothesis,
    instance: &ProblemInstance,
    index: usize,
    seed: u64,
    corpus: &Corpus,
    options: &PairOptions,
) -> Result<MatchedPair, PairError> {
    let mut sampler = SeededSampler::new(derive_seed(derive_seed(seed, hypothesis.as_str()), &instance.id), "pair");
    match hypothesis {
        Hypothesis::H1 => perturb_h1(instance, index),
        Hypothesis::H2 => Ok(perturb_h2(instance, index)),
        Hypothesis::H3 => perturb_h3(instance, corpus.pool(PoolKind::GenericName), &mut sampler, index),
        Hypothesis::H4 => perturb_h4(instance, options.h4_style, index),
        Hypothesis::H5 => {
            let (mut rewritten, _) = rewrite_quantifiers(instance, H4Style::Both)?;
            rewritten.id = perturbed_id(instance, Hypothesis::H4);
            let mut pair = perturb_h5(&rewritten, corpus, options.h5_mode, &mut sampler, index)?;
            pair.base_id = instance.id.clone();
            Ok(pair)
        }
        Hypothesis::H6 => Ok(perturb_h6(instance, options.h6_level, index)),
    }
}

/// Generate and pair a full dataset of `n` pairs.
pub fn build_pairs(
    hypothesis: Hypothesis,
    n: usize,
    seed: u64,
    generator: &Generator,
    options: &PairOptions,
) -> Result<Vec<MatchedPair>, DatasetError> {
    let instances = generate_for(hypothesis, n, seed, generator)?;
    pair_instances(hypothesis, &instances, seed, generator.corpus(), options)
}

/// Pair already generated instances.
pub fn pair_instances(
    hypothesis: Hypothesis,
    instances: &[ProblemInstance],
    seed: u64,
    corpus: &Corpus,
    options: &PairOptions,
) -> Result<Vec<MatchedPair>, DatasetError> {
    instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let pair = make_pair(hypothesis, inst, i, seed, corpus, options)?;
            verify_pair(&pair)?;
            Ok(pair)
        })
        .collect()
}

pub fn pairs_to_jsonl(pairs: &[MatchedPair]) -> String {
    pairs.iter().map(|p| serde_json::to_string(p).expect("pairs serialize") + "\n").collect()
}

pub fn pairs_from_jsonl(text: &str) -> Result<Vec<MatchedPair>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{syllogism_statement, Answer, InstanceMeta, InstanceSeed, QuestionStyle, StubCompleter};

    fn rose() -> ProblemInstance {
        let (statement, quantifiers) = syllogism_statement("roses", "flowers", "fade quickly");
        let mut meta = InstanceMeta { quantifiers, ..Default::default() };
        meta.entities.insert("object".into(), "roses".into());
        ProblemInstance {
            id: "syllogism-0-00000".into(),
            fallacy_kind: FallacyKind::Syllogism,
            statement,
            options: vec![],
            question_style: QuestionStyle::YesNo,
            gold: Answer::NO,
            meta,
        }
    }

    fn kai() -> ProblemInstance {
        let mut meta = InstanceMeta::default();
        meta.connector = Some("and".into());
        meta.conjunct = Some("participates in cultural preservation organizations".into());
        meta.relevant_conjunct = meta.conjunct.clone();
        meta.irrelevant_conjunct = Some("learns to play the ukulele".into());
        ProblemInstance {
            id: "conj_v1-0-00000".into(),
            fallacy_kind: FallacyKind::ConjV1,
            statement: "Kai is a community leader of Pacific Islander descent. He holds degrees in Public Administration and is passionate about preserving his cultural heritage. Which is more probable?".into(),
            options: vec![
                "Kai is a law enforcement worker.".into(),
                "Kai is a law enforcement worker and participates in cultural preservation organizations.".into(),
            ],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(0),
            meta,
        }
    }

    #[test]
    fn kai_h1() {
        let pair = perturb_h1(&kai(), 0).unwrap();
        assert_eq!(pair.perturbed.instance.options[1], "Kai is a law enforcement worker and learns to play the ukulele.");
        assert_eq!(pair.original.instance.gold, pair.perturbed.instance.gold);
        assert_eq!(pair.diff_spans.len(), 1);
        let d = &pair.diff_spans[0];
        assert_eq!(d.before, "participates in cultural preservation organizations");
        assert_eq!(&pair.original.instance.options[1][d.start..d.end], d.before);
        verify_pair(&pair).unwrap();
    }

    #[test]
    fn h1_requires_irrelevant() {
        let mut k = kai();
        k.meta.irrelevant_conjunct = None;
        assert!(matches!(perturb_h1(&k, 0), Err(PairError::Precondition { .. })));
    }

    #[test]
    fn rose_h4_and_idempotence() {
        let pair = perturb_h4(&rose(), H4Style::Both, 0).unwrap();
        assert_eq!(
            pair.perturbed.instance.statement,
            "Roses are flowers. A subset of flowers fade quickly. Therefore, a subset of roses fade quickly."
        );
        verify_pair(&pair).unwrap();
        let again = perturb_h4(&pair.perturbed.instance, H4Style::Both, 0).unwrap();
        assert_eq!(again.perturbed.instance.statement, pair.perturbed.instance.statement);
        assert!(again.diff_spans.is_empty());
        assert_eq!(
            syllogism_slots(&pair.perturbed.instance.statement),
            syllogism_slots(&pair.original.instance.statement)
        );
        for d in &pair.diff_spans {
            assert!(["All r", "Some", "some"].contains(&d.before.as_str()), "{}", d.before);
        }
    }

    #[test]
    fn h4_single_styles() {
        let drop = perturb_h4(&rose(), H4Style::DropAll, 0).unwrap();
        assert!(drop.perturbed.instance.statement.starts_with("Roses are flowers. Some flowers"));
        let re = perturb_h4(&rose(), H4Style::Rephrase, 0).unwrap();
        assert!(re.perturbed.instance.statement.starts_with("All roses are flowers. A subset of"));
        verify_pair(&drop).unwrap();
        verify_pair(&re).unwrap();
    }

    #[test]
    fn h4_stale_spans() {
        let mut r = rose();
        r.statement = r.statement.replacen("All", "Each", 1);
        assert!(matches!(perturb_h4(&r, H4Style::Both, 0), Err(PairError::StaleSpans { .. })));
    }

    #[test]
    fn h5_gold_and_random() {
        let corpus = Corpus::bundled();
        let (rewritten, _) = rewrite_quantifiers(&rose(), H4Style::Both).unwrap();
        let mut s = SeededSampler::new(1, "t");
        let pair = perturb_h5(&rewritten, &corpus, FramingMode::Gold, &mut s, 0).unwrap();
        verify_pair(&pair).unwrap();
        let text = &pair.perturbed.instance.statement;
        let src = &pair.perturbed.instance.meta.entities["source"];
        let uni = &pair.perturbed.instance.meta.entities["institution"];
        assert!(text.starts_with(&format!("In a recent publication by {src}, it was noted that roses are flowers.")));
        assert!(text.contains(&format!("Research from {uni} supports the finding that a subset of flowers")));
        assert!(text.ends_with(" Therefore, a subset of roses fade quickly."));
        assert!(rewritten.statement.ends_with(" Therefore, a subset of roses fade quickly."));
        assert_eq!(syllogism_slots(text), syllogism_slots(&rose().statement));
        pair.perturbed.instance.check().unwrap();

        let pair = perturb_h5(&rewritten, &corpus, FramingMode::Random, &mut s, 0).unwrap();
        verify_pair(&pair).unwrap();
        assert!(pair.perturbed.instance.statement.contains("An anonymous blog post writes the finding that a subset of flowers"));
        assert!(perturb_h5(&rose(), &corpus, FramingMode::Gold, &mut s, 0).is_err());
    }

    #[test]
    fn bloomberg_mit_example() {
        let corpus = Corpus::bundled();
        let (rewritten, _) = rewrite_quantifiers(&rose(), H4Style::Both).unwrap();
        let mut s = SeededSampler::new(0, "t");
        let pair = (0..10_000u64)
            .map(|seed| {
                s = SeededSampler::new(seed, "t");
                perturb_h5(&rewritten, &corpus, FramingMode::Gold, &mut s, 0).unwrap()
            })
            .find(|p| p.perturbed.instance.meta.entities["source"] == "Bloomberg" && p.perturbed.instance.meta.entities["institution"] == "MIT")
            .unwrap();
        assert_eq!(
            pair.perturbed.instance.statement,
            "In a recent publication by Bloomberg, it was noted that roses are flowers. Research from MIT supports the finding that a subset of flowers fade quickly. Therefore, a subset of roses fade quickly."
        );
    }

    #[test]
    fn h2_and_h6_differ_in_blocks_only() {
        let k = kai();
        let p2 = perturb_h2(&k, 0);
        assert_eq!(p2.perturbed.instance.id, "conj_v1-0-00000/h2");
        assert_eq!(p2.original.instance, ProblemInstance { id: k.id.clone(), ..p2.perturbed.instance.clone() });
        assert!(p2.diff_spans[0].before.contains("Linda is 31 years old"));
        assert!(p2.diff_spans[0].after.contains("renewable energy company"));
        verify_pair(&p2).unwrap();

        let p6 = perturb_h6(&k, HintLevel::Weak, 0);
        assert_eq!(p6.diff_spans[0].before, "");
        assert!(p6.diff_spans[0].after.contains("Please be aware that this is a Linda Problem"));
        verify_pair(&p6).unwrap();
        let p6 = perturb_h6(&rose(), HintLevel::Strong, 0);
        assert!(p6.diff_spans[0].after.contains("Pay close attention to quantifiers such as 'All', 'Some', 'No'"));
    }

    #[test]
    fn taylor_swift_to_lauren() {
        let corpus = Corpus::bundled();
        let completer = StubCompleter::new(corpus.clone());
        let g = Generator::new(&corpus, &completer);
        let inst = (0..500)
            .map(|i| g.gen_variant6(&InstanceSeed::new(FallacyKind::ConjV6, 0, i)).unwrap())
            .find(|i| i.meta.entities["celebrity"] == "Taylor Swift")
            .unwrap();
        let mut lauren = None;
        for seed in 0..10_000 {
            let mut s = SeededSampler::new(seed, "t");
            let p = perturb_h3(&inst, corpus.pool(PoolKind::GenericName), &mut s, 0).unwrap();
            if p.perturbed.instance.meta.entities["generic_name"] == "Lauren" {
                lauren = Some(p);
                break;
            }
        }
        let pair = lauren.unwrap();
        verify_pair(&pair).unwrap();
        assert!(pair.perturbed.instance.statement.starts_with("Suppose Lauren is going to have another tour in 2027."));
        assert!(!pair.perturbed.instance.statement.contains("Taylor Swift"));
        assert!(pair.perturbed.instance.options.iter().all(|o| !o.contains("Taylor Swift")));
        assert_eq!(pair.original.instance.gold, pair.perturbed.instance.gold);
    }

    #[test]
    fn whole_word_replacement() {
        let re = whole_word("Ann");
        assert_eq!(re.replace_all("Ann met Anna and Ann.", "Bo"), "Bo met Anna and Bo.");
    }

    #[test]
    fn split_counts_default_mixes() {
        assert_eq!(split_counts(400, &[1, 1, 1, 1]), vec![100; 4]);
        assert_eq!(split_counts(800, &[1, 1, 1, 1, 1, 1, 2]), vec![100, 100, 100, 100, 100, 100, 200]);
        assert_eq!(split_counts(7, &[1, 1, 1]), vec![3, 2, 2]);
        assert_eq!(split_counts(0, &[1, 2]), vec![0, 0]);
    }

    #[test]
    fn hypothesis_defaults() {
        let n: Vec<usize> = Hypothesis::ALL.iter().map(|h| h.default_n()).collect();
        assert_eq!(n, [400, 500, 100, 200, 200, 800]);
        assert_eq!("h5".parse::<Hypothesis>().unwrap(), Hypothesis::H5);
        assert_eq!("3".parse::<Hypothesis>().unwrap(), Hypothesis::H3);
        for h in Hypothesis::ALL {
            let mix: usize = split_counts(h.default_n(), &h.dataset_mix().iter().map(|m| m.1).collect::<Vec<_>>()).iter().sum();
            assert_eq!(mix, h.default_n());
        }
    }

    #[test]
    fn build_small_datasets() {
        let corpus = Corpus::bundled();
        let completer = StubCompleter::new(corpus.clone());
        let g = Generator::new(&corpus, &completer);
        for h in Hypothesis::ALL {
            let pairs = build_pairs(h, 24, 5, &g, &PairOptions::default()).unwrap();
            assert_eq!(pairs.len(), 24);
            let text = pairs_to_jsonl(&pairs);
            assert_eq!(pairs_from_jsonl(&text).unwrap(), pairs);
        }
    }
}
