//! Answer extraction from free text and grading against gold.
//!
//! Option choices go through three tiers, and the first tier that yields
//! anything decides:
//!
//! | tier | rule id | looks for |
//! |---|---|---|
//! | 1 | `choice.marker` | `answer is (x)`, `option (x)`, `choose (x)`... in the last sentence |
//! | 2 | `choice.last_paren` | the last `(x)` anywhere |
//! | 3 | `choice.bare_line` | a final line holding only a letter |
//!
//! Several different letters inside tier 1 count as a conflict and give no
//! answer. Yes/No extraction looks at the final sentence, then the first
//! sentence, then the whole text.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::generator::{Answer, ProblemInstance, QuestionStyle, Verdict};

static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:answer(?:\s+is)?|option|choose|chose|select(?:ed)?|pick)\s*:?\s*(?:option\s*)?\(([a-z])\)")
        .expect("valid pattern")
});
static MARKER_BARE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\banswer(?:\s+is)?\s*:?\s*([a-z])\s*[.!]?\s*$").expect("valid pattern"));
static PAREN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\(([a-z])\)").expect("valid pattern"));
static BARE_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\(?([a-z])\)?[.!]?$").expect("valid pattern"));
static YES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\byes\b").expect("valid pattern"));
static NO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bno\b").expect("valid pattern"));
static NEGATIVE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bnot\s+(?:logically\s+)?(?:sound|valid)\b|\binvalid\b|\bdoes\s+not\s+(?:necessarily\s+)?follow\b")
        .expect("valid pattern")
});
static POSITIVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:is|are)\s+(?:logically\s+)?(?:sound|valid)\b").expect("valid pattern"));

/// Split into sentences at `.`, `!`, `?` followed by whitespace, and at
/// line breaks. Empty pieces are dropped.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        let boundary = match b {
            b'\n' => Some(i),
            b'.' | b'!' | b'?' => match bytes.get(i + 1) {
                None => Some(i + 1),
                Some(n) if n.is_ascii_whitespace() => Some(i + 1),
                _ => None,
            },
            _ => None,
        };
        if let Some(end) = boundary {
            let piece = text[start..end].trim();
            if !piece.is_empty() {
                out.push(piece);
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn letter_index(m: &str, option_count: usize) -> Option<usize> {
    let c = m.chars().next()?.to_ascii_lowercase();
    let i = (c as u8).checked_sub(b'a')? as usize;
    (i < option_count).then_some(i)
}

/// Extracted option index and the rule that produced it.
pub fn extract_choice_with_rule(text: &str, option_count: usize) -> (Option<usize>, &'static str) {
    if let Some(last) = sentences(text).last() {
        let mut found: Vec<usize> = MARKER
            .captures_iter(last)
            .chain(MARKER_BARE.captures_iter(last))
            .filter_map(|c| letter_index(&c[1], option_count))
            .collect();
        found.sort_unstable();
        found.dedup();
        match found.as_slice() {
            [one] => return (Some(*one), "choice.marker"),
            [] => {}
            _ => return (None, "choice.marker_conflict"),
        }
    }
    if let Some(i) = PAREN.captures_iter(text).filter_map(|c| letter_index(&c[1], option_count)).last() {
        return (Some(i), "choice.last_paren");
    }
    if let Some(line) = text.lines().map(str::trim).filter(|l| !l.is_empty()).last() {
        if let Some(i) = BARE_LINE.captures(line).and_then(|c| letter_index(&c[1], option_count)) {
            return (Some(i), "choice.bare_line");
        }
    }
    (None, "none")
}

pub fn extract_choice(text: &str, option_count: usize) -> Option<usize> {
    extract_choice_with_rule(text, option_count).0
}

fn yes_no_signals(piece: &str) -> (bool, bool) {
    let negative = NEGATIVE.is_match(piece) || NO.is_match(piece);
    let positive = YES.is_match(piece) || POSITIVE.is_match(piece);
    (positive, negative)
}

/// `true` for Yes, `false` for No, plus the rule id.
pub fn extract_yes_no_with_rule(text: &str) -> (Option<bool>, &'static str) {
    let parts = sentences(text);
    let tiers: [(&'static str, Option<&str>); 2] =
        [("yesno.final_sentence", parts.last().copied()), ("yesno.first_sentence", parts.first().copied())];
    for (rule, piece) in tiers {
        let Some(piece) = piece else { continue };
        match yes_no_signals(piece) {
            (true, false) => return (Some(true), rule),
            (false, true) => return (Some(false), rule),
            (true, true) => return (None, "yesno.conflict"),
            (false, false) => {}
        }
    }
    match yes_no_signals(text) {
        (true, false) => (Some(true), "yesno.anywhere"),
        (false, true) => (Some(false), "yesno.anywhere"),
        (true, true) => (None, "yesno.conflict"),
        (false, false) => (None, "none"),
    }
}

pub fn extract_yes_no(text: &str) -> Option<bool> {
    extract_yes_no_with_rule(text).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GradeVerdict {
    Correct,
    Wrong,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeOutcome {
    pub verdict: GradeVerdict,
    pub extracted: Option<Answer>,
    pub rule_fired: String,
}

impl GradeOutcome {
    pub fn is_correct(&self) -> bool {
        self.verdict == GradeVerdict::Correct
    }
}

/// Extract an answer of the given style.
pub fn extract(style: QuestionStyle, option_count: usize, text: &str) -> (Option<Answer>, &'static str) {
    match style {
        QuestionStyle::ChooseOption => {
            let (i, rule) = extract_choice_with_rule(text, option_count);
            (i.map(Answer::Option), rule)
        }
        QuestionStyle::YesNo => {
            let (b, rule) = extract_yes_no_with_rule(text);
            (b.map(|yes| Answer::Verdict(if yes { Verdict::Yes } else { Verdict::No })), rule)
        }
    }
}

pub fn grade(instance: &ProblemInstance, response: &str) -> GradeOutcome {
    let (extracted, rule) = extract(instance.question_style, instance.options.len(), response);
    let verdict = match extracted {
        None => GradeVerdict::Invalid,
        Some(a) if a == instance.gold => GradeVerdict::Correct,
        Some(_) => GradeVerdict::Wrong,
    };
    GradeOutcome { verdict, extracted, rule_fired: rule.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{FallacyKind, InstanceMeta};

    fn conj(gold: usize) -> ProblemInstance {
        ProblemInstance {
            id: "g".into(),
            fallacy_kind: FallacyKind::ConjV1,
            statement: "s".into(),
            options: vec!["a.".into(), "a and b.".into()],
            question_style: QuestionStyle::ChooseOption,
            gold: Answer::Option(gold),
            meta: InstanceMeta::default(),
        }
    }

    fn syll() -> ProblemInstance {
        ProblemInstance {
            id: "s".into(),
            fallacy_kind: FallacyKind::Syllogism,
            statement: "All x are y.".into(),
            options: vec![],
            question_style: QuestionStyle::YesNo,
            gold: Answer::NO,
            meta: InstanceMeta::default(),
        }
    }

    #[test]
    fn choice_examples() {
        assert_eq!(extract_choice("The answer is (b).", 2), Some(1));
        assert_eq!(
            extract_choice_with_rule("Step 1 ... (b) looks tempting ... therefore option (a).", 2),
            (Some(0), "choice.marker")
        );
        assert_eq!(extract_choice("Both seem equally likely.", 2), None);
        assert_eq!(extract_choice_with_rule("I like (a). Then again (b) is good. Fine", 2), (Some(1), "choice.last_paren"));
        assert_eq!(extract_choice_with_rule("Thinking...\nB", 2), (Some(1), "choice.bare_line"));
        assert_eq!(extract_choice_with_rule("The answer is (a) or option (b).", 2), (None, "choice.marker_conflict"));
        assert_eq!(extract_choice("ANSWER: (A)", 2), Some(0));
        assert_eq!(extract_choice("Answer: b", 2), Some(1));
        assert_eq!(extract_choice("The answer is (c).", 2), None);
    }

    #[test]
    fn yes_no_examples() {
        assert_eq!(extract_yes_no("No, this is a syllogistic fallacy."), Some(false));
        assert_eq!(extract_yes_no("Yes."), Some(true));
        assert_eq!(extract_yes_no("It is not logically sound."), Some(false));
        assert_eq!(extract_yes_no("Maybe."), None);
        assert_eq!(extract_yes_no("Let us see. Roses are flowers. The argument is logically sound."), Some(true));
        assert_eq!(extract_yes_no("Yes and no."), None);
        assert_eq!(extract_yes_no_with_rule("No. The conclusion is a guess. Overall hard to say").1, "yesno.first_sentence");
    }

    #[test]
    fn grade_examples() {
        assert_eq!(grade(&conj(0), "option (a)").verdict, GradeVerdict::Correct);
        assert_eq!(grade(&conj(0), "option (b)").verdict, GradeVerdict::Wrong);
        let g = grade(&syll(), "Maybe");
        assert_eq!(g.verdict, GradeVerdict::Invalid);
        assert_eq!(g.extracted, None);
        assert_eq!(grade(&syll(), "No.").verdict, GradeVerdict::Correct);
    }

    #[test]
    fn permutation_consistency() {
        let original = conj(0);
        let swapped = crate::generator::apply_permutation(original.clone(), &[1, 0]);
        for (text, relabeled) in [("The answer is (a).", "The answer is (b)."), ("The answer is (b).", "The answer is (a).")] {
            assert_eq!(grade(&original, text).verdict, grade(&swapped, relabeled).verdict);
        }
    }

    #[test]
    fn sentence_split() {
        assert_eq!(sentences("A b. C d!\nE (a)."), vec!["A b.", "C d!", "E (a)."]);
        assert_eq!(sentences("3.5 is fine"), vec!["3.5 is fine"]);
    }
}
