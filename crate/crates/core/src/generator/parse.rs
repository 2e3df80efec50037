//! Parsers turning raw completions into problem parts.
//!
//! Both the stub and remote completers go through these, so the stub
//! exercises the same path a real model response takes. Every parser
//! returns `Err(reason)` on malformed text.

use std::sync::LazyLock;

use regex::Regex;

use super::{split_terminal, Connector};

static WS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").unwrap());
static OPTION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*\(?([ab])[\).:]\s*(.+?)\s*$").unwrap());

pub fn normalize_ws(s: &str) -> String {
    WS.replace_all(s.trim(), " ").into_owned()
}

fn strip_quotes(s: &str) -> &str {
    s.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim()
}

fn first_sentence(s: &str) -> &str {
    let s = s.trim();
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    match line.find(". ") {
        Some(i) => &line[..=i],
        None => line,
    }
}

/// Bio text and the person's name (leading words before " is " or ",").
pub fn parse_bio(text: &str) -> Result<(String, String), String> {
    let bio = normalize_ws(strip_quotes(text));
    if bio.is_empty() {
        return Err("empty bio".into());
    }
    let cut = [bio.find(" is "), bio.find(',')].into_iter().flatten().min();
    let name = match cut {
        Some(i) => bio[..i].trim(),
        None => return Err("bio does not introduce a name".into()),
    };
    let words: Vec<&str> = name.split_whitespace().collect();
    if words.is_empty()
        || words.len() > 3
        || !words.iter().all(|w| w.chars().next().is_some_and(char::is_uppercase))
    {
        return Err(format!("cannot read a name from `{name}`"));
    }
    Ok((bio.clone(), name.to_string()))
}

/// A hobby sentence that begins with `name`; returns the predicate.
pub fn parse_hobby_sentence(text: &str, name: &str) -> Result<String, String> {
    let sentence = normalize_ws(strip_quotes(first_sentence(text)));
    let rest = sentence
        .strip_prefix(name)
        .ok_or_else(|| format!("hobby sentence does not begin with {name}: `{sentence}`"))?;
    let (body, _) = split_terminal(rest.trim());
    if body.is_empty() {
        return Err("empty hobby".into());
    }
    Ok(body.to_string())
}

/// A short free-standing activity.
pub fn parse_random_hobby(text: &str, name: &str) -> Result<String, String> {
    let sentence = normalize_ws(strip_quotes(first_sentence(text)));
    let sentence = sentence.strip_prefix(name).map(str::trim).unwrap_or(&sentence);
    let (body, _) = split_terminal(sentence);
    let body = strip_quotes(body);
    if body.is_empty() || body.contains('\n') {
        return Err("empty random hobby".into());
    }
    if body.split_whitespace().count() > 20 {
        return Err("random hobby is not short".into());
    }
    Ok(body.to_string())
}

/// The clause following the connector in the conjunctive option.
pub fn parse_story_completion(text: &str, prefix: &str, connector: Connector) -> Result<String, String> {
    let line = normalize_ws(strip_quotes(text.lines().find(|l| !l.trim().is_empty()).unwrap_or("")));
    let mut clause = line.as_str();
    // some models echo the option before completing it
    for lead in [prefix.trim(), "(b)"] {
        if let Some(rest) = clause.strip_prefix(lead) {
            clause = rest.trim();
        }
    }
    if let Some(rest) = clause.strip_prefix(connector.as_str()) {
        if rest.starts_with(' ') {
            clause = rest.trim();
        }
    }
    let (body, _) = split_terminal(clause);
    let body = strip_quotes(body);
    if body.is_empty() {
        return Err("empty completion".into());
    }
    if body.contains("(a)") || body.contains("(b)") {
        return Err("completion contains option markers".into());
    }
    Ok(body.to_string())
}

/// Question text and options of a generated quiz.
fn split_quiz(text: &str) -> Result<(String, Vec<String>), String> {
    let mut preamble = Vec::new();
    let mut options: Vec<(String, String)> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(cap) = OPTION_LINE.captures(line) {
            options.push((cap[1].to_ascii_lowercase(), cap[2].to_string()));
        } else if options.is_empty() {
            preamble.push(line);
        }
    }
    if options.len() != 2 || options[0].0 != "a" || options[1].0 != "b" {
        return Err(format!("expected options (a) and (b), found {}", options.len()));
    }
    Ok((normalize_ws(&preamble.join(" ")), options.into_iter().map(|(_, t)| normalize_ws(&t)).collect()))
}

/// Identify which option is the single event and what the other adds.
///
/// Accepts `"S and X"` / `"X and S"` style pairs for the given connector.
fn single_and_conjunct(a: &str, b: &str, connector: &str) -> Result<(String, String), String> {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let (short_base, _) = split_terminal(short);
    let (long_base, _) = split_terminal(long);
    let joiner = format!(" {connector} ");
    if let Some(rest) = long_base.strip_prefix(short_base) {
        if let Some(conj) = rest.strip_prefix(joiner.as_str()) {
            if !conj.trim().is_empty() {
                return Ok((short.to_string(), conj.trim().to_string()));
            }
        }
    }
    if connector == "and" {
        if let Some(rest) = long_base.strip_suffix(short_base) {
            if let Some(conj) = rest.strip_suffix(" and ") {
                if !conj.trim().is_empty() {
                    return Ok((short.to_string(), conj.trim().to_string()));
                }
            }
        }
    }
    Err(format!("options are not a single event and its conjunction: `{a}` / `{b}`"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConjunction {
    pub statement: String,
    pub single: String,
    pub conjunct: String,
}

/// Patient vignette quiz: both options carry `symptom_one`; the longer adds
/// one more symptom (which must contain `symptom_two` when given).
pub fn parse_disease_quiz(
    text: &str,
    disease: &str,
    symptom_one: &str,
    symptom_two: Option<&str>,
) -> Result<ParsedConjunction, String> {
    let (preamble, options) = split_quiz(text)?;
    let lower = preamble.to_lowercase();
    let q = ["which one is more likely?", "which is more likely?"]
        .iter()
        .find_map(|q| lower.find(q).map(|i| (i, q.len())))
        .ok_or("missing the likelihood question")?;
    let statement = format!("{} Which one is more likely?", preamble[..q.0].trim());
    if !statement.to_lowercase().contains(&disease.to_lowercase()) {
        return Err(format!("statement does not mention {disease}"));
    }
    let (single, conjunct) = single_and_conjunct(&options[0], &options[1], "and")?;
    let has = |hay: &str, needle: &str| hay.to_lowercase().contains(&needle.to_lowercase());
    if !has(&single, symptom_one) {
        return Err(format!("options do not share `{symptom_one}`"));
    }
    if let Some(two) = symptom_two {
        if !has(&conjunct, two) {
            return Err(format!("longer option does not add `{two}`"));
        }
    }
    Ok(ParsedConjunction { statement, single, conjunct })
}

/// `"Suppose {celebrity} ..."` scenario with a `but` conjunction.
pub fn parse_celebrity(completion: &str, celebrity: &str) -> Result<ParsedConjunction, String> {
    let trimmed = completion.trim_start();
    let full = if trimmed.starts_with("Suppose") {
        trimmed.to_string()
    } else {
        format!("Suppose {celebrity} {}", trimmed)
    };
    let (preamble, options) = split_quiz(&full)?;
    let cut = preamble.find("Which").ok_or("missing the likelihood question")?;
    let setup = preamble[..cut].trim();
    if !setup.contains(celebrity) {
        return Err(format!("scenario does not mention {celebrity}"));
    }
    let (setup_base, _) = split_terminal(setup);
    let statement = format!("{setup_base}. Which is more likely?");
    let (a_base, _) = split_terminal(&options[0]);
    let (b_base, _) = split_terminal(&options[1]);
    let conjunct = b_base
        .strip_prefix(a_base)
        .and_then(|r| r.strip_prefix(" but "))
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .ok_or_else(|| format!("option (b) does not extend (a) with `but`: `{}`", options[1]))?;
    Ok(ParsedConjunction { statement, single: format!("{a_base}."), conjunct: conjunct.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSyllogism {
    pub category: String,
    pub trait_phrase: String,
}

/// Three-line `All/Some/Therefore some` argument about `object`.
pub fn parse_syllogism(completion: &str, object: &str) -> Result<ParsedSyllogism, String> {
    let trimmed = completion.trim_start();
    let full = if trimmed.starts_with("All ") {
        trimmed.to_string()
    } else {
        format!("All {object} are {trimmed}")
    };
    let mut lines: Vec<String> = full
        .lines()
        .map(normalize_ws)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() == 1 {
        lines = lines[0]
            .split_inclusive(". ")
            .map(|s| s.trim().to_string())
            .collect();
    }
    if lines.len() < 3 {
        return Err("expected three lines".into());
    }
    let l1 = split_terminal(&lines[0]).0;
    let head = format!("All {object} are ");
    let category = l1.strip_prefix(&head).ok_or_else(|| format!("first premise is not `{head}...`"))?.trim();
    if category.is_empty() {
        return Err("empty category".into());
    }
    let l2 = split_terminal(&lines[1]).0;
    let some_head = format!("some {category} ");
    if !l2.to_lowercase().starts_with(&some_head.to_lowercase()) {
        return Err(format!("second premise is not `Some {category} ...`"));
    }
    let trait_phrase = l2[some_head.len()..].trim();
    let l3 = split_terminal(&lines[2]).0;
    let l3_body = l3
        .strip_prefix("Therefore,")
        .or_else(|| l3.strip_prefix("Therefore"))
        .ok_or("conclusion does not start with `Therefore`")?
        .trim();
    let expected = format!("some {object} {trait_phrase}");
    if !l3_body.eq_ignore_ascii_case(&expected) {
        return Err(format!("conclusion `{l3_body}` does not match `{expected}`"));
    }
    if trait_phrase.is_empty() {
        return Err("empty trait".into());
    }
    Ok(ParsedSyllogism { category: category.to_string(), trait_phrase: trait_phrase.to_string() })
}
