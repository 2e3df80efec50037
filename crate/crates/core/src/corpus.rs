//! Entity pools and deterministic sampling.
//!
//! Pool files are line-delimited JSON, one object per line:
//!
//! ```text
//! {"kind": "disease", "value": "influenza", "attrs": {"symptoms": ["fever", "chills"]}}
//! ```
//!
//! Blank lines are skipped; comments are not allowed. The crate ships a
//! curated pool for every kind, see [`Corpus::bundled`].

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("reading pool file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {kind} pool entry `{entry}`: {message}")]
    Validation {
        kind: PoolKind,
        entry: String,
        message: String,
    },
    #[error("{0} pool is empty")]
    Empty(PoolKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    Occupation,
    Celebrity,
    GenericName,
    Object,
    Disease,
    NewsSourceReputable,
    NewsSourceDubious,
    UniversityReputable,
    StorySeed,
    Gender,
    Race,
    AgeRange,
}

impl PoolKind {
    pub const ALL: [PoolKind; 12] = [
        PoolKind::Occupation,
        PoolKind::Celebrity,
        PoolKind::GenericName,
        PoolKind::Object,
        PoolKind::Disease,
        PoolKind::NewsSourceReputable,
        PoolKind::NewsSourceDubious,
        PoolKind::UniversityReputable,
        PoolKind::StorySeed,
        PoolKind::Gender,
        PoolKind::Race,
        PoolKind::AgeRange,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PoolKind::Occupation => "occupation",
            PoolKind::Celebrity => "celebrity",
            PoolKind::GenericName => "generic_name",
            PoolKind::Object => "object",
            PoolKind::Disease => "disease",
            PoolKind::NewsSourceReputable => "news_source_reputable",
            PoolKind::NewsSourceDubious => "news_source_dubious",
            PoolKind::UniversityReputable => "university_reputable",
            PoolKind::StorySeed => "story_seed",
            PoolKind::Gender => "gender",
            PoolKind::Race => "race",
            PoolKind::AgeRange => "age_range",
        }
    }
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PoolKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown pool kind `{s}`"))
    }
}

/// One record of a pool file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub kind: PoolKind,
    pub value: String,
    #[serde(default)]
    pub attrs: Map<String, Value>,
}

impl PoolEntry {
    pub fn attr_str(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).and_then(Value::as_str)
    }

    pub fn attr_u64(&self, key: &str) -> Option<u64> {
        self.attrs.get(key).and_then(Value::as_u64)
    }

    pub fn attr_list(&self, key: &str) -> Vec<&str> {
        self.attrs
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default()
    }

    /// Symptom list of a disease entry.
    pub fn symptoms(&self) -> Vec<&str> {
        self.attr_list("symptoms")
    }

    /// Ordered sentences of a story seed.
    pub fn sentences(&self) -> Vec<&str> {
        self.attr_list("sentences")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityPool {
    kind: PoolKind,
    entries: Vec<PoolEntry>,
}

impl EntityPool {
    /// Validate and build a pool.
    pub fn new(kind: PoolKind, entries: Vec<PoolEntry>) -> Result<Self, CorpusError> {
        if entries.is_empty() {
            return Err(CorpusError::Empty(kind));
        }
        let mut seen = HashSet::new();
        for entry in &entries {
            let invalid = |message: &str| CorpusError::Validation {
                kind,
                entry: entry.value.clone(),
                message: message.to_string(),
            };
            if entry.kind != kind {
                return Err(invalid(&format!("record kind is {}", entry.kind)));
            }
            if entry.value.trim().is_empty() {
                return Err(invalid("empty value"));
            }
            if !seen.insert(entry.value.as_str()) {
                return Err(invalid("duplicate entry"));
            }
            match kind {
                PoolKind::Disease => {
                    let symptoms = entry.symptoms();
                    let distinct: HashSet<_> = symptoms.iter().filter(|s| !s.trim().is_empty()).collect();
                    if distinct.len() < 2 {
                        return Err(invalid("a disease needs at least 2 distinct symptoms"));
                    }
                }
                PoolKind::StorySeed => {
                    let sentences = entry.sentences();
                    if sentences.len() < 3 || sentences.iter().any(|s| s.trim().is_empty()) {
                        return Err(invalid("a story seed needs at least 3 non-empty sentences"));
                    }
                }
                PoolKind::AgeRange => match (entry.attr_u64("min"), entry.attr_u64("max")) {
                    (Some(lo), Some(hi)) if lo <= hi => {}
                    _ => return Err(invalid("an age range needs integer min <= max")),
                },
                _ => {}
            }
        }
        Ok(Self { kind, entries })
    }

    pub fn kind(&self) -> PoolKind {
        self.kind
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, value: &str) -> Option<&PoolEntry> {
        self.entries.iter().find(|e| e.value == value)
    }

    pub fn contains(&self, value: &str) -> bool {
        self.get(value).is_some()
    }

    /// Uniform draw.
    pub fn sample<'a>(&'a self, sampler: &mut SeededSampler) -> &'a PoolEntry {
        &self.entries[sampler.index(self.entries.len())]
    }

    /// Uniform draw excluding entries rejected by `skip`. Falls back to a
    /// plain draw when every entry is skipped.
    pub fn sample_where<'a>(
        &'a self,
        sampler: &mut SeededSampler,
        mut keep: impl FnMut(&PoolEntry) -> bool,
    ) -> &'a PoolEntry {
        let eligible: Vec<&PoolEntry> = self.entries.iter().filter(|e| keep(e)).collect();
        if eligible.is_empty() {
            return self.sample(sampler);
        }
        eligible[sampler.index(eligible.len())]
    }
}

/// Parse pool text.
pub fn parse_pool(text: &str, kind: PoolKind) -> Result<EntityPool, CorpusError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: PoolEntry = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    EntityPool::new(kind, entries)
}

pub fn load_pool(path: impl AsRef<Path>, kind: PoolKind) -> Result<EntityPool, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pool(&text, kind)
}

fn bundled_text(kind: PoolKind) -> &'static str {
    match kind {
        PoolKind::Occupation => include_str!("../data/pools/occupations.jsonl"),
        PoolKind::Celebrity => include_str!("../data/pools/celebrities.jsonl"),
        PoolKind::GenericName => include_str!("../data/pools/generic_names.jsonl"),
        PoolKind::Object => include_str!("../data/pools/objects.jsonl"),
        PoolKind::Disease => include_str!("../data/pools/diseases.jsonl"),
        PoolKind::NewsSourceReputable => include_str!("../data/pools/news_sources_reputable.jsonl"),
        PoolKind::NewsSourceDubious => include_str!("../data/pools/news_sources_dubious.jsonl"),
        PoolKind::UniversityReputable => include_str!("../data/pools/universities_reputable.jsonl"),
        PoolKind::StorySeed => include_str!("../data/pools/story_seeds.jsonl"),
        PoolKind::Gender => include_str!("../data/pools/genders.jsonl"),
        PoolKind::Race => include_str!("../data/pools/races.jsonl"),
        PoolKind::AgeRange => include_str!("../data/pools/age_ranges.jsonl"),
    }
}

/// File name used for each kind when writing or reading a pool directory.
pub fn pool_file_name(kind: PoolKind) -> &'static str {
    match kind {
        PoolKind::Occupation => "occupations.jsonl",
        PoolKind::Celebrity => "celebrities.jsonl",
        PoolKind::GenericName => "generic_names.jsonl",
        PoolKind::Object => "objects.jsonl",
        PoolKind::Disease => "diseases.jsonl",
        PoolKind::NewsSourceReputable => "news_sources_reputable.jsonl",
        PoolKind::NewsSourceDubious => "news_sources_dubious.jsonl",
        PoolKind::UniversityReputable => "universities_reputable.jsonl",
        PoolKind::StorySeed => "story_seeds.jsonl",
        PoolKind::Gender => "genders.jsonl",
        PoolKind::Race => "races.jsonl",
        PoolKind::AgeRange => "age_ranges.jsonl",
    }
}

/// One pool per kind.
#[derive(Debug, Clone)]
pub struct Corpus {
    pools: Vec<EntityPool>,
}

impl Corpus {
    /// The curated pools compiled into the crate.
    pub fn bundled() -> Self {
        let pools = PoolKind::ALL
            .into_iter()
            .map(|kind| parse_pool(bundled_text(kind), kind).expect("bundled pool is valid"))
            .collect();
        Self { pools }
    }

    /// Bundled pools, overridden by any `<kind file>.jsonl` found in `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let mut corpus = Self::bundled();
        for kind in PoolKind::ALL {
            let path = dir.as_ref().join(pool_file_name(kind));
            if path.exists() {
                corpus.replace(load_pool(&path, kind)?);
            }
        }
        Ok(corpus)
    }

    pub fn replace(&mut self, pool: EntityPool) {
        let slot = self.pools.iter_mut().find(|p| p.kind == pool.kind).expect("every kind present");
        *slot = pool;
    }

    pub fn pool(&self, kind: PoolKind) -> &EntityPool {
        self.pools.iter().find(|p| p.kind == kind).expect("every kind present")
    }
}

/// FNV-1a over bytes.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a label. Portable and stable
/// across releases.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    splitmix(parent ^ fnv1a64(label.as_bytes()))
}

/// ChaCha20 stream keyed by `seed`, with the stream id taken from the
/// FNV-1a hash of `stream_label`.
///
/// The same `(seed, stream_label)` always yields the same draw sequence on
/// every platform.
#[derive(Debug, Clone)]
pub struct SeededSampler {
    seed: u64,
    stream_label: String,
    rng: ChaCha20Rng,
    draws: u64,
}

impl SeededSampler {
    pub fn new(seed: u64, stream_label: impl Into<String>) -> Self {
        let stream_label = stream_label.into();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a64(stream_label.as_bytes()));
        Self { seed, stream_label, rng, draws: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_label(&self) -> &str {
        &self.stream_label
    }

    /// Number of draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.next_u64()
    }

    /// Uniform index in `0..len`. Sampled as `u64` so 32-bit targets agree.
    pub fn index(&mut self, len: usize) -> usize {
        assert!(len > 0, "cannot sample from an empty range");
        self.draws += 1;
        self.rng.random_range(0..len as u64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        self.draws += 1;
        self.rng.random_range(lo..=hi)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.draws += 1;
        // 53 random bits
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn coin(&mut self) -> bool {
        self.unit() < 0.5
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }
}
