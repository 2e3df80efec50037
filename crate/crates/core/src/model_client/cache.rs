//! Content-addressed response cache.
//!
//! Layout: one `<digest>.json` file per response plus `index.jsonl`, an
//! append-only manifest with one line per stored digest.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ClientError;
use crate::prompting::Message;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub model_name: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLine {
    digest: String,
    model_name: String,
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    base_url: &'a str,
    model_name: &'a str,
    temperature: f64,
    messages: &'a [Message],
    salt: &'a str,
}

/// Hex sha256 over the request identity.
pub fn request_digest(base_url: &str, model_name: &str, temperature: f64, messages: &[Message], salt: &str) -> String {
    let material = KeyMaterial { base_url, model_name, temperature, messages, salt };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    manifest: Mutex<HashSet<String>>,
}

impl ResponseCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ClientError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| ClientError::Cache(format!("{}: {e}", dir.display())))?;
        let mut known = HashSet::new();
        if let Ok(text) = fs::read_to_string(dir.join("index.jsonl")) {
            for line in text.lines() {
                if let Ok(l) = serde_json::from_str::<ManifestLine>(line) {
                    known.insert(l.digest);
                }
            }
        }
        Ok(Self { dir, manifest: Mutex::new(known) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn get(&self, digest: &str) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.path(digest)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Store atomically (temp file then rename) and record in the manifest.
    pub fn put(&self, entry: &CacheEntry) -> Result<(), ClientError> {
        let err = |e: std::io::Error| ClientError::Cache(e.to_string());
        let target = self.path(&entry.digest);
        let tmp = self.dir.join(format!(".{}.{:?}.tmp", entry.digest, std::thread::current().id()));
        fs::write(&tmp, serde_json::to_vec_pretty(entry).expect("entry serializes")).map_err(err)?;
        fs::rename(&tmp, &target).map_err(err)?;
        let mut known = self.manifest.lock().expect("manifest lock");
        if known.insert(entry.digest.clone()) {
            let line = serde_json::to_string(&ManifestLine { digest: entry.digest.clone(), model_name: entry.model_name.clone() })
                .expect("manifest line serializes");
            let mut f = OpenOptions::new().create(true).append(true).open(self.dir.join("index.jsonl")).map_err(err)?;
            writeln!(f, "{line}").map_err(err)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.manifest.lock().expect("manifest lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let d = request_digest("http://x", "m", 0.0, &[Message::user("hi")], "");
        assert!(cache.get(&d).is_none());
        let entry = CacheEntry { digest: d.clone(), model_name: "m".into(), text: "The answer is (a).".into() };
        cache.put(&entry).unwrap();
        cache.put(&entry).unwrap();
        assert_eq!(cache.get(&d), Some(entry));
        let reopened = ResponseCache::open(dir.path()).unwrap();
        assert_eq!(reopened.len(), 1);
    }

    #[test]
    fn digest_depends_on_every_field() {
        let m = [Message::user("hi")];
        let base = request_digest("u", "m", 0.0, &m, "");
        assert_eq!(base.len(), 64);
        assert_ne!(base, request_digest("v", "m", 0.0, &m, ""));
        assert_ne!(base, request_digest("u", "n", 0.0, &m, ""));
        assert_ne!(base, request_digest("u", "m", 0.5, &m, ""));
        assert_ne!(base, request_digest("u", "m", 0.0, &[Message::user("ho")], ""));
        assert_ne!(base, request_digest("u", "m", 0.0, &m, "retry-1"));
    }
}
