// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shape-preserving random replacement of gold-argument words.

use crate::corpus::{Corpus, EventInstance};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

/// Default stop-word list, comma separated across lines.
pub const DEFAULT_STOP_WORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharClass {
    Upper,
    Lower,
    Digit,
    Literal(char),
}

/// Per-character case/digit profile of a token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShapeProfile(Vec<CharClass>);

impl ShapeProfile {
    pub fn of(token: &str) -> Self {
        ShapeProfile(
            token
                .chars()
                .map(|c| match c {
                    'A'..='Z' => CharClass::Upper,
                    'a'..='z' => CharClass::Lower,
                    '0'..='9' => CharClass::Digit,
                    other => CharClass::Literal(other),
                })
                .collect(),
        )
    }

    pub fn classes(&self) -> &[CharClass] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_all_literal(&self) -> bool {
        self.0.iter().all(|c| matches!(c, CharClass::Literal(_)))
    }

    /// Compact notation, e.g. `Xxxxxx-dd`.
    pub fn notation(&self) -> String {
        self.0
            .iter()
            .map(|c| match c {
                CharClass::Upper => 'X',
                CharClass::Lower => 'x',
                CharClass::Digit => 'd',
                CharClass::Literal(c) => *c,
            })
            .collect()
    }
}

fn sample(profile: &ShapeProfile, rng: &mut impl Rng) -> String {
    profile
        .classes()
        .iter()
        .map(|c| match c {
            CharClass::Upper => rng.gen_range(b'A'..=b'Z') as char,
            CharClass::Lower => rng.gen_range(b'a'..=b'z') as char,
            CharClass::Digit => rng.gen_range(b'0'..=b'9') as char,
            CharClass::Literal(c) => *c,
        })
        .collect()
}

/// Random token with the same shape as `token`, different from it unless
/// every character is literal.
pub fn nonce_token(token: &str, profile: &ShapeProfile, rng: &mut impl Rng) -> String {
    if profile.is_all_literal() {
        return token.to_string();
    }
    loop {
        let candidate = sample(profile, rng);
        if candidate != token {
            return candidate;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonceConfig {
    pub seed: u64,
    /// Lower-cased stop words.
    pub stop_words: BTreeSet<String>,
    pub n_seeds_for_averaging: usize,
}

impl NonceConfig {
    pub fn new(seed: u64) -> Self {
        NonceConfig {
            seed,
            stop_words: parse_stop_words(DEFAULT_STOP_WORDS),
            n_seeds_for_averaging: 5,
        }
    }

    pub fn with_stop_words(mut self, words: BTreeSet<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Config("stop-word list is empty".into()));
        }
        self.stop_words = words;
        Ok(self)
    }

    pub fn is_stop_word(&self, word: &str) -> bool {
        self.stop_words.contains(&word.to_lowercase())
    }
}

/// Comma- and/or newline-separated list; case-folded, blanks dropped.
pub fn parse_stop_words(text: &str) -> BTreeSet<String> {
    text.split([',', '\n', '\r'])
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn load_stop_words(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stop_words(&text))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub doc_id: String,
    pub word: usize,
    pub original: String,
    pub replacement: String,
}

/// Generator for one document, independent of processing order.
pub fn doc_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Replace every non-stop word inside the gold spans of `instances`.
/// Each affected word is replaced once, in word order within its document.
pub fn nonce_perturb(corpus: &Corpus, instances: &[EventInstance], cfg: &NonceConfig) -> (Corpus, Vec<Replacement>) {
    let mut targets: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for inst in instances {
        targets
            .entry(inst.doc_id.as_str())
            .or_default()
            .extend(inst.arg_span.iter());
    }
    let mut log = Vec::new();
    let perturbed = corpus.with_words(|doc| {
        let mut words = doc.words.clone();
        let Some(idxs) = targets.get(doc.doc_id.as_str()) else {
            return words;
        };
        let mut rng = doc_rng(cfg.seed, &doc.doc_id);
        for &i in idxs {
            let original = &doc.words[i];
            if cfg.is_stop_word(original) {
                continue;
            }
            let replacement = nonce_token(original, &ShapeProfile::of(original), &mut rng);
            log.push(Replacement {
                doc_id: doc.doc_id.clone(),
                word: i,
                original: original.clone(),
                replacement: replacement.clone(),
            });
            words[i] = replacement;
        }
        words
    });
    (perturbed, log)
}

pub fn nonce_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("nonce-seed{seed}"))
}

pub const NONCE_CORPUS_FILE: &str = "corpus.jsonl";
pub const REPLACEMENTS_FILE: &str = "replacements.jsonl";

/// Write `out_dir/nonce-seed<k>/{corpus.jsonl, replacements.jsonl}`.
pub fn write_nonce_set(out_dir: &Path, seed: u64, corpus: &Corpus, log: &[Replacement]) -> Result<PathBuf> {
    let dir = nonce_dir(out_dir, seed);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    corpus.write_jsonl(&dir.join(NONCE_CORPUS_FILE))?;
    let mut text = String::new();
    for r in log {
        text.push_str(&serde_json::to_string(r).expect("replacement serialises"));
        text.push('\n');
    }
    let path = dir.join(REPLACEMENTS_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}
