// SPDX-License-Identifier: MIT OR Apache-2.0

//! Role-annotated document corpus.
//!
//! One JSON object per line:
//!
//! ```text
//! {"doc_id": "d1", "words": ["..."], "sentences": [[0, 12], [12, 30]],
//!  "events": [{"trigger": 4, "type": "conflict.attack",
//!              "args": [{"role": "target", "span": [7, 9]}]}]}
//! ```
//!
//! `trigger` is either a single word index or a `[beg, end)` span; spans
//! longer than one word are multi-word triggers and are dropped by
//! [`filter_instances`] when requested.

use crate::error::{Error, Result};
use crate::span::Span;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TriggerRef {
    Word(usize),
    Span([usize; 2]),
}

impl TriggerRef {
    pub fn span(&self) -> Span {
        match *self {
            TriggerRef::Word(i) => Span::new(i, i + 1),
            TriggerRef::Span(s) => Span::from(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgRecord {
    pub role: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub trigger: TriggerRef,
    #[serde(rename = "type")]
    pub event_type: String,
    pub args: Vec<ArgRecord>,
}

/// A document with its given sentence segmentation and raw event records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub words: Vec<String>,
    #[serde(rename = "sentences")]
    pub sentence_spans: Vec<Span>,
    #[serde(default)]
    pub events: Vec<EventRecord>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of the sentence containing word `idx`.
    pub fn sentence_of(&self, idx: usize) -> Option<usize> {
        if idx >= self.words.len() {
            return None;
        }
        // spans are contiguous from 0, so the last span starting at or before idx holds it
        let pos = self.sentence_spans.partition_point(|s| s.beg <= idx);
        pos.checked_sub(1)
    }

    pub fn sentence_span_of(&self, idx: usize) -> Option<Span> {
        self.sentence_of(idx).map(|s| self.sentence_spans[s])
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.words.is_empty() {
            return Err("document has no words".into());
        }
        if let Some(i) = self.words.iter().position(|w| w.is_empty()) {
            return Err(format!("word {i} is empty"));
        }
        let n = self.words.len();
        let mut expect = 0;
        for (k, s) in self.sentence_spans.iter().enumerate() {
            if s.beg != expect {
                return Err(format!(
                    "sentence {k} {s} is not contiguous with the previous sentence (expected start {expect})"
                ));
            }
            if s.end <= s.beg {
                return Err(format!("sentence {k} {s} is empty"));
            }
            expect = s.end;
        }
        if expect != n {
            return Err(format!("sentences cover [0,{expect}) but the document has {n} words"));
        }
        Ok(())
    }
}

/// One (event, role, argument) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventInstance {
    pub doc_id: String,
    pub trigger_index: usize,
    /// Number of words in the trigger annotation; 1 for single-word triggers.
    pub trigger_len: usize,
    pub event_type: String,
    pub role: String,
    pub arg_span: Span,
    pub event_idx: usize,
    pub arg_idx: usize,
    /// Gold span contains the trigger word, so trigger exclusion can only shrink its reachable mass.
    pub overlaps_trigger: bool,
    /// Gold span straddles a sentence boundary.
    pub crosses_sentence_boundary: bool,
}

impl EventInstance {
    pub fn id(&self) -> String {
        format!("{}#e{}.a{}", self.doc_id, self.event_idx, self.arg_idx)
    }

    pub fn is_multiword_trigger(&self) -> bool {
        self.trigger_len > 1
    }
}

/// Validated, immutable corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    index: HashMap<String, usize>,
    splits: HashMap<String, Split>,
    instances: Vec<EventInstance>,
}

impl Corpus {
    pub fn from_documents(docs: Vec<Document>, split: Split) -> Result<Self> {
        let mut corpus = Corpus::default();
        for doc in docs {
            corpus.push(doc, split, &doc_context(None, None))?;
        }
        Ok(corpus)
    }

    fn push(&mut self, doc: Document, split: Split, context: &dyn Fn(&str) -> String) -> Result<()> {
        let ctx = context(&doc.doc_id);
        doc.validate().map_err(|msg| Error::InvalidCorpus {
            context: ctx.clone(),
            msg,
        })?;
        if self.index.contains_key(&doc.doc_id) {
            return Err(Error::InvalidCorpus {
                context: ctx,
                msg: format!("duplicate doc_id {:?}", doc.doc_id),
            });
        }
        let n = doc.len();
        let mut new_instances = Vec::new();
        for (e, event) in doc.events.iter().enumerate() {
            let trig = event.trigger.span();
            if trig.is_empty() || trig.end > n {
                return Err(Error::InvalidCorpus {
                    context: ctx,
                    msg: format!("event {e}: trigger {trig} out of range for {n} words"),
                });
            }
            for (a, arg) in event.args.iter().enumerate() {
                let span = arg.span;
                if span.is_empty() || span.end > n {
                    return Err(Error::InvalidCorpus {
                        context: ctx,
                        msg: format!("event {e} arg {a}: arg span out of range: {span} for {n} words"),
                    });
                }
                let first = doc.sentence_of(span.beg);
                let last = doc.sentence_of(span.end - 1);
                new_instances.push(EventInstance {
                    doc_id: doc.doc_id.clone(),
                    trigger_index: trig.beg,
                    trigger_len: trig.len(),
                    event_type: event.event_type.clone(),
                    role: arg.role.clone(),
                    arg_span: span,
                    event_idx: e,
                    arg_idx: a,
                    overlaps_trigger: span.overlaps(&trig),
                    crosses_sentence_boundary: first != last,
                });
            }
        }
        self.index.insert(doc.doc_id.clone(), self.documents.len());
        self.splits.insert(doc.doc_id.clone(), split);
        self.documents.push(doc);
        self.instances.extend(new_instances);
        Ok(())
    }

    /// Concatenate corpora, keeping each document's split label.
    pub fn merge(parts: impl IntoIterator<Item = Corpus>) -> Result<Self> {
        let mut out = Corpus::default();
        for part in parts {
            let Corpus { documents, splits, .. } = part;
            for doc in documents {
                let split = splits[&doc.doc_id];
                out.push(doc, split, &doc_context(None, None))?;
            }
        }
        Ok(out)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn split_of(&self, doc_id: &str) -> Option<Split> {
        self.splits.get(doc_id).copied()
    }

    pub fn instances(&self) -> &[EventInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Canonical line-JSON serialisation, in document order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(doc).expect("document serialises"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    /// Rebuild with replaced word tokens; structure is left as is.
    pub(crate) fn with_words(&self, mut replace: impl FnMut(&Document) -> Vec<String>) -> Corpus {
        let mut out = self.clone();
        for doc in &mut out.documents {
            doc.words = replace(doc);
        }
        out
    }
}

fn doc_context(path: Option<&Path>, line: Option<usize>) -> impl Fn(&str) -> String + '_ {
    move |doc_id: &str| match (path, line) {
        (Some(p), Some(l)) => format!("{}:{l}: document {doc_id}", p.display()),
        _ => format!("document {doc_id}"),
    }
}

/// Parse and validate a line-JSON corpus. Blank lines are skipped.
pub fn parse_corpus(reader: impl BufRead, origin: &Path, split: Split) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: origin.to_path_buf(),
            line: lineno,
            msg: e.to_string(),
        })?;
        corpus.push(doc, split, &doc_context(Some(origin), Some(lineno)))?;
    }
    Ok(corpus)
}

pub fn load_corpus(path: &Path, split: Split) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(std::io::BufReader::new(file), path, split)
}

/// Instances with a role in `roles` (all roles when `None`), optionally
/// without multi-word triggers. Order is preserved.
pub fn filter_instances(
    corpus: &Corpus,
    roles: Option<&BTreeSet<String>>,
    drop_multiword_triggers: bool,
) -> Vec<EventInstance> {
    corpus
        .instances()
        .iter()
        .filter(|inst| roles.is_none_or(|r| r.contains(&inst.role)))
        .filter(|inst| !(drop_multiword_triggers && inst.is_multiword_trigger()))
        .cloned()
        .collect()
}

/// Role counts over training-split instances, ordered by count descending
/// then role name.
pub fn role_frequency_table(corpus: &Corpus) -> Vec<(String, usize)> {
    count_roles(
        corpus
            .instances()
            .iter()
            .filter(|inst| corpus.split_of(&inst.doc_id) == Some(Split::Train)),
    )
}

pub fn count_roles<'a>(instances: impl IntoIterator<Item = &'a EventInstance>) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in instances {
        *counts.entry(inst.role.as_str()).or_default() += 1;
    }
    let mut table: Vec<(String, usize)> = counts.into_iter().map(|(r, c)| (r.to_string(), c)).collect();
    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    table
}

/// The `k` most frequent training roles.
pub fn top_roles(corpus: &Corpus, k: usize) -> Vec<String> {
    role_frequency_table(corpus)
        .into_iter()
        .take(k)
        .map(|(r, _)| r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus> {
        parse_corpus(text.as_bytes(), Path::new("mem.jsonl"), Split::Train)
    }

    const MINIMAL: &str = r#"{"doc_id":"d","words":["a","b","c"],"sentences":[[0,3]],"events":[{"trigger":1,"type":"t","args":[{"role":"r","span":[2,3]}]}]}"#;

    #[test]
    fn minimal_document() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.instances().len(), 1);
        let inst = &c.instances()[0];
        assert_eq!(inst.trigger_index, 1);
        assert_eq!(inst.arg_span, Span::new(2, 3));
        assert!(!inst.overlaps_trigger);
    }

    #[test]
    fn arg_span_out_of_range() {
        let text = MINIMAL.replace("[2,3]", "[2,4]");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("arg span out of range"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{MINIMAL}\n{{not json\n");
        match parse(&text).unwrap_err() {
            Error::MalformedRecord { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_doc_id() {
        let text = format!("{MINIMAL}\n{MINIMAL}\n");
        assert!(parse(&text).unwrap_err().to_string().contains("duplicate doc_id"));
    }

    #[test]
    fn sentence_spans_must_tile() {
        let gap = MINIMAL.replace("[[0,3]]", "[[0,1],[2,3]]");
        assert!(parse(&gap).unwrap_err().to_string().contains("not contiguous"));
        let overlap = MINIMAL.replace("[[0,3]]", "[[0,2],[1,3]]");
        assert!(parse(&overlap).is_err());
        let short = MINIMAL.replace("[[0,3]]", "[[0,2]]");
        assert!(parse(&short).unwrap_err().to_string().contains("cover"));
    }

    #[test]
    fn empty_word_rejected() {
        let text = MINIMAL.replace(r#""b""#, r#""""#);
        assert!(parse(&text).is_err());
    }

    #[test]
    fn overlap_with_trigger_is_flagged() {
        let text = MINIMAL.replace("[2,3]", "[1,3]");
        let c = parse(&text).unwrap();
        assert!(c.instances()[0].overlaps_trigger);
    }

    #[test]
    fn sentence_lookup() {
        let text = MINIMAL.replace("[[0,3]]", "[[0,1],[1,3]]");
        let c = parse(&text).unwrap();
        let d = c.document("d").unwrap();
        assert_eq!(d.sentence_of(0), Some(0));
        assert_eq!(d.sentence_of(1), Some(1));
        assert_eq!(d.sentence_of(2), Some(1));
        assert_eq!(d.sentence_of(3), None);
    }

    fn synthetic_instances() -> Corpus {
        // 10 events, those with index 2, 5 and 8 have two-word triggers
        let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let events: Vec<EventRecord> = (0..10)
            .map(|k| EventRecord {
                trigger: if k % 3 == 2 {
                    TriggerRef::Span([k, k + 2])
                } else {
                    TriggerRef::Word(k)
                },
                event_type: "t".into(),
                args: vec![ArgRecord {
                    role: if k < 3 { "A".into() } else { "B".into() },
                    span: Span::new(15, 16),
                }],
            })
            .collect();
        let doc = Document {
            doc_id: "d".into(),
            words,
            sentence_spans: vec![Span::new(0, 20)],
            events,
        };
        Corpus::from_documents(vec![doc], Split::Train).unwrap()
    }

    #[test]
    fn multiword_triggers_dropped() {
        let c = synthetic_instances();
        assert_eq!(filter_instances(&c, None, false).len(), 10);
        assert_eq!(filter_instances(&c, None, true).len(), 7);
    }

    #[test]
    fn vacuous_role_filter() {
        let c = synthetic_instances();
        let roles: BTreeSet<String> = ["Victim".to_string()].into();
        assert!(filter_instances(&c, Some(&roles), true).is_empty());
    }

    #[test]
    fn frequency_table_orders_by_count() {
        let c = synthetic_instances();
        assert_eq!(
            role_frequency_table(&c),
            vec![("B".to_string(), 7), ("A".to_string(), 3)]
        );
        assert!(role_frequency_table(&Corpus::default()).is_empty());
    }

    #[test]
    fn frequency_table_counts_train_only() {
        let c = synthetic_instances();
        let dev = Corpus::from_documents(c.documents().to_vec(), Split::Dev).unwrap();
        assert!(role_frequency_table(&dev).is_empty());
    }

    #[test]
    fn canonical_reserialisation_is_stable() {
        let c = synthetic_instances();
        let text = c.to_jsonl();
        let again = parse(&text).unwrap();
        assert_eq!(again.to_jsonl(), text);
        assert_eq!(again, c);
    }
}
