// SPDX-License-Identifier: MIT OR Apache-2.0

//! Instances joined with their document's word-level attention.

use crate::attention::{AttentionStore, WordAttention};
use crate::corpus::{Corpus, EventInstance};
use crate::error::{Error, Result};
use crate::span::Span;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ProbeInstance {
    pub instance: EventInstance,
    pub attention: Arc<WordAttention>,
    pub doc_len: usize,
    pub trigger_sentence: Span,
    /// Sentence containing the first word of the gold span.
    pub arg_sentence: Span,
}

impl ProbeInstance {
    pub fn new(instance: EventInstance, corpus: &Corpus, attention: Arc<WordAttention>) -> Result<Self> {
        let doc = corpus.document(&instance.doc_id).ok_or_else(|| Error::InvalidCorpus {
            context: instance.id(),
            msg: "unknown doc_id".into(),
        })?;
        if attention.num_words() != doc.len() {
            return Err(Error::DimensionMismatch(format!(
                "document {} has {} words but its attention record covers {}",
                doc.doc_id,
                doc.len(),
                attention.num_words()
            )));
        }
        // indices were validated at load time
        let trigger_sentence = doc.sentence_span_of(instance.trigger_index).expect("trigger in range");
        let arg_sentence = doc.sentence_span_of(instance.arg_span.beg).expect("span in range");
        Ok(ProbeInstance {
            doc_len: doc.len(),
            instance,
            attention,
            trigger_sentence,
            arg_sentence,
        })
    }

    pub fn role(&self) -> &str {
        &self.instance.role
    }

    pub fn trigger(&self) -> usize {
        self.instance.trigger_index
    }

    pub fn span(&self) -> Span {
        self.instance.arg_span
    }

    pub fn is_cross_sentence(&self) -> bool {
        self.arg_sentence != self.trigger_sentence
    }

    pub fn id(&self) -> String {
        self.instance.id()
    }
}

/// Instances resolved against an attention source, in input order.
#[derive(Debug, Clone, Default)]
pub struct ProbeSet {
    items: Vec<ProbeInstance>,
}

impl ProbeSet {
    pub fn new(items: Vec<ProbeInstance>) -> Self {
        ProbeSet { items }
    }

    /// Resolve against already-loaded attention, keyed by doc_id.
    pub fn from_attention(
        corpus: &Corpus,
        instances: &[EventInstance],
        attention: &BTreeMap<String, Arc<WordAttention>>,
    ) -> Result<Self> {
        let missing: Vec<String> = {
            let mut m: Vec<String> = instances
                .iter()
                .filter(|i| !attention.contains_key(&i.doc_id))
                .map(|i| i.doc_id.clone())
                .collect();
            m.sort();
            m.dedup();
            m
        };
        if !missing.is_empty() {
            return Err(Error::MissingAttention(missing));
        }
        let items = instances
            .iter()
            .map(|inst| ProbeInstance::new(inst.clone(), corpus, attention[&inst.doc_id].clone()))
            .collect::<Result<_>>()?;
        Ok(ProbeSet { items })
    }

    pub fn load(corpus: &Corpus, instances: &[EventInstance], store: &AttentionStore) -> Result<Self> {
        let attention = store.load_many(instances.iter().map(|i| i.doc_id.as_str()))?;
        Self::from_attention(corpus, instances, &attention)
    }

    pub fn items(&self) -> &[ProbeInstance] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn for_role<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a ProbeInstance> + 'a {
        self.items.iter().filter(move |p| p.role() == role)
    }

    pub fn cross_sentence(&self) -> impl Iterator<Item = &ProbeInstance> {
        self.items.iter().filter(|p| p.is_cross_sentence())
    }

    /// Distinct roles in first-appearance order.
    pub fn roles(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.items
            .iter()
            .filter(|p| seen.insert(p.role()))
            .map(|p| p.role().to_string())
            .collect()
    }
}
