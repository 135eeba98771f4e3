// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::corpus::{Document, EventInstance};
use crate::error::{Error, Result};
use crate::span::Span;

/// 1 if the predicted word lies in the gold span `[beg, end)`.
pub fn acc(predicted: usize, span: Span) -> u8 {
    span.contains(predicted) as u8
}

/// Expected accuracy of a uniform guess over the document, trigger excluded.
pub fn rand_baseline(instance: &EventInstance, doc: &Document) -> Result<f64> {
    rand_expected(instance.arg_span, doc.len())
}

pub(crate) fn rand_expected(span: Span, doc_len: usize) -> Result<f64> {
    if doc_len < 2 {
        return Err(Error::BaselineUndefined(format!(
            "Rand needs at least two words, document has {doc_len}"
        )));
    }
    Ok(span.len() as f64 / (doc_len - 1) as f64)
}

/// Expected accuracy of a uniform guess over the trigger's sentence,
/// trigger excluded. Spans reaching outside that sentence still count with
/// their full length; see [`sentonly_outside`].
pub fn sentonly_baseline(instance: &EventInstance, doc: &Document) -> Result<f64> {
    let sentence = trigger_sentence(instance, doc)?;
    sentonly_expected(instance.arg_span, sentence)
}

pub(crate) fn sentonly_expected(span: Span, sentence: Span) -> Result<f64> {
    if sentence.len() < 2 {
        return Err(Error::BaselineUndefined(format!(
            "SentOnly needs at least two words in the trigger sentence, {sentence} has {}",
            sentence.len()
        )));
    }
    Ok(span.len() as f64 / (sentence.len() - 1) as f64)
}

/// Gold span not contained in the trigger sentence.
pub fn sentonly_outside(instance: &EventInstance, doc: &Document) -> Result<bool> {
    Ok(!instance.arg_span.is_within(&trigger_sentence(instance, doc)?))
}

fn trigger_sentence(instance: &EventInstance, doc: &Document) -> Result<Span> {
    doc.sentence_span_of(instance.trigger_index)
        .ok_or(Error::IndexOutOfRange {
            index: instance.trigger_index,
            len: doc.len(),
        })
}
