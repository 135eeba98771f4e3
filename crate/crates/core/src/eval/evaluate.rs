// SPDX-License-Identifier: MIT OR Apache-2.0

use super::metrics::{acc, rand_expected, sentonly_expected};
use crate::attention::HeadIndex;
use crate::corpus::{Corpus, EventInstance};
use crate::error::{Error, Result};
use crate::instances::{ProbeInstance, ProbeSet};
use crate::probes::{HeadView, Probe};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Approach {
    Rand,
    SentOnly,
    BestHead,
    Linear,
    #[serde(rename = "BestHead+CSO")]
    BestHeadCso,
    #[serde(rename = "Linear+CSO")]
    LinearCso,
}

impl Approach {
    pub fn name(&self) -> &'static str {
        match self {
            Approach::Rand => "Rand",
            Approach::SentOnly => "SentOnly",
            Approach::BestHead => "BestHead",
            Approach::Linear => "Linear",
            Approach::BestHeadCso => "BestHead+CSO",
            Approach::LinearCso => "Linear+CSO",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    All,
    CrossSentence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub role: String,
    pub approach: Approach,
    pub subset: Subset,
    pub accuracy: f64,
    pub n_instances: usize,
    pub encoder: String,
    pub exclude_trigger: bool,
    pub nonce: bool,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<HeadIndex>,
    /// SentOnly: instances whose gold span leaves the trigger sentence.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub flagged: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOptions {
    pub encoder: String,
    pub exclude_trigger: bool,
}

fn hits(probe: &Probe, items: &[&ProbeInstance], exclude_trigger: bool) -> Result<usize> {
    items
        .par_iter()
        .map(|pi| probe.predict(pi, exclude_trigger).map(|p| acc(p, pi.span()) as usize))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn subsets(probe: &Probe) -> &'static [Subset] {
    match probe.view() {
        HeadView::Full => &[Subset::All, Subset::CrossSentence],
        HeadView::Cso => &[Subset::CrossSentence],
    }
}

fn members<'a>(set: &'a ProbeSet, role: &'a str, subset: Subset) -> Vec<&'a ProbeInstance> {
    set.for_role(role)
        .filter(|p| subset == Subset::All || p.is_cross_sentence())
        .collect()
}

/// Per-role accuracy of `probe` on `set`. Full-view probes report both the
/// whole set and its cross-sentence part; occluded probes only the latter.
/// Empty subsets produce no result.
pub fn evaluate(probe: &Probe, set: &ProbeSet, opts: &EvalOptions) -> Result<Vec<EvalResult>> {
    evaluate_seeds(probe, &[(None, set)], opts)
}

/// Like [`evaluate`], averaging accuracy over nonce sets, one per seed.
pub fn evaluate_nonce(probe: &Probe, sets: &[(u64, ProbeSet)], opts: &EvalOptions) -> Result<Vec<EvalResult>> {
    let sets: Vec<(Option<u64>, &ProbeSet)> = sets.iter().map(|(s, p)| (Some(*s), p)).collect();
    evaluate_seeds(probe, &sets, opts)
}

fn evaluate_seeds(probe: &Probe, sets: &[(Option<u64>, &ProbeSet)], opts: &EvalOptions) -> Result<Vec<EvalResult>> {
    let mut out = Vec::new();
    if sets.is_empty() {
        return Ok(out);
    }
    let seeds: Vec<u64> = sets.iter().filter_map(|(s, _)| *s).collect();
    for &subset in subsets(probe) {
        let mut total = 0.0;
        let mut n = None;
        for (_, set) in sets {
            let items = members(set, probe.role(), subset);
            if items.is_empty() {
                n = Some(0);
                break;
            }
            if n.is_some_and(|m| m != items.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "nonce sets disagree on instance count for role {}",
                    probe.role()
                )));
            }
            n = Some(items.len());
            total += hits(probe, &items, opts.exclude_trigger)? as f64 / items.len() as f64;
        }
        let n = n.unwrap_or(0);
        if n == 0 {
            continue;
        }
        out.push(EvalResult {
            role: probe.role().to_string(),
            approach: probe.approach(),
            subset,
            accuracy: total / sets.len() as f64,
            n_instances: n,
            encoder: opts.encoder.clone(),
            exclude_trigger: opts.exclude_trigger,
            nonce: !seeds.is_empty(),
            seeds: seeds.clone(),
            head: probe.head(),
            flagged: 0,
        });
    }
    Ok(out)
}

/// Analytic Rand and SentOnly expectations per role, over `instances`.
pub fn evaluate_baselines(
    corpus: &Corpus,
    instances: &[EventInstance],
    roles: &[String],
    opts: &EvalOptions,
) -> Result<Vec<EvalResult>> {
    let mut out = Vec::new();
    for role in roles {
        let mut rand_sum = 0.0;
        let mut sent_sum = 0.0;
        let mut flagged = 0usize;
        let mut n = 0usize;
        for inst in instances.iter().filter(|i| &i.role == role) {
            let doc = corpus.document(&inst.doc_id).ok_or_else(|| Error::InvalidCorpus {
                context: inst.id(),
                msg: "unknown doc_id".into(),
            })?;
            let sentence = doc.sentence_span_of(inst.trigger_index).expect("validated trigger");
            rand_sum += rand_expected(inst.arg_span, doc.len())?;
            sent_sum += sentonly_expected(inst.arg_span, sentence)?;
            flagged += !inst.arg_span.is_within(&sentence) as usize;
            n += 1;
        }
        if n == 0 {
            continue;
        }
        for (approach, sum, flagged) in [(Approach::Rand, rand_sum, 0), (Approach::SentOnly, sent_sum, flagged)] {
            out.push(EvalResult {
                role: role.clone(),
                approach,
                subset: Subset::All,
                accuracy: sum / n as f64,
                n_instances: n,
                encoder: opts.encoder.clone(),
                exclude_trigger: opts.exclude_trigger,
                nonce: false,
                seeds: Vec::new(),
                head: None,
                flagged,
            });
        }
    }
    Ok(out)
}

pub fn results_to_jsonl(results: &[EvalResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serialises"));
        out.push('\n');
    }
    out
}

pub fn write_results(path: &Path, results: &[EvalResult]) -> Result<()> {
    std::fs::write(path, results_to_jsonl(results)).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<EvalResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}
