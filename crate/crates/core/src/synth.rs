// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic synthetic corpora and attention tensors.
//!
//! [`fixture`] builds the small end-to-end fixture: a corpus split into
//! train/dev/test plus matching subword-level attention records in which
//! particular heads are biased towards the gold argument of particular
//! roles. The other generators produce random valid inputs for property
//! tests and benchmarks.

use crate::attention::{AttentionRecord, HeadIndex, WordAttention};
use crate::corpus::{ArgRecord, Corpus, Document, EventRecord, Split, TriggerRef};
use crate::instances::{ProbeInstance, ProbeSet};
use crate::span::Span;
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::Arc;

/// Strictly positive random distribution.
pub fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

fn softmax_f32(logits: &[f64]) -> Vec<f32> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| (e / z) as f32).collect()
}

/// Alignment with a leading and trailing special token and 1..=3 subwords per word.
pub fn random_alignment(rng: &mut impl Rng, num_words: usize) -> Vec<Option<usize>> {
    let mut alignment = vec![None];
    for w in 0..num_words {
        for _ in 0..rng.gen_range(1..=3) {
            alignment.push(Some(w));
        }
    }
    alignment.push(None);
    alignment
}

/// Random valid record with at most `max_subwords` positions.
pub fn random_record(
    rng: &mut impl Rng,
    doc_id: &str,
    num_layers: usize,
    num_heads: usize,
    max_subwords: usize,
) -> AttentionRecord {
    assert!(max_subwords >= 3);
    let alignment = loop {
        let words = rng.gen_range(1..=max_subwords - 2);
        let a = random_alignment(rng, words);
        if a.len() <= max_subwords {
            break a;
        }
    };
    let t = alignment.len();
    let word_count = alignment.iter().flatten().max().map_or(0, |m| m + 1);
    let mut alpha = Vec::with_capacity(num_layers * num_heads * t * t);
    for _ in 0..num_layers * num_heads * t {
        let logits: Vec<f64> = (0..t).map(|_| rng.gen_range(-3.0..3.0)).collect();
        alpha.extend(softmax_f32(&logits));
    }
    AttentionRecord {
        doc_id: doc_id.to_string(),
        num_layers,
        num_heads,
        num_subwords: t,
        alpha,
        alignment,
        word_count,
    }
}

/// Word-level attention with strictly positive random rows.
pub fn random_word_attention(
    rng: &mut impl Rng,
    doc_id: &str,
    num_layers: usize,
    num_heads: usize,
    num_words: usize,
) -> WordAttention {
    let mut beta = Vec::with_capacity(num_layers * num_heads * num_words * num_words);
    for _ in 0..num_layers * num_heads * num_words {
        beta.extend(random_distribution(rng, num_words));
    }
    WordAttention::from_beta(doc_id, num_layers, num_heads, num_words, beta).expect("random rows are stochastic")
}

fn pseudo_word(rng: &mut impl Rng) -> String {
    const SYL: [&str; 12] = [
        "ka", "lo", "mi", "ter", "an", "su", "ve", "dor", "pi", "ral", "en", "ox",
    ];
    let n = rng.gen_range(1..=3);
    let mut w: String = (0..n).map(|_| *SYL.choose(rng).unwrap()).collect();
    if rng.gen_bool(0.2) {
        w[..1].make_ascii_uppercase();
    }
    if rng.gen_bool(0.05) {
        w.push_str(&format!("-{}", rng.gen_range(10..99)));
    }
    w
}

fn random_sentences(
    rng: &mut impl Rng,
    n_sentences: usize,
    min_len: usize,
    max_len: usize,
) -> (Vec<String>, Vec<Span>) {
    let mut words = Vec::new();
    let mut spans = Vec::new();
    for _ in 0..n_sentences {
        let beg = words.len();
        for _ in 0..rng.gen_range(min_len..=max_len) {
            words.push(pseudo_word(rng));
        }
        spans.push(Span::new(beg, words.len()));
    }
    (words, spans)
}

/// One document whose single event has a planted gold argument, with
/// word-level attention where `planted` points exactly at the gold word.
/// `cross_sentence` puts the argument outside the trigger's sentence.
pub fn planted_instance(
    rng: &mut impl Rng,
    doc_id: &str,
    role: &str,
    num_layers: usize,
    num_heads: usize,
    planted: HeadIndex,
    cross_sentence: bool,
) -> (Document, WordAttention) {
    let (words, sentences) = random_sentences(rng, 3, 3, 6);
    let n = words.len();
    let mid = sentences[1];
    let trigger = rng.gen_range(mid.beg..mid.end);
    let gold = if cross_sentence {
        let outside: Vec<usize> = (0..n).filter(|j| !mid.contains(*j)).collect();
        *outside.choose(rng).unwrap()
    } else {
        loop {
            let j = rng.gen_range(mid.beg..mid.end);
            if j != trigger {
                break j;
            }
        }
    };
    let doc = Document {
        doc_id: doc_id.to_string(),
        words,
        sentence_spans: sentences,
        events: vec![EventRecord {
            trigger: TriggerRef::Word(trigger),
            event_type: "synthetic".into(),
            args: vec![ArgRecord {
                role: role.to_string(),
                span: Span::new(gold, gold + 1),
            }],
        }],
    };

    let mut beta = Vec::with_capacity(num_layers * num_heads * n * n);
    for l in 0..num_layers {
        for h in 0..num_heads {
            for i in 0..n {
                let planted_here = planted.layer == l && planted.physical_head() == h;
                let row = if planted_here && planted.is_from() && i == trigger {
                    one_hot(n, gold)
                } else if planted_here && planted.is_to() {
                    // column `trigger` is non-zero only on the gold row
                    if i == gold {
                        one_hot(n, trigger)
                    } else {
                        let mut r = random_distribution(rng, n);
                        r[trigger] = 0.0;
                        let z: f64 = r.iter().sum();
                        r.iter().map(|x| x / z).collect()
                    }
                } else {
                    random_distribution(rng, n)
                };
                beta.extend(row);
            }
        }
    }
    let wa = WordAttention::from_beta(doc_id, num_layers, num_heads, n, beta).expect("planted rows are stochastic");
    (doc, wa)
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// `n` planted documents with their corpus and probe set.
pub fn planted_set(
    rng: &mut impl Rng,
    n: usize,
    num_layers: usize,
    num_heads: usize,
    planted: HeadIndex,
    cross_sentence: bool,
) -> (Corpus, ProbeSet) {
    let mut docs = Vec::new();
    let mut attention = Vec::new();
    for k in 0..n {
        let (doc, wa) = planted_instance(
            rng,
            &format!("p{k:04}"),
            "planted",
            num_layers,
            num_heads,
            planted,
            cross_sentence,
        );
        docs.push(doc);
        attention.push(Arc::new(wa));
    }
    let corpus = Corpus::from_documents(docs, Split::Train).expect("synthetic documents are valid");
    let items = corpus
        .instances()
        .iter()
        .zip(&attention)
        .map(|(inst, wa)| ProbeInstance::new(inst.clone(), &corpus, wa.clone()).expect("dimensions agree"))
        .collect();
    (corpus, ProbeSet::new(items))
}

/// Random probe set: each document gets one event with one argument per role.
pub fn random_probe_set(
    rng: &mut impl Rng,
    n_docs: usize,
    roles: &[&str],
    num_layers: usize,
    num_heads: usize,
) -> (Corpus, ProbeSet) {
    let mut docs = Vec::new();
    let mut attention = std::collections::BTreeMap::new();
    for k in 0..n_docs {
        let n_sentences = rng.gen_range(1..=3);
        let (words, sentences) = random_sentences(rng, n_sentences, 2, 6);
        let n = words.len();
        let trigger = rng.gen_range(0..n);
        let args = roles
            .iter()
            .map(|role| {
                let beg = rng.gen_range(0..n);
                let end = rng.gen_range(beg + 1..=n.min(beg + 3));
                ArgRecord {
                    role: role.to_string(),
                    span: Span::new(beg, end),
                }
            })
            .collect();
        let doc_id = format!("r{k:04}");
        attention.insert(
            doc_id.clone(),
            Arc::new(random_word_attention(rng, &doc_id, num_layers, num_heads, n)),
        );
        docs.push(Document {
            doc_id,
            words,
            sentence_spans: sentences,
            events: vec![EventRecord {
                trigger: TriggerRef::Word(trigger),
                event_type: "synthetic".into(),
                args,
            }],
        });
    }
    let corpus = Corpus::from_documents(docs, Split::Train).expect("synthetic documents are valid");
    let set = ProbeSet::from_attention(&corpus, corpus.instances(), &attention).expect("all documents have attention");
    (corpus, set)
}

/// Bundled end-to-end fixture.
pub struct Fixture {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    pub records: Vec<AttentionRecord>,
}

pub const FIXTURE_LAYERS: usize = 2;
pub const FIXTURE_HEADS: usize = 2;
pub const FIXTURE_MODEL: &str = "synthetic-2x2";

/// Role → physical head bias in the fixture:
///
/// - `attacker`: from-head (1,0) points at the argument.
/// - `target`: to-head (1,-2); argument subwords attend to the trigger.
/// - `place`: from-head (0,1) for in-sentence arguments; for arguments in
///   another sentence, from-head (0,0) points at the argument but even more
///   strongly at an in-sentence distractor, so only occlusion recovers it.
pub fn fixture(seed: u64, n_docs: usize) -> Fixture {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (l_count, h_count) = (FIXTURE_LAYERS, FIXTURE_HEADS);
    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    let mut records = Vec::new();

    for k in 0..n_docs {
        let doc_id = format!("fx{k:03}");
        let (words, sentences) = random_sentences(&mut rng, 3, 4, 7);
        let n = words.len();
        let mid = sentences[1];
        let trigger = rng.gen_range(mid.beg + 1..mid.end - 1);
        let in_sentence: Vec<usize> = (mid.beg..mid.end).filter(|&j| j != trigger).collect();
        let outside: Vec<usize> = (0..n).filter(|j| !mid.contains(*j)).collect();

        let attacker = *in_sentence.choose(&mut rng).unwrap();
        let target_beg = *in_sentence.choose(&mut rng).unwrap();
        let target = if target_beg + 1 < mid.end && target_beg + 1 != trigger && rng.gen_bool(0.4) {
            Span::new(target_beg, target_beg + 2)
        } else {
            Span::new(target_beg, target_beg + 1)
        };
        let place_cross = rng.gen_bool(0.4);
        let place = if place_cross {
            *outside.choose(&mut rng).unwrap()
        } else {
            *in_sentence.choose(&mut rng).unwrap()
        };
        let distractor = *in_sentence.choose(&mut rng).unwrap();

        let mut events = vec![EventRecord {
            trigger: TriggerRef::Word(trigger),
            event_type: "conflict.attack".into(),
            args: vec![
                ArgRecord {
                    role: "attacker".into(),
                    span: Span::new(attacker, attacker + 1),
                },
                ArgRecord {
                    role: "target".into(),
                    span: target,
                },
                ArgRecord {
                    role: "place".into(),
                    span: Span::new(place, place + 1),
                },
            ],
        }];
        if k % 7 == 3 {
            // multi-word trigger, dropped by filtering
            events.push(EventRecord {
                trigger: TriggerRef::Span([sentences[2].beg, sentences[2].beg + 2]),
                event_type: "movement.transport".into(),
                args: vec![ArgRecord {
                    role: "attacker".into(),
                    span: Span::new(0, 1),
                }],
            });
        }
        let doc = Document {
            doc_id: doc_id.clone(),
            words,
            sentence_spans: sentences,
            events,
        };

        let alignment = random_alignment(&mut rng, n);
        let t = alignment.len();
        let subwords_of = |w: usize| -> Vec<usize> { (0..t).filter(|&i| alignment[i] == Some(w)).collect() };
        let trig_sub = subwords_of(trigger);
        // a fraction of instances is left unplanted so accuracies stay below 1
        let hit = |rng: &mut rand_chacha::ChaCha8Rng| rng.gen_bool(0.85);

        let mut logits: Vec<Vec<f64>> = (0..l_count * h_count * t)
            .map(|_| (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let idx = |l: usize, h: usize, i: usize| (l * h_count + h) * t + i;
        let bump_row = |logits: &mut Vec<Vec<f64>>, l: usize, h: usize, rows: &[usize], cols: &[usize], amount: f64| {
            for &i in rows {
                for &j in cols {
                    logits[idx(l, h, i)][j] += amount;
                }
            }
        };
        let decoy = |rng: &mut rand_chacha::ChaCha8Rng, avoid: usize| loop {
            let j = rng.gen_range(0..n);
            if j != trigger && j != avoid {
                break j;
            }
        };

        let a = if hit(&mut rng) {
            attacker
        } else {
            decoy(&mut rng, attacker)
        };
        bump_row(&mut logits, 1, 0, &trig_sub, &subwords_of(a), 5.0);

        let tgt = if hit(&mut rng) {
            target.beg
        } else {
            decoy(&mut rng, target.beg)
        };
        bump_row(&mut logits, 1, 1, &subwords_of(tgt), &trig_sub, 6.0);

        if place_cross {
            let p = if hit(&mut rng) { place } else { decoy(&mut rng, place) };
            bump_row(&mut logits, 0, 0, &trig_sub, &subwords_of(p), 4.0);
            bump_row(&mut logits, 0, 0, &trig_sub, &subwords_of(distractor), 6.0);
            let noise = *in_sentence.choose(&mut rng).unwrap();
            bump_row(&mut logits, 0, 1, &trig_sub, &subwords_of(noise), 5.0);
        } else {
            let p = if hit(&mut rng) { place } else { decoy(&mut rng, place) };
            bump_row(&mut logits, 0, 1, &trig_sub, &subwords_of(p), 5.0);
        }

        let alpha: Vec<f32> = logits.iter().flat_map(|row| softmax_f32(row)).collect();
        records.push(AttentionRecord {
            doc_id,
            num_layers: l_count,
            num_heads: h_count,
            num_subwords: t,
            alpha,
            alignment,
            word_count: n,
        });

        match k * 10 / n_docs {
            0..=4 => train.push(doc),
            5..=6 => dev.push(doc),
            _ => test.push(doc),
        }
    }

    Fixture {
        train: Corpus::from_documents(train, Split::Train).expect("valid"),
        dev: Corpus::from_documents(dev, Split::Dev).expect("valid"),
        test: Corpus::from_documents(test, Split::Test).expect("valid"),
        records,
    }
}
