// SPDX-License-Identifier: MIT OR Apache-2.0

use attnprobe::corpus::{count_roles, filter_instances, parse_corpus, top_roles, Split};
use attnprobe::synth::{fixture, random_probe_set};
use attnprobe::{Corpus, ErrorClass};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::path::Path;

#[test]
fn jsonl_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (corpus, _) = random_probe_set(&mut rng, 25, &["a", "b"], 1, 1);
    let text = corpus.to_jsonl();
    let back = parse_corpus(text.as_bytes(), Path::new("mem"), Split::Train).unwrap();
    assert_eq!(back, corpus);
    assert_eq!(back.to_jsonl(), text);
}

#[test]
fn instances_respect_sentence_tiling() {
    let fx = fixture(3, 40);
    let corpus = Corpus::merge([fx.train, fx.dev, fx.test]).unwrap();
    for inst in corpus.instances() {
        let doc = corpus.document(&inst.doc_id).unwrap();
        assert!(inst.arg_span.end <= doc.len());
        assert!(inst.trigger_index < doc.len());
        let s = doc.sentence_of(inst.arg_span.beg).unwrap();
        assert!(doc.sentence_spans[s].contains(inst.arg_span.beg));
    }
    let covered: usize = corpus
        .documents()
        .iter()
        .map(|d| d.sentence_spans.iter().map(|s| s.len()).sum::<usize>() - d.len())
        .sum();
    assert_eq!(covered, 0);
}

#[test]
fn filtering_and_frequency() {
    let fx = fixture(4, 21);
    let corpus = Corpus::merge([fx.train, fx.dev, fx.test]).unwrap();
    let all = corpus.instances().len();
    let kept = filter_instances(&corpus, None, true);
    let multi = corpus.instances().iter().filter(|i| i.is_multiword_trigger()).count();
    assert!(multi > 0);
    assert_eq!(kept.len(), all - multi);

    let roles: BTreeSet<String> = ["place".to_string()].into();
    let only_place = filter_instances(&corpus, Some(&roles), true);
    assert!(only_place.iter().all(|i| i.role == "place"));

    let counts = count_roles(&kept);
    let total: usize = counts.iter().map(|(_, c)| c).sum();
    assert_eq!(total, kept.len());
    assert!(counts.windows(2).all(|w| w[0].1 >= w[1].1));
    assert_eq!(top_roles(&corpus, 1).len(), 1);
}

#[test]
fn malformed_lines_are_data_errors() {
    let bad = [
        "{not json",
        r#"{"doc_id":"a","words":[],"sentences":[],"events":[]}"#,
        r#"{"doc_id":"a","words":["x","y"],"sentences":[[0,1]],"events":[]}"#,
        r#"{"doc_id":"a","words":["x","y"],"sentences":[[0,2]],"events":[{"trigger":5,"type":"t","args":[]}]}"#,
    ];
    for line in bad {
        let err = parse_corpus(line.as_bytes(), Path::new("mem"), Split::Dev).unwrap_err();
        assert_eq!(err.class(), ErrorClass::Data, "{line}");
    }
}
