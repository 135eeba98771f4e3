// SPDX-License-Identifier: MIT OR Apache-2.0

use attnprobe::attention::{head_distribution, HeadDistribution, HeadIndex, WordAttention};
use attnprobe::corpus::{parse_corpus, Split};
use attnprobe::perturb::{
    cso_distribution, nonce_perturb, nonce_token, occlude, parse_stop_words, write_nonce_set, NonceConfig,
    ShapeProfile, DEFAULT_STOP_WORDS, NONCE_CORPUS_FILE, REPLACEMENTS_FILE,
};
use attnprobe::probes::predict_token;
use attnprobe::synth::{random_probe_set, random_word_attention};
use attnprobe::{Error, Span};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

#[test]
fn cso_zeroes_sentence_and_renormalises() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(2..12);
        let wa = random_word_attention(&mut rng, "d", 2, 2, n);
        let beg = rng.gen_range(0..n);
        let end = rng.gen_range(beg + 1..=n);
        let sentence = Span::new(beg, end);
        let trigger = rng.gen_range(beg..end);
        for head in HeadIndex::all(2, 2) {
            let res = cso_distribution(&wa, head, trigger, sentence);
            if sentence.len() == n {
                assert!(matches!(res, Err(Error::NoCrossSentenceSupport)));
                continue;
            }
            let p = res.unwrap();
            assert!(sentence.iter().all(|j| p.probs()[j] == 0.0));
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            // ratios outside the sentence are preserved
            let full = head_distribution(&wa, head, trigger).unwrap();
            let outside: Vec<usize> = (0..n).filter(|j| !sentence.contains(*j)).collect();
            let z: f64 = outside.iter().map(|&j| full.probs()[j]).sum();
            for &j in &outside {
                assert!((p.probs()[j] - full.probs()[j] / z).abs() < 1e-12);
            }
            // the trigger is masked, so exclusion changes nothing
            assert_eq!(
                predict_token(&p, trigger, true).unwrap(),
                predict_token(&p, trigger, false).unwrap()
            );
        }
    }
}

#[test]
fn cso_errors() {
    let wa = WordAttention::from_beta("d", 1, 1, 3, vec![1.0 / 3.0; 9]).unwrap();
    assert!(matches!(
        cso_distribution(&wa, HeadIndex::new(0, 0), 1, Span::new(0, 3)),
        Err(Error::NoCrossSentenceSupport)
    ));
    let d = HeadDistribution::new(vec![0.5, 0.5, 0.0]);
    assert!(matches!(occlude(&d, Span::new(0, 2)), Err(Error::ZeroOccludedMass)));
}

const PUNCT: &[char] = &['-', '\'', '.', ',', 'é', '/', '&'];

fn random_token(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(1..10);
    (0..len)
        .map(|_| match rng.gen_range(0..4) {
            0 => rng.gen_range(b'A'..=b'Z') as char,
            1 => rng.gen_range(b'a'..=b'z') as char,
            2 => rng.gen_range(b'0'..=b'9') as char,
            _ => PUNCT[rng.gen_range(0..PUNCT.len())],
        })
        .collect()
}

#[test]
fn nonce_preserves_length_and_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let tok = random_token(&mut rng);
        let profile = ShapeProfile::of(&tok);
        let out = nonce_token(&tok, &profile, &mut rng);
        assert_eq!(out.chars().count(), tok.chars().count());
        assert_eq!(ShapeProfile::of(&out), profile);
        assert!(out != tok || profile.is_all_literal());
    }
}

#[test]
fn nonce_abc1_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = ShapeProfile::of("Abc1");
    for _ in 0..10_000 {
        let out = nonce_token("Abc1", &p, &mut rng);
        let b = out.as_bytes();
        assert!(
            b.len() == 4
                && b[0].is_ascii_uppercase()
                && b[1].is_ascii_lowercase()
                && b[2].is_ascii_lowercase()
                && b[3].is_ascii_digit(),
            "{out}"
        );
    }
}

#[test]
fn nonce_corpus_structure_is_isomorphic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (corpus, _) = random_probe_set(&mut rng, 50, &["a", "b", "c"], 1, 1);
    let cfg = NonceConfig::new(7);
    let (out, log) = nonce_perturb(&corpus, corpus.instances(), &cfg);
    assert_eq!(out.instances(), corpus.instances());
    let mut changed = 0;
    for (a, b) in corpus.documents().iter().zip(out.documents()) {
        assert_eq!(a.doc_id, b.doc_id);
        assert_eq!(a.len(), b.len());
        assert_eq!(a.sentence_spans, b.sentence_spans);
        assert_eq!(a.events, b.events);
        let gold: std::collections::BTreeSet<usize> = corpus
            .instances()
            .iter()
            .filter(|i| i.doc_id == a.doc_id)
            .flat_map(|i| i.arg_span.iter())
            .collect();
        for (j, (x, y)) in a.words.iter().zip(&b.words).enumerate() {
            if !gold.contains(&j) || cfg.is_stop_word(x) {
                assert_eq!(x, y, "{} word {j}", a.doc_id);
            } else {
                assert_eq!(ShapeProfile::of(x), ShapeProfile::of(y));
                changed += (x != y) as usize;
            }
        }
    }
    assert_eq!(changed, log.iter().filter(|r| r.original != r.replacement).count());
    assert!(changed > 0);
}

#[test]
fn stop_words_are_never_altered() {
    let stops = parse_stop_words(DEFAULT_STOP_WORDS);
    let words: Vec<String> = stops.iter().flat_map(|w| [w.clone(), w.to_uppercase()]).collect();
    let n = words.len();
    let line = serde_json::json!({
        "doc_id": "s",
        "words": words,
        "sentences": [[0, n]],
        "events": [{"trigger": 0, "type": "t", "args": [{"role": "r", "span": [1, n]}]}]
    });
    let corpus = parse_corpus(line.to_string().as_bytes(), Path::new("mem"), Split::Test).unwrap();
    let (out, log) = nonce_perturb(&corpus, corpus.instances(), &NonceConfig::new(1));
    assert!(log.is_empty());
    assert_eq!(out, corpus);
}

#[test]
fn same_seed_gives_identical_files() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (corpus, _) = random_probe_set(&mut rng, 30, &["a", "b"], 1, 1);
    let write = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let (out, log) = nonce_perturb(&corpus, corpus.instances(), &NonceConfig::new(seed));
        let d = write_nonce_set(dir.path(), seed, &out, &log).unwrap();
        let read = |f: &str| std::fs::read(d.join(f)).unwrap();
        (read(NONCE_CORPUS_FILE), read(REPLACEMENTS_FILE))
    };
    assert_eq!(write(3), write(3));
    assert_ne!(write(3).0, write(4).0);
}

#[test]
fn nonce_ignores_processing_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (corpus, _) = random_probe_set(&mut rng, 20, &["a"], 1, 1);
    let mut reversed = corpus.instances().to_vec();
    reversed.reverse();
    let cfg = NonceConfig::new(9);
    assert_eq!(
        nonce_perturb(&corpus, corpus.instances(), &cfg).0,
        nonce_perturb(&corpus, &reversed, &cfg).0
    );
}

#[test]
fn zero_instances_leave_corpus_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (corpus, _) = random_probe_set(&mut rng, 5, &["a"], 1, 1);
    let (out, log) = nonce_perturb(&corpus, &[], &NonceConfig::new(1));
    assert_eq!(out, corpus);
    assert!(log.is_empty());
}

proptest! {
    #[test]
    fn nonce_token_shape_property(tok in "[A-Za-z0-9.'-]{1,12}", seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ShapeProfile::of(&tok);
        let out = nonce_token(&tok, &p, &mut rng);
        prop_assert_eq!(ShapeProfile::of(&out), p.clone());
        prop_assert!(out != tok || p.is_all_literal());
    }
}
