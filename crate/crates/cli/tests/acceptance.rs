// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion, each within its
//! time budget. Run with `cargo test -p attnprobe-cli --test acceptance -- --nocapture`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use attnprobe::attention::{aggregate_subwords, head_distribution, HeadIndex};
use attnprobe::corpus::{parse_corpus, Split};
use attnprobe::eval::acc;
use attnprobe::perturb::{
    cso_distribution, nonce_perturb, nonce_token, parse_stop_words, write_nonce_set, NonceConfig, ShapeProfile,
    DEFAULT_STOP_WORDS, NONCE_CORPUS_FILE, REPLACEMENTS_FILE,
};
use attnprobe::probes::{
    fit_best_head, head_hit_counts, linear_mix, loss_and_gradient, softmax, train_linear_traced, GoldDistribution,
    HeadFeatures, HeadView, LinearModel, ProbeOptions, TrainConfig,
};
use attnprobe::synth::{planted_set, random_probe_set, random_record, random_word_attention};
use attnprobe::{rand_baseline, sentonly_baseline, Error, ProbeInstance, Span};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};
use support::{exhaustive_best, naive_aggregate};

type Check = Result<(), String>;

/// Name, time budget and check.
type Criterion = (&'static str, Duration, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn is_distribution(p: &[f64]) -> bool {
    (p.iter().sum::<f64>() - 1.0).abs() <= 1e-6 && p.iter().all(|&v| v >= 0.0)
}

fn validity_sweep() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..50 {
        let (l, h) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let rec = random_record(&mut rng, &format!("d{k}"), l, h, 16);
        let wa = aggregate_subwords(&rec).map_err(|e| e.to_string())?;
        let nw = wa.num_words();
        for layer in 0..l {
            for head in 0..h {
                for i in 0..nw {
                    ensure!(
                        is_distribution(wa.row(layer, head, i)),
                        "record {k}: aggregated row {i}"
                    );
                }
            }
        }
        let sentence = Span::new(0, nw.div_ceil(2));
        let model = LinearModel {
            weights_raw: (0..2 * l * h).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            bias_raw: rng.gen_range(-6.0..0.0),
            ..LinearModel::new("r", l, h, &Default::default(), Default::default())
        };
        for trigger in 0..nw {
            for head in HeadIndex::all(l, h) {
                let p = head_distribution(&wa, head, trigger).map_err(|e| e.to_string())?;
                ensure!(is_distribution(p.probs()), "record {k}: head {head}");
                if nw > 1 && sentence.contains(trigger) {
                    let p = cso_distribution(&wa, head, trigger, sentence).map_err(|e| e.to_string())?;
                    ensure!(is_distribution(p.probs()), "record {k}: cso {head}");
                }
            }
            let p = linear_mix(&model, &wa, trigger).map_err(|e| e.to_string())?;
            ensure!(is_distribution(p.probs()), "record {k}: linear_mix");
        }
    }
    Ok(())
}

fn aggregation_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..100 {
        let (l, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let rec = random_record(&mut rng, &format!("d{k}"), l, h, 16);
        let wa = aggregate_subwords(&rec).map_err(|e| e.to_string())?;
        let oracle = naive_aggregate(&rec);
        ensure!(wa.as_slice().len() == oracle.len(), "record {k}: shape");
        let worst = wa
            .as_slice()
            .iter()
            .zip(&oracle)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        ensure!(worst <= 1e-12, "record {k}: max deviation {worst:e}");
    }
    Ok(())
}

fn besthead_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ties = 0;
    for k in 0..20 {
        let (l, h) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let (_, set) = random_probe_set(&mut rng, 30, &["r"], l, h);
        let items: Vec<&ProbeInstance> = set.items().iter().collect();
        let model = fit_best_head(items.iter().copied(), "r", ProbeOptions::default()).map_err(|e| e.to_string())?;
        let (head, hits) = exhaustive_best(&items);
        ensure!(model.head == head, "fixture {k}: picked {} expected {head}", model.head);
        ensure!(model.train_accuracy == hits as f64 / 30.0, "fixture {k}: accuracy");
        let counts = head_hit_counts(&items, ProbeOptions::default()).map_err(|e| e.to_string())?;
        ties += (counts.iter().filter(|&&c| c == hits).count() > 1) as usize;
    }
    ensure!(ties > 0, "no fixture exercised the tie-break");
    Ok(())
}

fn planted_recovery() -> Check {
    let heads = [
        HeadIndex::new(0, 1),
        HeadIndex::new(1, 0),
        HeadIndex::new(1, -2),
        HeadIndex::new(0, -1),
    ];
    for planted in heads {
        let k = planted.flat(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let (_, set) = planted_set(&mut rng, 40, 2, 2, planted, false);
        let m = fit_best_head(set.items(), "planted", ProbeOptions::default()).map_err(|e| e.to_string())?;
        ensure!(
            m.head == planted && m.train_accuracy == 1.0,
            "BestHead picked {} for {planted}",
            m.head
        );

        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let (_, set) = planted_set(&mut rng, 200, 2, 2, planted, false);
        let cfg = TrainConfig::default();
        ensure!(
            cfg.max_epochs == 10 && cfg.learning_rate == 0.01,
            "unexpected training defaults"
        );
        let (_, history) = train_linear_traced(set.items(), [], "planted", &cfg, ProbeOptions::default())
            .map_err(|e| e.to_string())?;
        let reached = history
            .iter()
            .any(|e| e.train_acc >= 0.99 && softmax(&e.weights_raw)[k] >= 0.99);
        ensure!(reached, "Linear did not concentrate on {planted}");
    }
    Ok(())
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (_, set) = random_probe_set(&mut rng, 10, &["r"], 2, 3);
    let eps = 1e-5;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut checked = 0;
    for (pi, view) in set
        .items()
        .iter()
        .zip([HeadView::Full, HeadView::Cso].into_iter().cycle())
    {
        let view = if pi.trigger_sentence.len() == pi.doc_len {
            HeadView::Full
        } else {
            view
        };
        let features = HeadFeatures::build(pi, view).map_err(|e| e.to_string())?;
        let gold = GoldDistribution::on_support(pi.span(), features.support());
        if gold.probs().iter().all(|&g| g == 0.0) {
            continue;
        }
        let u: Vec<f64> = (0..features.num_heads_total())
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        let b = rng.gen_range(-4.0..1.0);
        let (_, du, db) = loss_and_gradient(&u, b, &features, &gold);
        let loss = |u: &[f64], b: f64| loss_and_gradient(u, b, &features, &gold).0;
        for k in 0..u.len() {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[k] += eps;
            dn[k] -= eps;
            let num = (loss(&up, b) - loss(&dn, b)) / (2.0 * eps);
            ensure!(rel(du[k], num) < 1e-4, "u[{k}]: analytic {} numeric {num}", du[k]);
        }
        let num = (loss(&u, b + eps) - loss(&u, b - eps)) / (2.0 * eps);
        ensure!(rel(db, num) < 1e-4, "bias: analytic {db} numeric {num}");
        checked += 1;
    }
    ensure!(checked == 10, "only {checked} pairs checked");
    Ok(())
}

fn baselines() -> Check {
    for n in 1..=8usize {
        for beg in 0..n {
            for end in beg + 1..=n {
                let span = Span::new(beg, end);
                for p in 0..=n {
                    ensure!(acc(p, span) == (beg <= p && p < end) as u8, "acc({p}, {span})");
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (corpus, _) = random_probe_set(&mut rng, 200, &["r"], 1, 1);
    let draws = 100_000usize;
    for inst in corpus.instances() {
        let doc = corpus.document(&inst.doc_id).ok_or("missing document")?;
        let sentence = doc.sentence_span_of(inst.trigger_index).ok_or("missing sentence")?;
        let t = inst.trigger_index;
        let rand_pool: Vec<usize> = (0..doc.len()).filter(|&j| j != t).collect();
        let sent_pool: Vec<usize> = sentence.iter().filter(|&j| j != t).collect();
        if rand_pool.is_empty() {
            continue;
        }
        let mut check = |pool: &[usize], expected: f64| -> Check {
            let hits: usize = (0..draws)
                .map(|_| acc(pool[rng.gen_range(0..pool.len())], inst.arg_span) as usize)
                .sum();
            let mc = hits as f64 / draws as f64;
            // a trigger inside the span counts in the closed form but is never drawn
            let target = expected - inst.arg_span.contains(t) as usize as f64 / pool.len() as f64;
            let sigma = (target * (1.0 - target) / draws as f64).sqrt().max(1e-9);
            ensure!(
                (mc - target).abs() <= 3.0 * sigma + 1e-12,
                "{}: mc {mc} closed form {expected}",
                inst.id()
            );
            Ok(())
        };
        check(&rand_pool, rand_baseline(inst, doc).map_err(|e| e.to_string())?)?;
        if !sent_pool.is_empty() && inst.arg_span.is_within(&sentence) {
            check(&sent_pool, sentonly_baseline(inst, doc).map_err(|e| e.to_string())?)?;
        }
    }
    Ok(())
}

fn cso_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(2..12);
        let wa = random_word_attention(&mut rng, "d", 2, 2, n);
        let beg = rng.gen_range(0..n);
        let end = rng.gen_range(beg + 1..=n);
        let sentence = Span::new(beg, end);
        let trigger = rng.gen_range(beg..end);
        for head in HeadIndex::all(2, 2) {
            match cso_distribution(&wa, head, trigger, sentence) {
                Err(Error::NoCrossSentenceSupport) if sentence.len() == n => {}
                Err(e) => return Err(format!("unexpected error: {e}")),
                Ok(_) if sentence.len() == n => return Err("single-sentence document accepted".into()),
                Ok(p) => {
                    ensure!(sentence.iter().all(|j| p.probs()[j] == 0.0), "in-sentence mass left");
                    ensure!(is_distribution(p.probs()), "occluded distribution not normalised");
                }
            }
        }
    }
    Ok(())
}

fn nonce_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let alphabet: Vec<char> = "AZbq09-'.é".chars().collect();
    for _ in 0..10_000 {
        let len = rng.gen_range(1..10);
        let tok: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        let profile = ShapeProfile::of(&tok);
        let out = nonce_token(&tok, &profile, &mut rng);
        ensure!(out.chars().count() == tok.chars().count(), "{tok} -> {out}: length");
        ensure!(ShapeProfile::of(&out) == profile, "{tok} -> {out}: shape");
    }

    let stops = parse_stop_words(DEFAULT_STOP_WORDS);
    let words: Vec<String> = stops.iter().flat_map(|w| [w.clone(), w.to_uppercase()]).collect();
    let n = words.len();
    let line = serde_json::json!({
        "doc_id": "s", "words": words, "sentences": [[0, n]],
        "events": [{"trigger": 0, "type": "t", "args": [{"role": "r", "span": [1, n]}]}]
    });
    let corpus = parse_corpus(line.to_string().as_bytes(), Path::new("mem"), Split::Test).map_err(|e| e.to_string())?;
    let (out, _) = nonce_perturb(&corpus, corpus.instances(), &NonceConfig::new(1));
    ensure!(out == corpus, "a stop word was altered");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (corpus, _) = random_probe_set(&mut rng, 50, &["a", "b"], 1, 1);
    let write = |seed: u64| -> Result<(Vec<u8>, Vec<u8>), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (out, log) = nonce_perturb(&corpus, corpus.instances(), &NonceConfig::new(seed));
        let d = write_nonce_set(dir.path(), seed, &out, &log).map_err(|e| e.to_string())?;
        let read = |f: &str| std::fs::read(d.join(f)).map_err(|e| e.to_string());
        Ok((read(NONCE_CORPUS_FILE)?, read(REPLACEMENTS_FILE)?))
    };
    ensure!(write(3)? == write(3)?, "same seed wrote different files");

    let (out, _) = nonce_perturb(&corpus, corpus.instances(), &NonceConfig::new(7));
    ensure!(out.instances() == corpus.instances(), "instances changed");
    for (a, b) in corpus.documents().iter().zip(out.documents()) {
        ensure!(
            a.doc_id == b.doc_id && a.len() == b.len() && a.sentence_spans == b.sentence_spans && a.events == b.events,
            "{}: structure changed",
            a.doc_id
        );
        let gold: BTreeSet<usize> = corpus
            .instances()
            .iter()
            .filter(|i| i.doc_id == a.doc_id)
            .flat_map(|i| i.arg_span.iter())
            .collect();
        for (j, (x, y)) in a.words.iter().zip(&b.words).enumerate() {
            ensure!(
                gold.contains(&j) || x == y,
                "{} word {j} outside argument spans altered",
                a.doc_id
            );
        }
    }
    Ok(())
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic20")
}

const PIPELINE: [&str; 5] = ["besthead", "linear", "cso", "evaluate", "report"];

/// Run the full fixture pipeline into `out`.
fn run_pipeline(out: &Path, jobs: &str) -> Check {
    let cfg = fixture_dir().join("attnprobe.toml");
    for cmd in PIPELINE {
        let o = Command::new(env!("CARGO_BIN_EXE_attnprobe"))
            .env_remove("ATTNPROBE_STORE")
            .env("RUST_LOG", "error")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--jobs", jobs, cmd])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            o.status.success(),
            "{cmd} failed: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    Ok(())
}

fn files_in(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))? {
        let p = e.map_err(|e| e.to_string())?.path();
        if p.is_file() {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            out.push((name, std::fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    out.sort();
    Ok(out)
}

fn golden_run() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(tmp.path(), "2")?;
    let golden = files_in(&fixture_dir().join("golden"))?;
    ensure!(!golden.is_empty(), "no golden files");
    let report = tmp.path().join("report");
    for (name, want) in golden {
        let got = std::fs::read(report.join(&name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(got == want, "{name} differs from golden");
    }
    Ok(())
}

fn determinism() -> Check {
    let (a, b) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    run_pipeline(a.path(), "1")?;
    run_pipeline(b.path(), "4")?;
    for sub in ["models", "report"] {
        let (x, y) = (files_in(&a.path().join(sub))?, files_in(&b.path().join(sub))?);
        ensure!(!x.is_empty(), "{sub}: nothing written");
        let names = |v: &[(String, Vec<u8>)]| v.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        ensure!(names(&x) == names(&y), "{sub}: different file sets");
        for ((name, p), (_, q)) in x.iter().zip(&y) {
            // manifests record the output directory itself
            if name != "manifest.json" {
                ensure!(p == q, "{sub}/{name} differs between runs");
            }
        }
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("distribution validity sweep", Duration::from_secs(10), validity_sweep),
        (
            "subword aggregation oracle",
            Duration::from_secs(10),
            aggregation_oracle,
        ),
        ("BestHead oracle equivalence", Duration::from_secs(10), besthead_oracle),
        ("planted-head recovery", Duration::from_secs(60), planted_recovery),
        ("gradient check", Duration::from_secs(10), gradient_check),
        ("baseline formulas", Duration::from_secs(30), baselines),
        ("CSO correctness", Duration::from_secs(5), cso_correctness),
        ("nonce properties", Duration::from_secs(30), nonce_properties),
        ("end-to-end golden run", Duration::from_secs(120), golden_run),
        ("determinism", Duration::from_secs(120), determinism),
    ];
    let mut failed = Vec::new();
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if took <= budget {
                Ok(())
            } else {
                Err(format!("over budget ({budget:?})"))
            }
        });
        match outcome {
            Ok(()) => println!("PASS {name} ({:.2}s)", took.as_secs_f64()),
            Err(why) => {
                println!("FAIL {name} ({:.2}s): {why}", took.as_secs_f64());
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
