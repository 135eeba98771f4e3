// SPDX-License-Identifier: MIT OR Apache-2.0

//! One function per subcommand. Every command writes its artifacts under
//! `out/<command>/` together with a run manifest; fitted probes go to
//! `out/models/`.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::pipeline::{command_dir, create_dir, models_dir, Inputs, Needs};
use attnprobe::attention::{write_store, AttentionStore};
use attnprobe::corpus::{filter_instances, load_corpus, role_frequency_table};
use attnprobe::eval::{evaluate, evaluate_baselines, evaluate_nonce, read_results, write_report, write_results};
use attnprobe::perturb::{load_stop_words, nonce_dir, nonce_perturb, write_nonce_set, NonceConfig, NONCE_CORPUS_FILE};
use attnprobe::probes::{
    fit_best_head, fit_best_head_cso, train_linear, train_linear_cso, HeadView, Probe, ProbeOptions,
};
use attnprobe::synth::{fixture, FIXTURE_MODEL};
use attnprobe::{Corpus, Error, EvalResult, ProbeSet, Split};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const NONCE_STORE_DIR: &str = "store";

fn save_probe(probe: &Probe, cfg: &RunConfig, manifest: &mut ManifestBuilder) -> CliResult<()> {
    let dir = models_dir(cfg);
    create_dir(&dir)?;
    let path = dir.join(probe.file_name());
    probe.save(&path)?;
    manifest.output(path);
    Ok(())
}

/// Write results (and a report when there are any) plus the manifest.
fn finish(
    cfg: &RunConfig,
    name: &'static str,
    mut manifest: ManifestBuilder,
    results: &[EvalResult],
    with_report: bool,
) -> CliResult<PathBuf> {
    let dir = command_dir(cfg, name)?;
    let path = dir.join(RESULTS_FILE);
    write_results(&path, results)?;
    manifest.output(path);
    if with_report && !results.is_empty() {
        for p in write_report(&dir.join("report"), results)? {
            manifest.output(p);
        }
    }
    manifest.stat("results", results.len());
    manifest.write(cfg, &dir)?;
    println!("{name}: {} result(s) written to {}", results.len(), dir.display());
    Ok(dir)
}

fn full_view(cfg: &RunConfig) -> ProbeOptions {
    ProbeOptions {
        view: HeadView::Full,
        exclude_trigger: cfg.exclude_trigger,
    }
}

pub fn besthead(cfg: &RunConfig) -> CliResult<()> {
    let mut m = ManifestBuilder::new("besthead");
    let inputs = Inputs::load(
        cfg,
        Needs {
            train: true,
            test: true,
            store: true,
            ..Needs::default()
        },
        &mut m,
    )?;
    let train = inputs.probe_set(&inputs.train)?;
    let test = inputs.probe_set(&inputs.test)?;
    let opts = inputs.eval_options(cfg);
    let mut results = Vec::new();
    for role in &inputs.roles {
        let model = fit_best_head(train.items(), role, full_view(cfg))?;
        log::info!(
            "{role}: best head {} (train accuracy {:.4})",
            model.head,
            model.train_accuracy
        );
        let probe = Probe::BestHead(model);
        save_probe(&probe, cfg, &mut m)?;
        results.extend(evaluate(&probe, &test, &opts)?);
    }
    finish(cfg, "besthead", m, &results, true)?;
    Ok(())
}

pub fn linear(cfg: &RunConfig) -> CliResult<()> {
    let mut m = ManifestBuilder::new("linear");
    let inputs = Inputs::load(
        cfg,
        Needs {
            train: true,
            dev: true,
            test: true,
            store: true,
        },
        &mut m,
    )?;
    let train = inputs.probe_set(&inputs.train)?;
    let dev = inputs.probe_set(&inputs.dev)?;
    let test = inputs.probe_set(&inputs.test)?;
    let tc = cfg.train_config();
    let opts = inputs.eval_options(cfg);
    let mut results = Vec::new();
    for role in &inputs.roles {
        let model = train_linear(train.items(), dev.items(), role, &tc, full_view(cfg))?;
        log::info!("{role}: linear probe selected at dev accuracy {:.4}", model.dev_acc);
        let probe = Probe::Linear(model);
        save_probe(&probe, cfg, &mut m)?;
        results.extend(evaluate(&probe, &test, &opts)?);
    }
    finish(cfg, "linear", m, &results, true)?;
    Ok(())
}

/// Instances whose document is one sentence long; occlusion leaves nothing.
fn single_sentence(set: &ProbeSet) -> Vec<String> {
    set.items()
        .iter()
        .filter(|p| p.trigger_sentence.len() >= p.doc_len)
        .map(|p| p.id())
        .collect()
}

pub fn cso(cfg: &RunConfig) -> CliResult<()> {
    let mut m = ManifestBuilder::new("cso");
    let inputs = Inputs::load(
        cfg,
        Needs {
            train: true,
            dev: true,
            test: true,
            store: true,
        },
        &mut m,
    )?;
    let train = inputs.probe_set(&inputs.train)?;
    let dev = inputs.probe_set(&inputs.dev)?;
    let test = inputs.probe_set(&inputs.test)?;

    let mut skipped = 0usize;
    for set in [&train, &dev, &test] {
        for id in single_sentence(set) {
            log::warn!("skipping {id}: single-sentence document, nothing outside the trigger sentence");
            skipped += 1;
        }
    }

    let tc = cfg.train_config();
    let opts = inputs.eval_options(cfg);
    let mut results = Vec::new();
    let mut skipped_roles = Vec::new();
    for role in &inputs.roles {
        let head = match fit_best_head_cso(train.items(), role, cfg.exclude_trigger) {
            Err(Error::NoCrossSentenceInstances { .. }) => {
                log::warn!("skipping role {role}: no cross-sentence training instances");
                skipped_roles.push(role.clone());
                continue;
            }
            other => other?,
        };
        log::info!(
            "{role}: occluded best head {} (train accuracy {:.4})",
            head.head,
            head.train_accuracy
        );
        let linear = train_linear_cso(train.items(), dev.items(), role, &tc, cfg.exclude_trigger)?;
        for probe in [Probe::BestHead(head), Probe::Linear(linear)] {
            save_probe(&probe, cfg, &mut m)?;
            results.extend(evaluate(&probe, &test, &opts)?);
        }
    }
    m.stat("skipped_instances", skipped);
    m.stat("skipped_roles", &skipped_roles);
    println!(
        "cso: {skipped} instance(s) skipped in single-sentence documents; {} role(s) without cross-sentence training data",
        skipped_roles.len()
    );
    finish(cfg, "cso", m, &results, true)?;
    Ok(())
}

fn list_models(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::config(format!("cannot read models directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn load_nonce_sets(cfg: &RunConfig, inputs: &Inputs) -> CliResult<Vec<(u64, ProbeSet)>> {
    let roles = inputs.roles.iter().cloned().collect();
    let mut sets = Vec::new();
    for &seed in &cfg.nonce_seeds {
        let dir = nonce_dir(&cfg.nonce_root, seed);
        let corpus_path = dir.join(NONCE_CORPUS_FILE);
        let store_dir = dir.join(NONCE_STORE_DIR);
        if !corpus_path.exists() || !store_dir.is_dir() {
            return Err(CliError::config(format!(
                "nonce seed {seed}: expected {} and an extracted store in {} (run nonce-gen, then the extractor)",
                corpus_path.display(),
                store_dir.display()
            )));
        }
        let corpus = load_corpus(&corpus_path, Split::Test)?;
        let instances = filter_instances(&corpus, Some(&roles), cfg.drop_multiword_triggers);
        let store = AttentionStore::open(&store_dir)?;
        sets.push((seed, ProbeSet::load(&corpus, &instances, &store)?));
    }
    Ok(sets)
}

pub fn evaluate_cmd(cfg: &RunConfig, models: Option<PathBuf>, nonce: bool) -> CliResult<()> {
    let mut m = ManifestBuilder::new("evaluate");
    let inputs = Inputs::load(
        cfg,
        Needs {
            test: true,
            store: true,
            ..Needs::default()
        },
        &mut m,
    )?;
    let test_split = inputs.test.as_ref().expect("test requested");
    let test = inputs.probe_set(&inputs.test)?;
    let opts = inputs.eval_options(cfg);

    let mut results = evaluate_baselines(&test_split.corpus, &test_split.instances, &inputs.roles, &opts)?;
    let model_dir = models.unwrap_or_else(|| models_dir(cfg));
    let mut probes = Vec::new();
    for path in list_models(&model_dir)? {
        let probe = Probe::load(&path)?;
        if !inputs.roles.iter().any(|r| r == probe.role()) {
            log::warn!("{}: role {} is not selected, skipping", path.display(), probe.role());
            continue;
        }
        m.input_file(&path)?;
        probes.push(probe);
    }
    for probe in &probes {
        results.extend(evaluate(probe, &test, &opts)?);
    }
    if nonce {
        let sets = load_nonce_sets(cfg, &inputs)?;
        for probe in probes.iter().filter(|p| p.view() == HeadView::Full) {
            results.extend(evaluate_nonce(probe, &sets, &opts)?);
        }
    }
    m.stat("models", probes.len());
    finish(cfg, "evaluate", m, &results, false)?;
    Ok(())
}

pub fn report(cfg: &RunConfig, files: Vec<PathBuf>) -> CliResult<()> {
    let mut m = ManifestBuilder::new("report");
    let files = if files.is_empty() {
        vec![cfg.out.join("evaluate").join(RESULTS_FILE)]
    } else {
        files
    };
    let mut results = Vec::new();
    for f in &files {
        if !f.exists() {
            return Err(CliError::config(format!("results file {} does not exist", f.display())));
        }
        m.input_file(f)?;
        results.extend(read_results(f)?);
    }
    let dir = command_dir(cfg, "report")?;
    for p in write_report(&dir, &results)? {
        m.output(p);
    }
    m.write(cfg, &dir)?;
    println!("report: {} result(s) rendered to {}", results.len(), dir.display());
    Ok(())
}

pub fn nonce_gen(cfg: &RunConfig) -> CliResult<()> {
    let mut m = ManifestBuilder::new("nonce-gen");
    let inputs = Inputs::load(
        cfg,
        Needs {
            test: true,
            ..Needs::default()
        },
        &mut m,
    )?;
    let test = inputs.test.as_ref().expect("test requested");
    let mut base = NonceConfig::new(0);
    if let Some(path) = cfg.optional("stop-word list", &cfg.stop_words)? {
        m.input_file(&path)?;
        base = base.with_stop_words(load_stop_words(&path)?)?;
    }
    let model = cfg
        .store
        .as_ref()
        .and_then(|s| AttentionStore::open(s).ok())
        .map_or_else(|| "<model-tag>".to_string(), |s| s.model().to_string());

    let mut commands = Vec::new();
    for &seed in &cfg.nonce_seeds {
        let nc = NonceConfig { seed, ..base.clone() };
        let (corpus, log) = nonce_perturb(&test.corpus, &test.instances, &nc);
        let dir = write_nonce_set(&cfg.nonce_root, seed, &corpus, &log)?;
        m.output(dir.join(NONCE_CORPUS_FILE));
        m.output(dir.join(attnprobe::perturb::REPLACEMENTS_FILE));
        log::info!("seed {seed}: {} word(s) replaced", log.len());
        commands.push(format!(
            "extract --corpus {} --model {model} --out {} --max-len 512 --batch-size 8",
            dir.join(NONCE_CORPUS_FILE).display(),
            dir.join(NONCE_STORE_DIR).display()
        ));
    }
    let dir = command_dir(cfg, "nonce-gen")?;
    m.stat("extractor_commands", &commands);
    m.write(cfg, &dir)?;
    println!(
        "nonce-gen: {} perturbed corpus set(s) written. Extract attention for each:",
        commands.len()
    );
    for c in &commands {
        println!("  {c}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SplitSummary {
    split: Split,
    documents: usize,
    instances: usize,
    kept: usize,
    multiword_trigger_dropped: usize,
    cross_sentence: usize,
    single_sentence_documents: usize,
    mean_special_mass_removed: f64,
}

#[derive(Serialize)]
struct ValidationSummary {
    store_model: String,
    layers: usize,
    heads: usize,
    splits: Vec<SplitSummary>,
    train_role_frequency: Vec<(String, usize)>,
}

pub fn ingest_validate(cfg: &RunConfig) -> CliResult<()> {
    let mut m = ManifestBuilder::new("ingest-validate");
    let store_dir = cfg.store_dir()?;
    m.input_store(&store_dir)?;
    let store = AttentionStore::open(&store_dir)?;
    let configured = [
        (Split::Train, cfg.optional("training corpus", &cfg.train)?),
        (Split::Dev, cfg.optional("dev corpus", &cfg.dev)?),
        (Split::Test, cfg.optional("test corpus", &cfg.test)?),
    ];
    if configured.iter().all(|(_, p)| p.is_none()) {
        return Err(CliError::config("no corpus configured"));
    }
    let mut splits = Vec::new();
    let mut freq = Vec::new();
    for (split, path) in configured {
        let Some(path) = path else { continue };
        m.input_file(&path)?;
        let corpus: Corpus = load_corpus(&path, split)?;
        let kept = filter_instances(&corpus, None, cfg.drop_multiword_triggers);
        let set = ProbeSet::load(&corpus, &kept, &store)?;
        let attention = store.load_many(corpus.documents().iter().map(|d| d.doc_id.as_str()))?;
        let special: f64 =
            attention.values().map(|a| a.special_mass_removed()).sum::<f64>() / attention.len().max(1) as f64;
        if split == Split::Train {
            freq = role_frequency_table(&corpus);
        }
        splits.push(SplitSummary {
            split,
            documents: corpus.len(),
            instances: corpus.instances().len(),
            kept: kept.len(),
            multiword_trigger_dropped: corpus.instances().iter().filter(|i| i.is_multiword_trigger()).count(),
            cross_sentence: set.cross_sentence().count(),
            single_sentence_documents: corpus
                .documents()
                .iter()
                .filter(|d| d.sentence_spans.len() == 1)
                .count(),
            mean_special_mass_removed: special,
        });
    }
    let summary = ValidationSummary {
        store_model: store.model().to_string(),
        layers: store.manifest().num_layers,
        heads: store.manifest().num_heads,
        splits,
        train_role_frequency: freq,
    };
    let dir = command_dir(cfg, "ingest-validate")?;
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n";
    std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    m.output(path);
    m.write(cfg, &dir)?;
    println!(
        "ingest-validate: store {} (L={}, H={})",
        summary.store_model, summary.layers, summary.heads
    );
    for s in &summary.splits {
        println!(
            "  {}: {} documents, {} instances ({} kept, {} cross-sentence)",
            s.split, s.documents, s.instances, s.kept, s.cross_sentence
        );
    }
    Ok(())
}

pub const FIXTURE_CONFIG: &str = "attnprobe.toml";

/// Write the synthetic fixture: three corpus splits, an attention store and
/// a config file pointing at them.
pub fn fixtures(cfg: &RunConfig, docs: usize) -> CliResult<()> {
    if docs < 10 {
        return Err(CliError::config(
            "fixtures need at least 10 documents to fill every split",
        ));
    }
    let mut m = ManifestBuilder::new("fixtures");
    let fx = fixture(cfg.seed, docs);
    let out = &cfg.out;
    create_dir(out)?;
    for (name, corpus) in [
        ("train.jsonl", &fx.train),
        ("dev.jsonl", &fx.dev),
        ("test.jsonl", &fx.test),
    ] {
        let path = out.join(name);
        corpus.write_jsonl(&path)?;
        m.output(path);
    }
    let store_dir = out.join("store");
    let manifest = write_store(&store_dir, FIXTURE_MODEL, &fx.records)?;
    m.output(store_dir.join(attnprobe::attention::MANIFEST));
    for f in &manifest.files {
        m.output(store_dir.join(f));
    }
    let config = format!(
        "# Synthetic fixture: attnprobe fixtures --docs {docs} --seed {}\n\
         store = \"store\"\n\n[corpus]\ntrain = \"train.jsonl\"\ndev = \"dev.jsonl\"\ntest = \"test.jsonl\"\n\n\
         [roles]\ntop_k = 15\n",
        cfg.seed
    );
    let path = out.join(FIXTURE_CONFIG);
    std::fs::write(&path, config).map_err(|e| CliError::io(&path, e))?;
    m.output(path);
    m.stat("documents", docs);
    let dir = command_dir(cfg, "fixtures")?;
    m.write(cfg, &dir)?;
    println!("fixtures: {docs} documents written to {}", out.display());
    Ok(())
}
