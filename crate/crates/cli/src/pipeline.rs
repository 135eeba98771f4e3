// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::config::{RoleSelection, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use attnprobe::attention::AttentionStore;
use attnprobe::corpus::{count_roles, filter_instances, load_corpus};
use attnprobe::eval::EvalOptions;
use attnprobe::{Corpus, EventInstance, ProbeSet, Split};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// One split: its corpus and the instances kept after filtering.
pub struct SplitData {
    pub corpus: Corpus,
    pub instances: Vec<EventInstance>,
}

/// Corpora, role selection and attention for one command.
pub struct Inputs {
    pub roles: Vec<String>,
    pub encoder: String,
    pub train: Option<SplitData>,
    pub dev: Option<SplitData>,
    pub test: Option<SplitData>,
    pub store: Option<AttentionStore>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub train: bool,
    pub dev: bool,
    pub test: bool,
    pub store: bool,
}

fn load_split(path: &Path, split: Split, manifest: &mut ManifestBuilder) -> CliResult<Corpus> {
    manifest.input_file(path)?;
    Ok(load_corpus(path, split)?)
}

/// Roles from the explicit list, or the `k` most frequent among filtered
/// training instances.
pub fn select_roles(cfg: &RunConfig, train: Option<&Corpus>) -> CliResult<Vec<String>> {
    match &cfg.roles {
        RoleSelection::List(list) => Ok(list.clone()),
        RoleSelection::TopK(k) => {
            let train = train.ok_or_else(|| CliError::config("top-k role selection needs a training corpus"))?;
            let kept = filter_instances(train, None, cfg.drop_multiword_triggers);
            Ok(count_roles(&kept).into_iter().take(*k).map(|(r, _)| r).collect())
        }
    }
}

impl Inputs {
    pub fn load(cfg: &RunConfig, needs: Needs, manifest: &mut ManifestBuilder) -> CliResult<Self> {
        let train_path = if needs.train || matches!(cfg.roles, RoleSelection::TopK(_)) {
            Some(cfg.require("training corpus", &cfg.train)?)
        } else {
            cfg.optional("training corpus", &cfg.train)?
        };
        let dev_path = if needs.dev {
            cfg.optional("dev corpus", &cfg.dev)?
        } else {
            None
        };
        let test_path = if needs.test {
            Some(cfg.require("test corpus", &cfg.test)?)
        } else {
            None
        };
        let store = if needs.store {
            let dir = cfg.store_dir()?;
            manifest.input_store(&dir)?;
            Some(AttentionStore::open(&dir)?)
        } else {
            None
        };

        let train = train_path.map(|p| load_split(&p, Split::Train, manifest)).transpose()?;
        let roles = select_roles(cfg, train.as_ref())?;
        let role_set: BTreeSet<String> = roles.iter().cloned().collect();
        let keep = |corpus: Corpus| SplitData {
            instances: filter_instances(&corpus, Some(&role_set), cfg.drop_multiword_triggers),
            corpus,
        };
        let dev = dev_path.map(|p| load_split(&p, Split::Dev, manifest)).transpose()?;
        let test = test_path.map(|p| load_split(&p, Split::Test, manifest)).transpose()?;
        let encoder = store
            .as_ref()
            .map_or_else(|| "-".to_string(), |s| s.model().to_string());
        Ok(Inputs {
            roles,
            encoder,
            train: train.map(keep),
            dev: dev.map(keep),
            test: test.map(keep),
            store,
        })
    }

    pub fn probe_set(&self, split: &Option<SplitData>) -> CliResult<ProbeSet> {
        let store = self.store.as_ref().expect("store requested");
        match split {
            Some(s) => Ok(ProbeSet::load(&s.corpus, &s.instances, store)?),
            None => Ok(ProbeSet::default()),
        }
    }

    pub fn eval_options(&self, cfg: &RunConfig) -> EvalOptions {
        EvalOptions {
            encoder: self.encoder.clone(),
            exclude_trigger: cfg.exclude_trigger,
        }
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// `out/<name>`, created.
pub fn command_dir(cfg: &RunConfig, name: &str) -> CliResult<PathBuf> {
    let dir = cfg.out.join(name);
    create_dir(&dir)?;
    Ok(dir)
}

pub fn models_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("models")
}
