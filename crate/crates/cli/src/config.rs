// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: a TOML file overlaid with command-line flags.
//!
//! Precedence is flags, then the file, then (for the store only) the
//! `ATTNPROBE_STORE` environment variable, then built-in defaults. Relative
//! paths in the file are resolved against the file's directory. The source
//! of every resolved value is kept so manifests can echo it.
//!
//! ```toml
//! seed = 0
//! exclude_trigger = true
//! store = "store"
//!
//! [corpus]
//! train = "train.jsonl"
//! dev = "dev.jsonl"
//! test = "test.jsonl"
//!
//! [roles]
//! top_k = 15            # or: list = ["victim", "place"]
//!
//! [train]
//! learning_rate = 0.01
//! max_epochs = 10
//!
//! [nonce]
//! seeds = [1, 2, 3, 4, 5]
//! stop_words = "stopwords.txt"
//! ```

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub const STORE_ENV: &str = "ATTNPROBE_STORE";
pub const DEFAULT_OUT: &str = "attnprobe-out";
pub const DEFAULT_TOP_K: usize = 15;
pub const DEFAULT_NONCE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exclude_trigger: Option<bool>,
    pub drop_multiword_triggers: Option<bool>,
    pub store: Option<PathBuf>,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub roles: RolesSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub nonce: NonceSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolesSection {
    pub top_k: Option<usize>,
    pub list: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonceSection {
    pub seeds: Option<Vec<u64>>,
    pub stop_words: Option<PathBuf>,
    /// Directory holding the `nonce-seed<k>/` sets; defaults to the output dir.
    pub root: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.out);
        fix(&mut self.store);
        fix(&mut self.corpus.train);
        fix(&mut self.corpus.dev);
        fix(&mut self.corpus.test);
        fix(&mut self.nonce.stop_words);
        fix(&mut self.nonce.root);
    }
}

/// Values supplied on the command line; `None` means not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exclude_trigger: Option<bool>,
    pub keep_multiword_triggers: bool,
    pub store: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub roles: Option<Vec<String>>,
    pub top_k: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub nonce_seeds: Option<Vec<u64>>,
    pub stop_words: Option<PathBuf>,
    pub nonce_root: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Flag,
    File,
    Env,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleSelection {
    TopK(usize),
    List(Vec<String>),
}

/// Fully resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub exclude_trigger: bool,
    pub drop_multiword_triggers: bool,
    pub store: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub roles: RoleSelection,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub nonce_seeds: Vec<u64>,
    pub stop_words: Option<PathBuf>,
    pub nonce_root: PathBuf,
    #[serde(skip)]
    pub sources: BTreeMap<&'static str, Source>,
}

/// Pick the first present layer and note where it came from.
fn pick<T>(
    sources: &mut BTreeMap<&'static str, Source>,
    key: &'static str,
    layers: [(Option<T>, Source); 3],
) -> Option<T> {
    for (value, source) in layers {
        if let Some(v) = value {
            sources.insert(key, source);
            return Some(v);
        }
    }
    None
}

impl RunConfig {
    pub fn resolve(flags: Overrides, file: FileConfig, env_store: Option<PathBuf>) -> CliResult<Self> {
        let mut s = BTreeMap::new();
        let out = pick(
            &mut s,
            "out",
            [
                (flags.out, Source::Flag),
                (file.out, Source::File),
                (Some(PathBuf::from(DEFAULT_OUT)), Source::Default),
            ],
        )
        .expect("default");
        let seed = pick(
            &mut s,
            "seed",
            [
                (flags.seed, Source::Flag),
                (file.seed, Source::File),
                (Some(0), Source::Default),
            ],
        )
        .expect("default");
        let exclude_trigger = pick(
            &mut s,
            "exclude_trigger",
            [
                (flags.exclude_trigger, Source::Flag),
                (file.exclude_trigger, Source::File),
                (Some(true), Source::Default),
            ],
        )
        .expect("default");
        let drop_multiword_triggers = pick(
            &mut s,
            "drop_multiword_triggers",
            [
                (flags.keep_multiword_triggers.then_some(false), Source::Flag),
                (file.drop_multiword_triggers, Source::File),
                (Some(true), Source::Default),
            ],
        )
        .expect("default");
        let store = pick(
            &mut s,
            "store",
            [
                (flags.store, Source::Flag),
                (file.store, Source::File),
                (env_store, Source::Env),
            ],
        );
        let train = pick(
            &mut s,
            "train",
            [
                (flags.train, Source::Flag),
                (file.corpus.train, Source::File),
                (None, Source::Default),
            ],
        );
        let dev = pick(
            &mut s,
            "dev",
            [
                (flags.dev, Source::Flag),
                (file.corpus.dev, Source::File),
                (None, Source::Default),
            ],
        );
        let test = pick(
            &mut s,
            "test",
            [
                (flags.test, Source::Flag),
                (file.corpus.test, Source::File),
                (None, Source::Default),
            ],
        );

        if file.roles.list.is_some() && file.roles.top_k.is_some() {
            return Err(CliError::config("roles.list and roles.top_k are mutually exclusive"));
        }
        let roles = if let Some(list) = flags.roles {
            s.insert("roles", Source::Flag);
            RoleSelection::List(list)
        } else if let Some(k) = flags.top_k {
            s.insert("roles", Source::Flag);
            RoleSelection::TopK(k)
        } else if let Some(list) = file.roles.list {
            s.insert("roles", Source::File);
            RoleSelection::List(list)
        } else if let Some(k) = file.roles.top_k {
            s.insert("roles", Source::File);
            RoleSelection::TopK(k)
        } else {
            s.insert("roles", Source::Default);
            RoleSelection::TopK(DEFAULT_TOP_K)
        };

        let defaults = attnprobe::TrainConfig::default();
        let learning_rate = pick(
            &mut s,
            "learning_rate",
            [
                (flags.learning_rate, Source::Flag),
                (file.train.learning_rate, Source::File),
                (Some(defaults.learning_rate), Source::Default),
            ],
        )
        .expect("default");
        let max_epochs = pick(
            &mut s,
            "max_epochs",
            [
                (flags.max_epochs, Source::Flag),
                (file.train.max_epochs, Source::File),
                (Some(defaults.max_epochs), Source::Default),
            ],
        )
        .expect("default");
        let nonce_seeds = pick(
            &mut s,
            "nonce_seeds",
            [
                (flags.nonce_seeds, Source::Flag),
                (file.nonce.seeds, Source::File),
                (Some(DEFAULT_NONCE_SEEDS.to_vec()), Source::Default),
            ],
        )
        .expect("default");
        let stop_words = pick(
            &mut s,
            "stop_words",
            [
                (flags.stop_words, Source::Flag),
                (file.nonce.stop_words, Source::File),
                (None, Source::Default),
            ],
        );
        let nonce_root = pick(
            &mut s,
            "nonce_root",
            [
                (flags.nonce_root, Source::Flag),
                (file.nonce.root, Source::File),
                (None, Source::Default),
            ],
        )
        .unwrap_or_else(|| {
            s.insert("nonce_root", Source::Default);
            out.clone()
        });

        let cfg = RunConfig {
            out,
            seed,
            exclude_trigger,
            drop_multiword_triggers,
            store,
            train,
            dev,
            test,
            roles,
            learning_rate,
            max_epochs,
            nonce_seeds,
            stop_words,
            nonce_root,
            sources: s,
        };
        cfg.check_values()?;
        Ok(cfg)
    }

    fn check_values(&self) -> CliResult<()> {
        let distinct: BTreeSet<u64> = self.nonce_seeds.iter().copied().collect();
        if distinct.len() != self.nonce_seeds.len() {
            return Err(CliError::config(format!(
                "nonce seeds must be distinct: {:?}",
                self.nonce_seeds
            )));
        }
        match &self.roles {
            RoleSelection::TopK(0) => return Err(CliError::config("roles.top_k must be at least 1")),
            RoleSelection::List(l) if l.is_empty() => return Err(CliError::config("roles.list is empty")),
            _ => {}
        }
        self.train_config().validate()?;
        Ok(())
    }

    pub fn train_config(&self) -> attnprobe::TrainConfig {
        attnprobe::TrainConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.max_epochs,
            seed: self.seed,
            ..Default::default()
        }
    }

    /// Existing path for a required input, or a configuration error.
    pub fn require(&self, what: &str, path: &Option<PathBuf>) -> CliResult<PathBuf> {
        let p = path
            .as_ref()
            .ok_or_else(|| CliError::config(format!("no {what} configured")))?;
        if !p.exists() {
            return Err(CliError::config(format!("{what} {} does not exist", p.display())));
        }
        Ok(p.clone())
    }

    pub fn store_dir(&self) -> CliResult<PathBuf> {
        let p = self.require("attention store", &self.store)?;
        if !p.is_dir() {
            return Err(CliError::config(format!(
                "attention store {} is not a directory",
                p.display()
            )));
        }
        Ok(p)
    }

    /// Optional input that, when configured, must exist.
    pub fn optional(&self, what: &str, path: &Option<PathBuf>) -> CliResult<Option<PathBuf>> {
        match path {
            None => Ok(None),
            Some(_) => self.require(what, path).map(Some),
        }
    }

    pub fn sources_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.sources).expect("sources serialise")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> FileConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let f = file("seed = 3\nexclude_trigger = false\n[train]\nmax_epochs = 4\n");
        let flags = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(flags, f, None).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sources["seed"], Source::Flag);
        assert!(!cfg.exclude_trigger);
        assert_eq!(cfg.sources["exclude_trigger"], Source::File);
        assert_eq!(cfg.max_epochs, 4);
        assert_eq!(cfg.learning_rate, 0.01);
        assert_eq!(cfg.sources["learning_rate"], Source::Default);
        assert_eq!(cfg.roles, RoleSelection::TopK(DEFAULT_TOP_K));
    }

    #[test]
    fn env_store_is_lowest_priority() {
        let cfg = RunConfig::resolve(Overrides::default(), FileConfig::default(), Some("/env".into())).unwrap();
        assert_eq!(cfg.store, Some(PathBuf::from("/env")));
        assert_eq!(cfg.sources["store"], Source::Env);
        let cfg = RunConfig::resolve(Overrides::default(), file("store = \"/f\""), Some("/env".into())).unwrap();
        assert_eq!(cfg.store, Some(PathBuf::from("/f")));
    }

    #[test]
    fn rejects_bad_values() {
        let dup = file("[nonce]\nseeds = [1, 1]\n");
        assert!(matches!(
            RunConfig::resolve(Overrides::default(), dup, None),
            Err(CliError::Config(_))
        ));
        let both = file("[roles]\ntop_k = 3\nlist = [\"a\"]\n");
        assert!(RunConfig::resolve(Overrides::default(), both, None).is_err());
        let lr = file("[train]\nlearning_rate = -1.0\n");
        assert_eq!(
            RunConfig::resolve(Overrides::default(), lr, None)
                .unwrap_err()
                .exit_code(),
            2
        );
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let mut f = file("store = \"s\"\n[corpus]\ntrain = \"/abs/t.jsonl\"\n");
        f.rebase(Path::new("/cfg"));
        assert_eq!(f.store, Some(PathBuf::from("/cfg/s")));
        assert_eq!(f.corpus.train, Some(PathBuf::from("/abs/t.jsonl")));
    }
}
