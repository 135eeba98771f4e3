// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::commands;
use crate::config::{FileConfig, Overrides, RunConfig, STORE_ENV};
use crate::error::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "attnprobe",
    version,
    about = "Probe transformer attention heads for event arguments"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Seed for training shuffles and fixture generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Never predict the trigger word itself (default).
    #[arg(long, global = true, overrides_with = "no_exclude_trigger")]
    pub exclude_trigger: bool,

    /// Allow predicting the trigger word.
    #[arg(long, global = true, overrides_with = "exclude_trigger")]
    pub no_exclude_trigger: bool,

    #[command(flatten)]
    pub inputs: InputArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Training corpus (line JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub train: Option<PathBuf>,

    /// Development corpus used for checkpoint selection.
    #[arg(long, global = true, value_name = "FILE")]
    pub dev: Option<PathBuf>,

    /// Test corpus.
    #[arg(long, global = true, value_name = "FILE")]
    pub test: Option<PathBuf>,

    /// Attention store directory [env: ATTNPROBE_STORE, below the config file].
    #[arg(long, global = true, value_name = "DIR")]
    pub store: Option<PathBuf>,

    /// Explicit roles, comma separated.
    #[arg(long, global = true, value_delimiter = ',', conflicts_with = "top_k")]
    pub roles: Option<Vec<String>>,

    /// Use the k most frequent training roles.
    #[arg(long, global = true, value_name = "K")]
    pub top_k: Option<usize>,

    /// Keep instances whose trigger spans several words.
    #[arg(long, global = true)]
    pub keep_multiword_triggers: bool,

    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,

    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    /// Nonce seeds, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub nonce_seeds: Option<Vec<u64>>,

    /// Stop-word list (comma or newline separated).
    #[arg(long, global = true, value_name = "FILE")]
    pub stop_words: Option<PathBuf>,

    /// Directory holding nonce-seed<k>/ sets (default: the output directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub nonce_root: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate corpora against the attention store and summarise them.
    IngestValidate,
    /// Select the best signed head per role and evaluate it.
    Besthead,
    /// Train the mixture probe per role and evaluate it.
    Linear,
    /// Fit both probes on cross-sentence instances with the trigger sentence occluded.
    Cso,
    /// Write nonce-perturbed test corpora, one per seed.
    NonceGen,
    /// Evaluate saved probes and analytic baselines on the test corpus.
    Evaluate {
        /// Directory of model files (default: <out>/models).
        #[arg(long, value_name = "DIR")]
        models: Option<PathBuf>,
        /// Also average over nonce sets (needs extracted stores per seed).
        #[arg(long)]
        nonce: bool,
    },
    /// Render TSV and Markdown tables from results files.
    Report {
        /// Results files (default: <out>/evaluate/results.jsonl).
        #[arg(long = "results", value_name = "FILE")]
        results: Vec<PathBuf>,
    },
    /// Generate the synthetic fixture corpus and attention store.
    Fixtures {
        #[arg(long, default_value_t = 20)]
        docs: usize,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let i = &self.inputs;
        let exclude_trigger = if self.no_exclude_trigger {
            Some(false)
        } else if self.exclude_trigger {
            Some(true)
        } else {
            None
        };
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            exclude_trigger,
            keep_multiword_triggers: i.keep_multiword_triggers,
            store: i.store.clone(),
            train: i.train.clone(),
            dev: i.dev.clone(),
            test: i.test.clone(),
            roles: i.roles.clone(),
            top_k: i.top_k,
            learning_rate: i.learning_rate,
            max_epochs: i.epochs,
            nonce_seeds: i.nonce_seeds.clone(),
            stop_words: i.stop_words.clone(),
            nonce_root: i.nonce_root.clone(),
        }
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let env_store = std::env::var_os(STORE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        RunConfig::resolve(self.overrides(), file, env_store)
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    }
    let cfg = cli.resolve()?;
    match cli.command {
        Command::IngestValidate => commands::ingest_validate(&cfg),
        Command::Besthead => commands::besthead(&cfg),
        Command::Linear => commands::linear(&cfg),
        Command::Cso => commands::cso(&cfg),
        Command::NonceGen => commands::nonce_gen(&cfg),
        Command::Evaluate { models, nonce } => commands::evaluate_cmd(&cfg, models, nonce),
        Command::Report { results } => commands::report(&cfg, results),
        Command::Fixtures { docs } => commands::fixtures(&cfg, docs),
    }
}
