// SPDX-License-Identifier: MIT OR Apache-2.0

//! Probing toolkit for locating event-argument tokens in the attention maps
//! of a frozen transformer encoder.
//!
//! The crate is organised around the data flow of a probing run:
//!
//! - [`corpus`]: role-annotated documents in line-delimited JSON.
//! - [`attention`]: the `ATNP` tensor format, attention stores, subword to
//!   word aggregation and signed from/to head distributions.
//! - [`probes`]: single-head selection (`BestHead`) and the trainable
//!   mixture probe (`Linear`).
//! - [`perturb`]: cross-sentence occlusion and nonce corpus perturbation.
//! - [`eval`]: token accuracy, analytic baselines, aggregation and reports.
//! - [`synth`]: deterministic synthetic corpora and stores for tests and
//!   the bundled fixture.

pub mod attention;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod instances;
pub mod perturb;
pub mod probes;
pub mod span;
pub mod synth;

pub use attention::{
    aggregate_subwords, head_distribution, AttentionRecord, AttentionStore, HeadDistribution, HeadIndex, WordAttention,
};
pub use corpus::{filter_instances, load_corpus, role_frequency_table, Corpus, Document, EventInstance, Split};
pub use error::{Error, ErrorClass, Result};
pub use eval::{acc, rand_baseline, sentonly_baseline, Approach, EvalResult, Subset};
pub use instances::{ProbeInstance, ProbeSet};
pub use perturb::{cso_distribution, nonce_perturb, nonce_token, NonceConfig, ShapeProfile};
pub use probes::{
    fit_best_head, kl_loss, linear_mix, predict_token, train_linear, BestHeadModel, GoldDistribution, HeadView,
    LinearModel, TrainConfig,
};
pub use span::Span;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
