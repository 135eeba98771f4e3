// SPDX-License-Identifier: MIT OR Apache-2.0

//! Counterfactual analyses: cross-sentence occlusion of head distributions
//! and nonce replacement of gold-argument words.
//!
//! Nonce perturbation operates on corpus text. Replaced words tokenize
//! differently, so each perturbed corpus has to be re-extracted into its own
//! attention store before evaluation.

mod cso;
mod nonce;

pub use cso::{cso_distribution, occlude};
pub use nonce::{
    doc_rng, load_stop_words, nonce_dir, nonce_perturb, nonce_token, parse_stop_words, write_nonce_set, CharClass,
    NonceConfig, Replacement, ShapeProfile, DEFAULT_STOP_WORDS, NONCE_CORPUS_FILE, REPLACEMENTS_FILE,
};
