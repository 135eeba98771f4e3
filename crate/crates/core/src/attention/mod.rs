// SPDX-License-Identifier: MIT OR Apache-2.0

//! Attention tensors: the `ATNP` interchange format, attention stores,
//! subword to word aggregation and signed head distributions.

mod aggregate;
mod format;
mod head;
mod store;

pub use aggregate::{aggregate_subwords, WordAttention};
pub use format::{
    decode, encode, read_attention, write_attention, AttentionRecord, MAGIC, ROW_SUM_TOLERANCE, SPECIAL, VERSION,
};
pub use head::{head_distribution, HeadDistribution, HeadIndex};
pub use store::{write_store, AttentionStore, StoreManifest, MANIFEST};
