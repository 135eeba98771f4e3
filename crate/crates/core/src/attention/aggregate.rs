// SPDX-License-Identifier: MIT OR Apache-2.0

use super::format::AttentionRecord;
use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::ops::Range;

/// Word-level attention, `beta[l][h][i][j]` over document words.
#[derive(Debug, Clone, PartialEq)]
pub struct WordAttention {
    doc_id: String,
    num_layers: usize,
    num_heads: usize,
    num_words: usize,
    beta: Vec<f64>,
    /// Mean attention mass per subword row that fell on special tokens.
    special_mass_removed: f64,
}

impl WordAttention {
    /// Build directly from a word-level tensor; rows must be stochastic.
    pub fn from_beta(
        doc_id: impl Into<String>,
        num_layers: usize,
        num_heads: usize,
        num_words: usize,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        if num_words == 0 {
            return Err(Error::NoWords { doc_id });
        }
        if beta.len() != num_layers * num_heads * num_words * num_words {
            return Err(Error::DimensionMismatch(format!(
                "{} values for L={num_layers} H={num_heads} W={num_words}",
                beta.len()
            )));
        }
        for (r, row) in beta.chunks_exact(num_words).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::DimensionMismatch(format!(
                    "{doc_id}: row {r} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(WordAttention {
            doc_id,
            num_layers,
            num_heads,
            num_words,
            beta,
            special_mass_removed: 0.0,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_heads(&self) -> usize {
        self.num_heads
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn special_mass_removed(&self) -> f64 {
        self.special_mass_removed
    }

    pub fn row(&self, layer: usize, head: usize, i: usize) -> &[f64] {
        let w = self.num_words;
        let start = ((layer * self.num_heads + head) * w + i) * w;
        &self.beta[start..start + w]
    }

    pub fn get(&self, layer: usize, head: usize, i: usize, j: usize) -> f64 {
        self.row(layer, head, i)[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta
    }

    /// SHA-256 over the tensor bytes.
    pub fn checksum(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.doc_id.as_bytes());
        for v in &self.beta {
            h.update(v.to_le_bytes());
        }
        h.finalize().into()
    }
}

/// Contiguous subword range of each word.
fn word_groups(rec: &AttentionRecord) -> Vec<Range<usize>> {
    let mut groups: Vec<Range<usize>> = vec![0..0; rec.word_count];
    for (pos, w) in rec.alignment.iter().enumerate() {
        if let Some(w) = *w {
            let g = &mut groups[w];
            if g.start == g.end {
                *g = pos..pos + 1;
            } else {
                g.end = pos + 1;
            }
        }
    }
    groups
}

/// Collapse subword attention onto words.
///
/// Per subword row, mass on special positions is dropped and the row is
/// renormalised over the remaining positions. Incoming attention is then
/// summed over each target word's subwords, and outgoing attention averaged
/// over each source word's subwords. Special rows do not contribute.
pub fn aggregate_subwords(rec: &AttentionRecord) -> Result<WordAttention> {
    let nw = rec.word_count;
    if nw == 0 {
        return Err(Error::NoWords {
            doc_id: rec.doc_id.clone(),
        });
    }
    let groups = word_groups(rec);
    let is_word: Vec<bool> = rec.alignment.iter().map(Option::is_some).collect();
    let mut beta = vec![0.0f64; rec.num_layers * rec.num_heads * nw * nw];
    let mut special_mass = 0.0;
    let mut rows = 0usize;
    let mut summed = vec![0.0f64; nw];

    for layer in 0..rec.num_layers {
        for head in 0..rec.num_heads {
            let base = (layer * rec.num_heads + head) * nw * nw;
            for (wi, src) in groups.iter().enumerate() {
                let out = &mut beta[base + wi * nw..base + (wi + 1) * nw];
                let mut n_sub = 0usize;
                for i in src.clone() {
                    if !is_word[i] {
                        // special token interleaved inside a word's range
                        continue;
                    }
                    n_sub += 1;
                    let row = rec.row(layer, head, i);
                    let total: f64 = row.iter().map(|&v| v as f64).sum();
                    let kept: f64 = row
                        .iter()
                        .zip(&is_word)
                        .filter(|(_, w)| **w)
                        .map(|(&v, _)| v as f64)
                        .sum();
                    if kept <= 0.0 {
                        return Err(Error::DegenerateRow {
                            doc_id: rec.doc_id.clone(),
                            layer,
                            head,
                            row: i,
                        });
                    }
                    special_mass += (total - kept) / total;
                    rows += 1;
                    for (wj, dst) in groups.iter().enumerate() {
                        summed[wj] = dst.clone().filter(|&j| is_word[j]).map(|j| row[j] as f64).sum::<f64>() / kept;
                    }
                    for (o, s) in out.iter_mut().zip(&summed) {
                        *o += s;
                    }
                }
                let n = n_sub as f64;
                for o in out.iter_mut() {
                    *o /= n;
                }
            }
        }
    }

    let special_mass_removed = if rows > 0 { special_mass / rows as f64 } else { 0.0 };
    log::debug!(
        "{}: special mass removed {:.4} (mean per row)",
        rec.doc_id,
        special_mass_removed
    );
    Ok(WordAttention {
        doc_id: rec.doc_id.clone(),
        num_layers: rec.num_layers,
        num_heads: rec.num_heads,
        num_words: nw,
        beta,
        special_mass_removed,
    })
}
