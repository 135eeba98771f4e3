// SPDX-License-Identifier: MIT OR Apache-2.0

use super::aggregate::WordAttention;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Signed head address. `head >= 0` is a "from" head (the trigger's row);
/// `head < 0` is a "to" head reading physical head `-head - 1`'s column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, i32)", into = "(usize, i32)")]
pub struct HeadIndex {
    pub layer: usize,
    pub head: i32,
}

impl HeadIndex {
    pub const fn new(layer: usize, head: i32) -> Self {
        HeadIndex { layer, head }
    }

    pub fn is_from(&self) -> bool {
        self.head >= 0
    }

    pub fn is_to(&self) -> bool {
        self.head < 0
    }

    /// Physical head read by this index: `h` for from-heads, `|h| - 1` for to-heads.
    pub fn physical_head(&self) -> usize {
        if self.head >= 0 {
            self.head as usize
        } else {
            (-self.head - 1) as usize
        }
    }

    pub fn check(&self, num_layers: usize, num_heads: usize) -> Result<()> {
        let h = num_heads as i64;
        let head = self.head as i64;
        if self.layer >= num_layers || head >= h || head < -h {
            return Err(Error::HeadOutOfRange {
                layer: self.layer,
                head: self.head,
                num_layers,
                num_heads,
            });
        }
        Ok(())
    }

    /// All `2·L·H` signed heads in scan order: from-heads (layers ascending,
    /// `h = 0..H`) then to-heads (layers ascending, `h = -1..=-H`).
    pub fn all(num_layers: usize, num_heads: usize) -> impl Iterator<Item = HeadIndex> + Clone {
        (0..2 * num_layers * num_heads).map(move |k| HeadIndex::from_flat(k, num_layers, num_heads))
    }

    /// Position of this head in [`HeadIndex::all`].
    pub fn flat(&self, num_layers: usize, num_heads: usize) -> usize {
        let offset = if self.is_from() { 0 } else { num_layers * num_heads };
        offset + self.layer * num_heads + self.physical_head()
    }

    pub fn from_flat(k: usize, num_layers: usize, num_heads: usize) -> HeadIndex {
        let lh = num_layers * num_heads;
        let (to, r) = (k >= lh, k % lh);
        let (layer, h) = (r / num_heads, r % num_heads);
        if to {
            HeadIndex::new(layer, -(h as i32) - 1)
        } else {
            HeadIndex::new(layer, h as i32)
        }
    }
}

impl From<(usize, i32)> for HeadIndex {
    fn from((layer, head): (usize, i32)) -> Self {
        HeadIndex { layer, head }
    }
}

impl From<HeadIndex> for (usize, i32) {
    fn from(h: HeadIndex) -> Self {
        (h.layer, h.head)
    }
}

impl fmt::Display for HeadIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.layer, self.head)
    }
}

/// Probability distribution over document words.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadDistribution(Vec<f64>);

impl HeadDistribution {
    /// Wrap a vector that is already a distribution.
    pub fn new(probs: Vec<f64>) -> Self {
        debug_assert!(probs.iter().all(|p| *p >= 0.0));
        HeadDistribution(probs)
    }

    /// Normalise non-negative scores; `None` when they sum to zero.
    pub fn normalize(mut scores: Vec<f64>) -> Option<Self> {
        let total: f64 = scores.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return None;
        }
        for s in &mut scores {
            *s /= total;
        }
        Some(HeadDistribution(scores))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `P*_{l,h}(· | i_e)`: the trigger's row for from-heads, or the trigger's
/// column renormalised for to-heads.
pub fn head_distribution(wa: &WordAttention, head: HeadIndex, trigger: usize) -> Result<HeadDistribution> {
    head.check(wa.num_layers(), wa.num_heads())?;
    let w = wa.num_words();
    if trigger >= w {
        return Err(Error::IndexOutOfRange { index: trigger, len: w });
    }
    let phys = head.physical_head();
    if head.is_from() {
        return Ok(HeadDistribution(wa.row(head.layer, phys, trigger).to_vec()));
    }
    let column: Vec<f64> = (0..w).map(|j| wa.get(head.layer, phys, j, trigger)).collect();
    HeadDistribution::normalize(column).ok_or_else(|| Error::ZeroColumn {
        doc_id: wa.doc_id().to_string(),
        word: trigger,
    })
}
