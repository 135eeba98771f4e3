// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::attention::{head_distribution, HeadDistribution, HeadIndex};
use crate::error::{Error, Result};
use crate::instances::ProbeInstance;
use crate::perturb::occlude;
use serde::{Deserialize, Serialize};

/// Which head distributions a probe sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadView {
    /// Plain from/to head distributions.
    #[default]
    Full,
    /// Trigger sentence zeroed out and renormalised.
    Cso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeOptions {
    pub view: HeadView,
    pub exclude_trigger: bool,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            view: HeadView::Full,
            exclude_trigger: true,
        }
    }
}

impl ProbeOptions {
    pub fn with_view(self, view: HeadView) -> Self {
        ProbeOptions { view, ..self }
    }

    /// Whether word `j` may be predicted for `pi`.
    pub fn allows(&self, pi: &ProbeInstance, j: usize) -> bool {
        match self.view {
            HeadView::Full => !(self.exclude_trigger && j == pi.trigger()),
            // the trigger lies inside its own sentence
            HeadView::Cso => !pi.trigger_sentence.contains(j),
        }
    }

    pub fn check_predictable(&self, pi: &ProbeInstance) -> Result<()> {
        match self.view {
            HeadView::Full if self.exclude_trigger && pi.doc_len < 2 => Err(Error::TriggerOnlyDocument),
            HeadView::Cso if pi.trigger_sentence.len() >= pi.doc_len => Err(Error::NoCrossSentenceSupport),
            _ => Ok(()),
        }
    }
}

pub fn view_distribution(view: HeadView, pi: &ProbeInstance, head: HeadIndex) -> Result<HeadDistribution> {
    let dist = head_distribution(&pi.attention, head, pi.trigger())?;
    match view {
        HeadView::Full => Ok(dist),
        HeadView::Cso => occlude(&dist, pi.trigger_sentence),
    }
}

/// All `2·L·H` head distributions of one instance, in scan order, plus the
/// set of words the view leaves open.
#[derive(Debug, Clone)]
pub struct HeadFeatures {
    num_heads_total: usize,
    num_words: usize,
    data: Vec<f64>,
    support: Vec<bool>,
}

impl HeadFeatures {
    pub fn build(pi: &ProbeInstance, view: HeadView) -> Result<Self> {
        let wa = &pi.attention;
        let (l, h, w) = (wa.num_layers(), wa.num_heads(), wa.num_words());
        let mut data = Vec::with_capacity(2 * l * h * w);
        for head in HeadIndex::all(l, h) {
            data.extend_from_slice(view_distribution(view, pi, head)?.probs());
        }
        let support = (0..w)
            .map(|j| match view {
                HeadView::Full => true,
                HeadView::Cso => !pi.trigger_sentence.contains(j),
            })
            .collect();
        Ok(HeadFeatures {
            num_heads_total: 2 * l * h,
            num_words: w,
            data,
            support,
        })
    }

    pub fn num_heads_total(&self) -> usize {
        self.num_heads_total
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn head(&self, k: usize) -> &[f64] {
        &self.data[k * self.num_words..(k + 1) * self.num_words]
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }
}
