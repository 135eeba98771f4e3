// SPDX-License-Identifier: MIT OR Apache-2.0

use super::predict::argmax_where;
use super::view::{view_distribution, HeadView, ProbeOptions};
use crate::attention::HeadIndex;
use crate::error::{Error, Result};
use crate::eval::acc;
use crate::instances::ProbeInstance;
use rayon::prelude::*;

/// The single signed head chosen for a role.
#[derive(Debug, Clone, PartialEq)]
pub struct BestHeadModel {
    pub role: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub head: HeadIndex,
    pub train_accuracy: f64,
    pub view: HeadView,
}

impl BestHeadModel {
    pub fn predict(&self, pi: &ProbeInstance, exclude_trigger: bool) -> Result<usize> {
        let opts = ProbeOptions {
            view: self.view,
            exclude_trigger,
        };
        predict_with_head(pi, self.head, opts)
    }
}

pub(crate) fn predict_with_head(pi: &ProbeInstance, head: HeadIndex, opts: ProbeOptions) -> Result<usize> {
    opts.check_predictable(pi)?;
    let dist = view_distribution(opts.view, pi, head)?;
    Ok(argmax_where(dist.probs(), |j| opts.allows(pi, j)).expect("predictable instance has an open word"))
}

pub(crate) fn dims<'a>(instances: impl IntoIterator<Item = &'a ProbeInstance>) -> Result<Option<(usize, usize)>> {
    let mut dims = None;
    for pi in instances {
        let d = (pi.attention.num_layers(), pi.attention.num_heads());
        match dims {
            None => dims = Some(d),
            Some(prev) if prev != d => {
                return Err(Error::DimensionMismatch(format!(
                    "{}: L={} H={} but earlier instances have L={} H={}",
                    pi.id(),
                    d.0,
                    d.1,
                    prev.0,
                    prev.1
                )))
            }
            _ => {}
        }
    }
    Ok(dims)
}

/// Number of instances each signed head gets right, in scan order.
pub fn head_hit_counts(instances: &[&ProbeInstance], opts: ProbeOptions) -> Result<Vec<usize>> {
    let Some((l, h)) = dims(instances.iter().copied())? else {
        return Ok(Vec::new());
    };
    let heads: Vec<HeadIndex> = HeadIndex::all(l, h).collect();
    heads
        .par_iter()
        .map(|&head| {
            let mut hits = 0usize;
            for pi in instances {
                let pred = predict_with_head(pi, head, opts)?;
                hits += acc(pred, pi.span()) as usize;
            }
            Ok(hits)
        })
        .collect()
}

/// Select the head with the highest training accuracy on `role`. Ties keep
/// the earliest head in scan order.
pub fn fit_best_head<'a>(
    train: impl IntoIterator<Item = &'a ProbeInstance>,
    role: &str,
    opts: ProbeOptions,
) -> Result<BestHeadModel> {
    let xr: Vec<&ProbeInstance> = train.into_iter().filter(|p| p.role() == role).collect();
    if xr.is_empty() {
        return Err(Error::EmptyTrainingSet { role: role.to_string() });
    }
    let (l, h) = dims(xr.iter().copied())?.expect("non-empty");
    let counts = head_hit_counts(&xr, opts)?;
    let mut best = 0usize;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    Ok(BestHeadModel {
        role: role.to_string(),
        num_layers: l,
        num_heads: h,
        head: HeadIndex::from_flat(best, l, h),
        train_accuracy: counts[best] as f64 / xr.len() as f64,
        view: opts.view,
    })
}

/// [`fit_best_head`] on the role's cross-sentence instances with the
/// trigger sentence occluded.
pub fn fit_best_head_cso<'a>(
    train: impl IntoIterator<Item = &'a ProbeInstance>,
    role: &str,
    exclude_trigger: bool,
) -> Result<BestHeadModel> {
    let xr: Vec<&ProbeInstance> = train
        .into_iter()
        .filter(|p| p.role() == role && p.is_cross_sentence())
        .collect();
    if xr.is_empty() {
        return Err(Error::NoCrossSentenceInstances { role: role.to_string() });
    }
    fit_best_head(
        xr,
        role,
        ProbeOptions {
            view: HeadView::Cso,
            exclude_trigger,
        },
    )
}
