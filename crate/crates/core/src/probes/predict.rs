// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::attention::HeadDistribution;
use crate::error::{Error, Result};

/// First index of the maximum among allowed entries.
pub(crate) fn argmax_where(scores: &[f64], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &s) in scores.iter().enumerate() {
        if !allowed(j) {
            continue;
        }
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((j, s)),
        }
    }
    best.map(|(j, _)| j)
}

/// Argmax word, optionally never the trigger. Ties go to the lowest index.
pub fn predict_token(dist: &HeadDistribution, trigger: usize, exclude_trigger: bool) -> Result<usize> {
    let w = dist.len();
    if w == 0 {
        return Err(Error::IndexOutOfRange { index: 0, len: 0 });
    }
    if exclude_trigger && w == 1 {
        return Err(Error::TriggerOnlyDocument);
    }
    Ok(argmax_where(dist.probs(), |j| !(exclude_trigger && j == trigger)).expect("at least one allowed word"))
}
