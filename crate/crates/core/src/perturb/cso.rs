// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::attention::{head_distribution, HeadDistribution, HeadIndex, WordAttention};
use crate::error::{Error, Result};
use crate::span::Span;

/// Zero `dist` inside `sentence` and renormalise over the remaining words.
pub fn occlude(dist: &HeadDistribution, sentence: Span) -> Result<HeadDistribution> {
    let w = dist.len();
    if sentence.beg == 0 && sentence.end >= w {
        return Err(Error::NoCrossSentenceSupport);
    }
    let masked: Vec<f64> = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(j, &p)| if sentence.contains(j) { 0.0 } else { p })
        .collect();
    HeadDistribution::normalize(masked).ok_or(Error::ZeroOccludedMass)
}

/// Head distribution with the trigger sentence occluded.
pub fn cso_distribution(
    wa: &WordAttention,
    head: HeadIndex,
    trigger: usize,
    trigger_sentence: Span,
) -> Result<HeadDistribution> {
    if trigger_sentence.beg == 0 && trigger_sentence.end >= wa.num_words() {
        return Err(Error::NoCrossSentenceSupport);
    }
    occlude(&head_distribution(wa, head, trigger)?, trigger_sentence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renormalises_outside_mass() {
        let d = HeadDistribution::new(vec![0.5, 0.3, 0.2]);
        let out = occlude(&d, Span::new(0, 1)).unwrap();
        assert_eq!(out.probs()[0], 0.0);
        assert!((out.probs()[1] - 0.3 / 0.5).abs() < 1e-12);
        assert!((out.probs()[2] - 0.2 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn unchanged_when_sentence_has_no_mass() {
        let d = HeadDistribution::new(vec![0.0, 0.25, 0.75]);
        let out = occlude(&d, Span::new(0, 1)).unwrap();
        assert_eq!(out.probs(), d.probs());
    }

    #[test]
    fn single_sentence_document() {
        let d = HeadDistribution::new(vec![0.5, 0.5]);
        assert!(matches!(
            occlude(&d, Span::new(0, 2)),
            Err(Error::NoCrossSentenceSupport)
        ));
        let wa = WordAttention::from_beta("d", 1, 1, 2, vec![0.5; 4]).unwrap();
        assert!(matches!(
            cso_distribution(&wa, HeadIndex::new(0, 0), 0, Span::new(0, 2)),
            Err(Error::NoCrossSentenceSupport)
        ));
    }
}
