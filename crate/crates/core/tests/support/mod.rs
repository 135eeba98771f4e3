// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference implementations shared by the core tests and the
//! acceptance suite.

#![allow(dead_code)]

use attnprobe::attention::{AttentionRecord, HeadIndex, WordAttention};
use attnprobe::ProbeInstance;

/// Straightforward per-element definition: average over the source word's
/// subwords of the special-renormalised mass landing on the target word's
/// subwords.
pub fn naive_aggregate(rec: &AttentionRecord) -> Vec<f64> {
    let (t, nw) = (rec.num_subwords, rec.word_count);
    let mut out = Vec::new();
    for l in 0..rec.num_layers {
        for h in 0..rec.num_heads {
            for a in 0..nw {
                for b in 0..nw {
                    let mut acc = 0.0;
                    let mut count = 0;
                    for i in 0..t {
                        if rec.alignment[i] != Some(a) {
                            continue;
                        }
                        count += 1;
                        let mut kept = 0.0;
                        let mut into_b = 0.0;
                        for j in 0..t {
                            let v = rec.alpha[((l * rec.num_heads + h) * t + i) * t + j] as f64;
                            if rec.alignment[j].is_some() {
                                kept += v;
                            }
                            if rec.alignment[j] == Some(b) {
                                into_b += v;
                            }
                        }
                        acc += into_b / kept;
                    }
                    out.push(acc / count as f64);
                }
            }
        }
    }
    out
}

/// Independent reference: scan every signed head, recompute its
/// distribution straight from the word tensor, argmax with the lowest index
/// winning ties, count hits, keep the first maximum.
pub fn exhaustive_best(items: &[&ProbeInstance]) -> (HeadIndex, usize) {
    let wa0 = &items[0].attention;
    let (l, h) = (wa0.num_layers(), wa0.num_heads());
    let mut heads = Vec::new();
    for layer in 0..l {
        for head in 0..h as i32 {
            heads.push(HeadIndex::new(layer, head));
        }
    }
    for layer in 0..l {
        for head in 1..=h as i32 {
            heads.push(HeadIndex::new(layer, -head));
        }
    }
    let dist = |wa: &WordAttention, hd: HeadIndex, t: usize| -> Vec<f64> {
        let n = wa.num_words();
        if hd.head >= 0 {
            (0..n).map(|j| wa.get(hd.layer, hd.head as usize, t, j)).collect()
        } else {
            let p = (-hd.head - 1) as usize;
            let col: Vec<f64> = (0..n).map(|j| wa.get(hd.layer, p, j, t)).collect();
            let z: f64 = col.iter().sum();
            col.into_iter().map(|v| v / z).collect()
        }
    };
    let mut best = (heads[0], 0usize);
    for (k, &hd) in heads.iter().enumerate() {
        let mut hits = 0;
        for pi in items {
            let d = dist(&pi.attention, hd, pi.trigger());
            let mut arg = None;
            for (j, &v) in d.iter().enumerate() {
                if j == pi.trigger() {
                    continue;
                }
                if arg.is_none_or(|(_, bv)| v > bv) {
                    arg = Some((j, v));
                }
            }
            let pred = arg.unwrap().0;
            if pi.span().beg <= pred && pred < pi.span().end {
                hits += 1;
            }
        }
        if k == 0 || hits > best.1 {
            best = (hd, hits);
        }
    }
    best
}
