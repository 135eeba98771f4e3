// SPDX-License-Identifier: MIT OR Apache-2.0

//! `ATNP` per-document attention files.
//!
//! Layout (all integers little-endian):
//!
//! | field        | type                 |
//! |--------------|----------------------|
//! | magic        | `b"ATNP"`            |
//! | version      | `u32` = 1            |
//! | doc_id_len   | `u32`                |
//! | doc_id       | UTF-8 bytes          |
//! | L, H, T      | `u32` each           |
//! | word_count   | `u32`                |
//! | alignment    | `T × i32`, -1 = special |
//! | alpha        | `L·H·T·T × f32`, `[l][h][i][j]` row-major |

use crate::error::{Error, Result};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"ATNP";
pub const VERSION: u32 = 1;
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;

/// Sentinel alignment value for special tokens.
pub const SPECIAL: i32 = -1;

/// Subword-level attention for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    pub doc_id: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub num_subwords: usize,
    /// `[l][h][i][j]` row-major.
    pub alpha: Vec<f32>,
    /// Word index per subword, `None` for special tokens.
    pub alignment: Vec<Option<usize>>,
    pub word_count: usize,
}

impl AttentionRecord {
    pub fn row(&self, layer: usize, head: usize, i: usize) -> &[f32] {
        let t = self.num_subwords;
        let start = ((layer * self.num_heads + head) * t + i) * t;
        &self.alpha[start..start + t]
    }

    /// Check every structural and stochastic invariant.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let (l, h, t) = (self.num_layers, self.num_heads, self.num_subwords);
        if self.alpha.len() != l * h * t * t {
            return Err(format!(
                "tensor size mismatch: {} values for L={l} H={h} T={t}",
                self.alpha.len()
            ));
        }
        if self.alignment.len() != t {
            return Err(format!("alignment has {} entries for T={t}", self.alignment.len()));
        }
        check_alignment(&self.alignment, self.word_count)?;
        for layer in 0..l {
            for head in 0..h {
                for i in 0..t {
                    let row = self.row(layer, head, i);
                    if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                        return Err(format!("attention value {v} outside [0,1] at l={layer} h={head} i={i}"));
                    }
                    let sum: f64 = row.iter().map(|&v| v as f64).sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(format!("row not stochastic at l={layer} h={head} i={i}: sums to {sum}"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_alignment(alignment: &[Option<usize>], word_count: usize) -> std::result::Result<(), String> {
    let mut next = 0usize;
    for (pos, w) in alignment.iter().enumerate() {
        let Some(w) = *w else { continue };
        if w + 1 == next {
            continue;
        }
        if w != next {
            return Err(format!(
                "alignment gap at subword {pos}: word {w} follows word {}",
                next as isize - 1
            ));
        }
        next += 1;
    }
    if next != word_count {
        return Err(format!(
            "alignment gap: covers {next} words but word_count is {word_count}"
        ));
    }
    Ok(())
}

pub fn encode(rec: &AttentionRecord) -> Vec<u8> {
    let id = rec.doc_id.as_bytes();
    let mut out = Vec::with_capacity(28 + id.len() + 4 * (rec.alignment.len() + rec.alpha.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(id.len() as u32).to_le_bytes());
    out.extend_from_slice(id);
    for v in [rec.num_layers, rec.num_heads, rec.num_subwords, rec.word_count] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for a in &rec.alignment {
        let v: i32 = a.map_or(SPECIAL, |w| w as i32);
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &rec.alpha {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let chunk = self.bytes.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(chunk)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Header fields only; used to index a store without reading tensors.
pub(crate) fn decode_header(bytes: &[u8]) -> std::result::Result<(String, [usize; 4], usize), String> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4).ok_or("bad magic: file too short")?;
    if magic != MAGIC {
        return Err(format!("bad magic {magic:?}"));
    }
    let version = cur.u32().ok_or("truncated header")?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let id_len = cur.u32().ok_or("truncated header")? as usize;
    let id = cur.take(id_len).ok_or("truncated header")?;
    let doc_id = std::str::from_utf8(id)
        .map_err(|e| format!("doc_id is not UTF-8: {e}"))?
        .to_string();
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = cur.u32().ok_or("truncated header")? as usize;
    }
    Ok((doc_id, dims, cur.pos))
}

pub fn decode(bytes: &[u8]) -> std::result::Result<AttentionRecord, String> {
    let (doc_id, [l, h, t, word_count], header_len) = decode_header(bytes)?;
    let expected = (t as u64)
        .checked_mul(4)
        .and_then(|a| {
            (l as u64 * h as u64 * t as u64 * t as u64)
                .checked_mul(4)
                .map(|b| a + b)
        })
        .ok_or("tensor size mismatch: dimensions overflow")?;
    let body = (bytes.len() - header_len) as u64;
    if body != expected {
        return Err(format!(
            "tensor size mismatch: header declares {expected} payload bytes, file has {body}"
        ));
    }
    let mut cur = Cursor { bytes, pos: header_len };
    let alignment = (0..t)
        .map(|_| {
            let v = i32::from_le_bytes(cur.take(4).unwrap().try_into().unwrap());
            match v {
                SPECIAL => Ok(None),
                w if w >= 0 => Ok(Some(w as usize)),
                w => Err(format!("invalid alignment value {w}")),
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let payload = &bytes[cur.pos..];
    let alpha = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let rec = AttentionRecord {
        doc_id,
        num_layers: l,
        num_heads: h,
        num_subwords: t,
        alpha,
        alignment,
        word_count,
    };
    rec.validate()?;
    Ok(rec)
}

pub fn read_attention(path: &Path) -> Result<AttentionRecord> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::AttentionFormat {
        path: path.to_path_buf(),
        msg,
    })
}

pub fn write_attention(rec: &AttentionRecord, path: &Path) -> Result<()> {
    std::fs::write(path, encode(rec)).map_err(|e| Error::io(path, e))
}
