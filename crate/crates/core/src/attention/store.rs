// SPDX-License-Identifier: MIT OR Apache-2.0

//! Directory of `ATNP` files plus `manifest.json`.

use super::aggregate::{aggregate_subwords, WordAttention};
use super::format::{decode_header, encode, read_attention, AttentionRecord};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreManifest {
    pub model: String,
    #[serde(rename = "L")]
    pub num_layers: usize,
    #[serde(rename = "H")]
    pub num_heads: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AttentionStore {
    root: PathBuf,
    manifest: StoreManifest,
    by_doc: HashMap<String, PathBuf>,
}

impl AttentionStore {
    /// Open a store and index its files by the doc_id in each header.
    pub fn open(root: &Path) -> Result<Self> {
        let manifest_path = root.join(MANIFEST);
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: StoreManifest = serde_json::from_str(&text).map_err(|e| Error::Store {
            path: root.to_path_buf(),
            msg: format!("bad manifest: {e}"),
        })?;
        let mut by_doc = HashMap::with_capacity(manifest.files.len());
        for name in &manifest.files {
            let path = root.join(name);
            let (doc_id, [l, h, _, _], _) = read_header(&path)?;
            if l != manifest.num_layers || h != manifest.num_heads {
                return Err(Error::Store {
                    path: root.to_path_buf(),
                    msg: format!(
                        "{name}: L={l} H={h} disagrees with manifest L={} H={}",
                        manifest.num_layers, manifest.num_heads
                    ),
                });
            }
            if by_doc.insert(doc_id.clone(), path).is_some() {
                return Err(Error::Store {
                    path: root.to_path_buf(),
                    msg: format!("doc_id {doc_id:?} appears in more than one file"),
                });
            }
        }
        Ok(AttentionStore {
            root: root.to_path_buf(),
            manifest,
            by_doc,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &StoreManifest {
        &self.manifest
    }

    pub fn model(&self) -> &str {
        &self.manifest.model
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_doc.contains_key(doc_id)
    }

    pub fn path_of(&self, doc_id: &str) -> Option<&Path> {
        self.by_doc.get(doc_id).map(PathBuf::as_path)
    }

    pub fn read_record(&self, doc_id: &str) -> Result<AttentionRecord> {
        let path = self
            .by_doc
            .get(doc_id)
            .ok_or_else(|| Error::MissingAttention(vec![doc_id.to_string()]))?;
        read_attention(path)
    }

    pub fn load(&self, doc_id: &str) -> Result<WordAttention> {
        aggregate_subwords(&self.read_record(doc_id)?)
    }

    /// Load and aggregate every listed document. All missing doc_ids are
    /// reported together.
    pub fn load_many<'a>(
        &self,
        doc_ids: impl IntoIterator<Item = &'a str>,
    ) -> Result<BTreeMap<String, Arc<WordAttention>>> {
        let mut ids: Vec<&str> = doc_ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !self.contains(id))
            .map(|id| id.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingAttention(missing));
        }
        let loaded: Vec<(String, Arc<WordAttention>)> = ids
            .par_iter()
            .map(|id| self.load(id).map(|wa| (id.to_string(), Arc::new(wa))))
            .collect::<Result<_>>()?;
        Ok(loaded.into_iter().collect())
    }
}

fn read_header(path: &Path) -> Result<(String, [usize; 4], usize)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    // magic + version + id length, then the id and four dimensions
    let mut head = Vec::new();
    let mut take = file.take(12);
    take.read_to_end(&mut head).map_err(|e| Error::io(path, e))?;
    let id_len = head
        .get(8..12)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        .unwrap_or(0);
    let mut rest = Vec::new();
    take.into_inner()
        .take((id_len + 16) as u64)
        .read_to_end(&mut rest)
        .map_err(|e| Error::io(path, e))?;
    head.extend(rest);
    decode_header(&head).map_err(|msg| Error::AttentionFormat {
        path: path.to_path_buf(),
        msg,
    })
}

fn file_name(i: usize, doc_id: &str) -> String {
    let safe: String = doc_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .take(64)
        .collect();
    format!("{i:05}-{safe}.atnp")
}

/// Write records and a manifest into `root`, creating it if needed.
pub fn write_store(root: &Path, model: &str, records: &[AttentionRecord]) -> Result<StoreManifest> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let (num_layers, num_heads) = records.first().map(|r| (r.num_layers, r.num_heads)).unwrap_or((0, 0));
    let mut files = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        if rec.num_layers != num_layers || rec.num_heads != num_heads {
            return Err(Error::DimensionMismatch(format!(
                "record {} has L={} H={}, store has L={num_layers} H={num_heads}",
                rec.doc_id, rec.num_layers, rec.num_heads
            )));
        }
        let name = file_name(i, &rec.doc_id);
        let path = root.join(&name);
        std::fs::write(&path, encode(rec)).map_err(|e| Error::io(&path, e))?;
        files.push(name);
    }
    let manifest = StoreManifest {
        model: model.to_string(),
        num_layers,
        num_heads,
        files,
    };
    let path = root.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
