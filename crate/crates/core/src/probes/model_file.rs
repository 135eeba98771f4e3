// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON model files.
//!
//! ```text
//! {"role": "victim", "kind": "besthead", "head": [9, 1], "train_acc": 0.5, "L": 12, "H": 12}
//! {"role": "victim", "kind": "linear", "weights_raw": [...], "bias_raw": -6.0,
//!  "seed": 0, "epochs": 10, "dev_acc": 0.6, "L": 12, "H": 12}
//! ```
//!
//! Probes trained under cross-sentence occlusion carry `"cso": true`.

use super::besthead::BestHeadModel;
use super::linear::LinearModel;
use super::view::HeadView;
use crate::attention::HeadIndex;
use crate::error::{Error, Result};
use crate::eval::Approach;
use crate::instances::ProbeInstance;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelBody {
    Besthead {
        head: HeadIndex,
        train_acc: f64,
    },
    Linear {
        weights_raw: Vec<f64>,
        bias_raw: f64,
        seed: u64,
        epochs: usize,
        dev_acc: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub role: String,
    #[serde(flatten)]
    pub body: ModelBody,
    #[serde(rename = "L")]
    pub num_layers: usize,
    #[serde(rename = "H")]
    pub num_heads: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub cso: bool,
}

/// A fitted probe of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    BestHead(BestHeadModel),
    Linear(LinearModel),
}

impl Probe {
    pub fn role(&self) -> &str {
        match self {
            Probe::BestHead(m) => &m.role,
            Probe::Linear(m) => &m.role,
        }
    }

    pub fn view(&self) -> HeadView {
        match self {
            Probe::BestHead(m) => m.view,
            Probe::Linear(m) => m.view,
        }
    }

    pub fn approach(&self) -> Approach {
        match (self, self.view()) {
            (Probe::BestHead(_), HeadView::Full) => Approach::BestHead,
            (Probe::BestHead(_), HeadView::Cso) => Approach::BestHeadCso,
            (Probe::Linear(_), HeadView::Full) => Approach::Linear,
            (Probe::Linear(_), HeadView::Cso) => Approach::LinearCso,
        }
    }

    pub fn head(&self) -> Option<HeadIndex> {
        match self {
            Probe::BestHead(m) => Some(m.head),
            Probe::Linear(_) => None,
        }
    }

    pub fn predict(&self, pi: &ProbeInstance, exclude_trigger: bool) -> Result<usize> {
        match self {
            Probe::BestHead(m) => m.predict(pi, exclude_trigger),
            Probe::Linear(m) => m.predict(pi, exclude_trigger),
        }
    }

    pub fn to_file(&self) -> ModelFile {
        match self {
            Probe::BestHead(m) => ModelFile {
                role: m.role.clone(),
                body: ModelBody::Besthead {
                    head: m.head,
                    train_acc: m.train_accuracy,
                },
                num_layers: m.num_layers,
                num_heads: m.num_heads,
                cso: m.view == HeadView::Cso,
            },
            Probe::Linear(m) => ModelFile {
                role: m.role.clone(),
                body: ModelBody::Linear {
                    weights_raw: m.weights_raw.clone(),
                    bias_raw: m.bias_raw,
                    seed: m.seed,
                    epochs: m.epochs,
                    dev_acc: m.dev_acc,
                },
                num_layers: m.num_layers,
                num_heads: m.num_heads,
                cso: m.view == HeadView::Cso,
            },
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let view = if file.cso { HeadView::Cso } else { HeadView::Full };
        let probe = match file.body {
            ModelBody::Besthead { head, train_acc } => {
                head.check(file.num_layers, file.num_heads)?;
                if !(0.0..=1.0).contains(&train_acc) {
                    return Err(Error::Config(format!("train_acc {train_acc} outside [0,1]")));
                }
                Probe::BestHead(BestHeadModel {
                    role: file.role,
                    num_layers: file.num_layers,
                    num_heads: file.num_heads,
                    head,
                    train_accuracy: train_acc,
                    view,
                })
            }
            ModelBody::Linear {
                weights_raw,
                bias_raw,
                seed,
                epochs,
                dev_acc,
            } => {
                if weights_raw.len() != 2 * file.num_layers * file.num_heads {
                    return Err(Error::DimensionMismatch(format!(
                        "{} weights for L={} H={}",
                        weights_raw.len(),
                        file.num_layers,
                        file.num_heads
                    )));
                }
                Probe::Linear(LinearModel {
                    role: file.role,
                    num_layers: file.num_layers,
                    num_heads: file.num_heads,
                    weights_raw,
                    bias_raw,
                    seed,
                    epochs,
                    dev_acc,
                    view,
                })
            }
        };
        Ok(probe)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serialises") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::from_file(file)
    }

    /// File name used by the pipeline, e.g. `victim.linear-cso.json`.
    pub fn file_name(&self) -> String {
        let safe: String = self
            .role()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        let kind = match self.approach() {
            Approach::BestHead => "besthead",
            Approach::Linear => "linear",
            Approach::BestHeadCso => "besthead-cso",
            Approach::LinearCso => "linear-cso",
            _ => unreachable!("probes are never baselines"),
        };
        format!("{safe}.{kind}.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn besthead_json_shape() {
        let p = Probe::BestHead(BestHeadModel {
            role: "victim".into(),
            num_layers: 12,
            num_heads: 12,
            head: HeadIndex::new(9, 1),
            train_accuracy: 0.5,
            view: HeadView::Full,
        });
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v["kind"], "besthead");
        assert_eq!(v["head"], serde_json::json!([9, 1]));
        assert_eq!(v["L"], 12);
        assert!(v.get("cso").is_none());
        assert_eq!(Probe::from_file(serde_json::from_value(v).unwrap()).unwrap(), p);
    }

    #[test]
    fn linear_round_trip_is_bit_exact() {
        let p = Probe::Linear(LinearModel {
            role: "place".into(),
            num_layers: 1,
            num_heads: 1,
            weights_raw: vec![0.1 + 0.2, -1.0 / 3.0],
            bias_raw: -6.000000000000001,
            seed: 42,
            epochs: 10,
            dev_acc: 2.0 / 3.0,
            view: HeadView::Cso,
        });
        let back = Probe::from_file(serde_json::from_str(&p.to_json()).unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(p.file_name(), "place.linear-cso.json");
    }

    #[test]
    fn rejects_wrong_weight_count() {
        let text = r#"{"role":"r","kind":"linear","weights_raw":[0.0],"bias_raw":0.0,"seed":0,"epochs":1,"dev_acc":0.0,"L":1,"H":1}"#;
        assert!(Probe::from_file(serde_json::from_str(text).unwrap()).is_err());
    }
}
