// SPDX-License-Identifier: MIT OR Apache-2.0

//! TSV and Markdown renderings of evaluation results.
//!
//! Up to four tables are produced, each only when its inputs are present:
//!
//! - `accuracy`: per-role test accuracy for Rand, SentOnly, BestHead, Linear.
//! - `besthead`: the selected signed head per role and its accuracy.
//! - `cross_sentence`: occluded probes on the cross-sentence subset, written
//!   `CSO% (total%→cross%)` where the parenthesis holds the plain probe's
//!   accuracy on all instances and on the cross-sentence subset, plus the
//!   share of cross-sentence instances.
//! - `nonce`: plain versus nonce-averaged accuracy.

use super::evaluate::{Approach, EvalResult, Subset};
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write;
use std::path::{Path, PathBuf};

struct Table {
    name: &'static str,
    title: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

const MISSING: &str = "-";

struct Index<'a> {
    results: &'a [EvalResult],
    roles: Vec<&'a str>,
}

impl<'a> Index<'a> {
    fn new(results: &'a [EvalResult]) -> Self {
        let mut seen = BTreeSet::new();
        let roles = results
            .iter()
            .filter(|r| seen.insert(r.role.as_str()))
            .map(|r| r.role.as_str())
            .collect();
        Index { results, roles }
    }

    fn get(&self, role: &str, approach: Approach, subset: Subset, nonce: bool) -> Option<&'a EvalResult> {
        self.results
            .iter()
            .find(|r| r.role == role && r.approach == approach && r.subset == subset && r.nonce == nonce)
    }

    fn has(&self, approach: Approach, subset: Subset, nonce: bool) -> bool {
        self.results
            .iter()
            .any(|r| r.approach == approach && r.subset == subset && r.nonce == nonce)
    }

    fn cell(&self, role: &str, approach: Approach, subset: Subset, nonce: bool) -> String {
        self.get(role, approach, subset, nonce)
            .map_or_else(|| MISSING.to_string(), |r| pct(r.accuracy))
    }
}

fn tables(results: &[EvalResult]) -> Vec<Table> {
    let idx = Index::new(results);
    let mut out = Vec::new();

    let plain: Vec<Approach> = [Approach::Rand, Approach::SentOnly, Approach::BestHead, Approach::Linear]
        .into_iter()
        .filter(|a| idx.has(*a, Subset::All, false))
        .collect();
    if !plain.is_empty() {
        let header = std::iter::once("Role".to_string())
            .chain(plain.iter().map(|a| a.name().to_string()))
            .collect();
        let rows = idx
            .roles
            .iter()
            .filter(|role| plain.iter().any(|a| idx.get(role, *a, Subset::All, false).is_some()))
            .map(|role| {
                std::iter::once(role.to_string())
                    .chain(plain.iter().map(|a| idx.cell(role, *a, Subset::All, false)))
                    .collect()
            })
            .collect();
        out.push(Table {
            name: "accuracy",
            title: "Test accuracy (%)",
            header,
            rows,
        });
    }

    if idx.has(Approach::BestHead, Subset::All, false) {
        let rows = idx
            .roles
            .iter()
            .filter_map(|role| idx.get(role, Approach::BestHead, Subset::All, false))
            .map(|r| {
                vec![
                    r.role.clone(),
                    r.head.map_or_else(|| MISSING.to_string(), |h| h.to_string()),
                    pct(r.accuracy),
                ]
            })
            .collect();
        out.push(Table {
            name: "besthead",
            title: "Best signed head per role",
            header: vec!["Role".into(), "{l,h}_best".into(), "%Accuracy".into()],
            rows,
        });
    }

    let cso = [
        (Approach::BestHeadCso, Approach::BestHead),
        (Approach::LinearCso, Approach::Linear),
    ];
    if cso.iter().any(|(a, _)| idx.has(*a, Subset::CrossSentence, false)) {
        let cso_cell = |role: &str, occluded: Approach, plain: Approach| {
            let head = idx.cell(role, occluded, Subset::CrossSentence, false);
            let total = idx.cell(role, plain, Subset::All, false);
            let cross = idx.cell(role, plain, Subset::CrossSentence, false);
            format!("{head} ({total}→{cross})")
        };
        let share = |role: &str| {
            idx.results
                .iter()
                .filter(|r| r.role == role && !r.nonce && matches!(r.approach, Approach::BestHead | Approach::Linear))
                .find_map(|r| {
                    let all = idx.get(role, r.approach, Subset::All, false)?;
                    let cross = idx
                        .get(role, r.approach, Subset::CrossSentence, false)
                        .map_or(0, |c| c.n_instances);
                    Some(pct(cross as f64 / all.n_instances as f64))
                })
                .unwrap_or_else(|| MISSING.to_string())
        };
        let rows = idx
            .roles
            .iter()
            .filter(|role| {
                cso.iter()
                    .any(|(a, _)| idx.get(role, *a, Subset::CrossSentence, false).is_some())
            })
            .map(|role| {
                vec![
                    role.to_string(),
                    cso_cell(role, Approach::BestHeadCso, Approach::BestHead),
                    cso_cell(role, Approach::LinearCso, Approach::Linear),
                    share(role),
                ]
            })
            .collect();
        out.push(Table {
            name: "cross_sentence",
            title: "Cross-sentence test accuracy (%): CSO (total→cross)",
            header: vec![
                "Role".into(),
                "BestHead+CSO".into(),
                "Linear+CSO".into(),
                "Cross-Sent %".into(),
            ],
            rows,
        });
    }

    let nonce: Vec<Approach> = [Approach::BestHead, Approach::Linear]
        .into_iter()
        .filter(|a| idx.has(*a, Subset::All, true))
        .collect();
    if !nonce.is_empty() {
        let mut header = vec!["Role".to_string()];
        for a in &nonce {
            header.push(a.name().to_string());
            header.push(format!("{} (Nonce)", a.name()));
        }
        let rows = idx
            .roles
            .iter()
            .filter(|role| nonce.iter().any(|a| idx.get(role, *a, Subset::All, true).is_some()))
            .map(|role| {
                let mut row = vec![role.to_string()];
                for a in &nonce {
                    row.push(idx.cell(role, *a, Subset::All, false));
                    row.push(idx.cell(role, *a, Subset::All, true));
                }
                row
            })
            .collect();
        out.push(Table {
            name: "nonce",
            title: "Nonce test accuracy (%), averaged over seeds",
            header,
            rows,
        });
    }
    out
}

fn metadata(results: &[EvalResult]) -> Vec<(&'static str, String)> {
    let join = |set: BTreeSet<String>| {
        if set.is_empty() {
            MISSING.to_string()
        } else {
            set.into_iter().collect::<Vec<_>>().join(",")
        }
    };
    let encoders = results.iter().map(|r| r.encoder.clone()).collect();
    let exclusion = results.iter().map(|r| r.exclude_trigger.to_string()).collect();
    let seeds: BTreeSet<u64> = results.iter().flat_map(|r| r.seeds.iter().copied()).collect();
    vec![
        ("encoder", join(encoders)),
        ("exclude_trigger", join(exclusion)),
        ("nonce_seeds", join(seeds.into_iter().map(|s| s.to_string()).collect())),
    ]
}

/// One TSV document per table, keyed by file name.
pub fn render_tsv(results: &[EvalResult]) -> Result<Vec<(String, String)>> {
    if results.is_empty() {
        return Err(Error::EmptyReport);
    }
    let meta = metadata(results);
    Ok(tables(results)
        .into_iter()
        .map(|t| {
            let mut s = String::new();
            for (k, v) in &meta {
                writeln!(s, "# {k}\t{v}").unwrap();
            }
            writeln!(s, "{}", t.header.join("\t")).unwrap();
            for row in &t.rows {
                writeln!(s, "{}", row.join("\t")).unwrap();
            }
            (format!("{}.tsv", t.name), s)
        })
        .collect())
}

pub fn render_markdown(results: &[EvalResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyReport);
    }
    let mut s = String::from("# Attention probe report\n\n");
    for (k, v) in metadata(results) {
        writeln!(s, "- {k}: {v}").unwrap();
    }
    for t in tables(results) {
        write!(s, "\n## {}\n\n", t.title).unwrap();
        writeln!(s, "| {} |", t.header.join(" | ")).unwrap();
        let align: Vec<&str> = t
            .header
            .iter()
            .enumerate()
            .map(|(i, _)| if i == 0 { ":---" } else { "---:" })
            .collect();
        writeln!(s, "| {} |", align.join(" | ")).unwrap();
        for row in &t.rows {
            writeln!(s, "| {} |", row.join(" | ")).unwrap();
        }
    }
    Ok(s)
}

/// Write `report.md` and one TSV per table into `dir`.
pub fn write_report(dir: &Path, results: &[EvalResult]) -> Result<Vec<PathBuf>> {
    let md = render_markdown(results)?;
    let tsv = render_tsv(results)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, text) in tsv.into_iter().chain([("report.md".to_string(), md)]) {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
