// SPDX-License-Identifier: MIT OR Apache-2.0

//! Token accuracy, analytic baselines, per-role evaluation and reports.

mod evaluate;
mod metrics;
mod report;

pub use evaluate::{
    evaluate, evaluate_baselines, evaluate_nonce, read_results, results_to_jsonl, write_results, Approach, EvalOptions,
    EvalResult, Subset,
};
pub use metrics::{acc, rand_baseline, sentonly_baseline, sentonly_outside};
pub use report::{render_markdown, render_tsv, write_report};
