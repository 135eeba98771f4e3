// SPDX-License-Identifier: MIT OR Apache-2.0

//! Attention probes: per-role single-head selection and the mixture probe.

mod adam;
mod besthead;
mod linear;
mod model_file;
mod predict;
mod view;

pub use adam::Adam;
pub use besthead::{fit_best_head, fit_best_head_cso, head_hit_counts, BestHeadModel};
pub use linear::{
    kl_loss, linear_mix, loss_and_gradient, softmax, softplus, train_linear, train_linear_cso, train_linear_traced,
    EpochSummary, GoldDistribution, LinearModel, TrainConfig,
};
pub use model_file::{ModelBody, ModelFile, Probe};
pub use predict::predict_token;
pub use view::{view_distribution, HeadFeatures, HeadView, ProbeOptions};
