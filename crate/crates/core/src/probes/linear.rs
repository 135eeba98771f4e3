// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mixture probe over all signed head distributions.
//!
//! Mixture weights are `softmax(u)` over the `2·L·H` heads and the smoothing
//! mass is `B = softplus(b)`, added uniformly to every open word:
//!
//! ```text
//! phi(j) = sum_k softmax(u)_k * P_k(j) + B
//! P^(j)  = phi(j) / sum_j' phi(j')
//! ```
//!
//! so every prediction is a convex combination of head distributions mixed
//! with a uniform component. Training minimises `KL(P || P^)` against the
//! gold distribution `P` (uniform over the gold span) with per-example Adam
//! updates; attention tensors are only read.

use super::adam::Adam;
use super::besthead::dims;
use super::predict::argmax_where;
use super::view::{HeadFeatures, HeadView, ProbeOptions};
use crate::attention::{HeadDistribution, WordAttention};
use crate::error::{Error, Result};
use crate::eval::acc;
use crate::instances::ProbeInstance;
use crate::span::Span;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Starting value of the raw smoothing parameter `b`.
    pub init_bias_raw: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            max_epochs: 10,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            init_bias_raw: -6.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub role: String,
    pub num_layers: usize,
    pub num_heads: usize,
    /// Raw weights `u`, one per signed head in scan order.
    pub weights_raw: Vec<f64>,
    pub bias_raw: f64,
    pub seed: u64,
    pub epochs: usize,
    pub dev_acc: f64,
    pub view: HeadView,
}

pub fn softmax(u: &[f64]) -> Vec<f64> {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = u.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform mass over a word set, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldDistribution(Vec<f64>);

impl GoldDistribution {
    pub fn new(span: Span, num_words: usize) -> Self {
        Self::on_support(span, &vec![true; num_words])
    }

    /// Gold span restricted to `support`. The restriction is non-empty for
    /// every instance a view can train on.
    pub fn on_support(span: Span, support: &[bool]) -> Self {
        let open: Vec<usize> = span.iter().filter(|&j| j < support.len() && support[j]).collect();
        let mut probs = vec![0.0; support.len()];
        let mass = 1.0 / open.len() as f64;
        for j in open {
            probs[j] = mass;
        }
        GoldDistribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// `KL(gold || predicted)`; `+inf` when the prediction has no mass on a gold word.
pub fn kl_loss(predicted: &HeadDistribution, gold: &GoldDistribution) -> f64 {
    gold.probs()
        .iter()
        .zip(predicted.probs())
        .filter(|(g, _)| **g > 0.0)
        .map(|(&g, &p)| if p > 0.0 { g * (g / p).ln() } else { f64::INFINITY })
        .sum()
}

fn mix_scores(weights: &[f64], smoothing: f64, features: &HeadFeatures) -> Vec<f64> {
    let w = features.num_words();
    let mut phi = vec![0.0; w];
    for (k, &wk) in weights.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        for (p, f) in phi.iter_mut().zip(features.head(k)) {
            *p += wk * f;
        }
    }
    for (p, &open) in phi.iter_mut().zip(features.support()) {
        *p = if open { *p + smoothing } else { 0.0 };
    }
    phi
}

impl LinearModel {
    pub fn new(
        role: impl Into<String>,
        num_layers: usize,
        num_heads: usize,
        cfg: &TrainConfig,
        view: HeadView,
    ) -> Self {
        LinearModel {
            role: role.into(),
            num_layers,
            num_heads,
            weights_raw: vec![0.0; 2 * num_layers * num_heads],
            bias_raw: cfg.init_bias_raw,
            seed: cfg.seed,
            epochs: 0,
            dev_acc: 0.0,
            view,
        }
    }

    pub fn mixture_weights(&self) -> Vec<f64> {
        softmax(&self.weights_raw)
    }

    pub fn smoothing(&self) -> f64 {
        softplus(self.bias_raw)
    }

    fn check_dims(&self, num_layers: usize, num_heads: usize) -> Result<()> {
        if (num_layers, num_heads) != (self.num_layers, self.num_heads)
            || self.weights_raw.len() != 2 * num_layers * num_heads
        {
            return Err(Error::DimensionMismatch(format!(
                "model for L={} H={} ({} weights) applied to attention with L={num_layers} H={num_heads}",
                self.num_layers,
                self.num_heads,
                self.weights_raw.len()
            )));
        }
        Ok(())
    }

    /// Predicted distribution from precomputed head features.
    pub fn mix(&self, features: &HeadFeatures) -> Result<HeadDistribution> {
        if features.num_heads_total() != self.weights_raw.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} head features for {} weights",
                features.num_heads_total(),
                self.weights_raw.len()
            )));
        }
        let phi = mix_scores(&self.mixture_weights(), self.smoothing(), features);
        HeadDistribution::normalize(phi)
            .ok_or_else(|| Error::DimensionMismatch("mixture has no mass on any open word".into()))
    }

    pub fn distribution(&self, pi: &ProbeInstance) -> Result<HeadDistribution> {
        self.check_dims(pi.attention.num_layers(), pi.attention.num_heads())?;
        self.mix(&HeadFeatures::build(pi, self.view)?)
    }

    pub fn predict(&self, pi: &ProbeInstance, exclude_trigger: bool) -> Result<usize> {
        let opts = ProbeOptions {
            view: self.view,
            exclude_trigger,
        };
        opts.check_predictable(pi)?;
        let dist = self.distribution(pi)?;
        Ok(argmax_where(dist.probs(), |j| opts.allows(pi, j)).expect("open word"))
    }

    /// Per-instance loss and its gradient w.r.t. `(u, b)`.
    pub fn loss_and_gradient(&self, features: &HeadFeatures, gold: &GoldDistribution) -> (f64, Vec<f64>, f64) {
        loss_and_gradient(&self.weights_raw, self.bias_raw, features, gold)
    }
}

/// `P^` for the plain view, straight from word attention.
pub fn linear_mix(model: &LinearModel, wa: &WordAttention, trigger: usize) -> Result<HeadDistribution> {
    model.check_dims(wa.num_layers(), wa.num_heads())?;
    if trigger >= wa.num_words() {
        return Err(Error::IndexOutOfRange {
            index: trigger,
            len: wa.num_words(),
        });
    }
    let w = wa.num_words();
    let weights = model.mixture_weights();
    let smoothing = model.smoothing();
    let mut phi = vec![smoothing; w];
    for (k, head) in crate::attention::HeadIndex::all(wa.num_layers(), wa.num_heads()).enumerate() {
        let dist = crate::attention::head_distribution(wa, head, trigger)?;
        for (p, q) in phi.iter_mut().zip(dist.probs()) {
            *p += weights[k] * q;
        }
    }
    HeadDistribution::normalize(phi).ok_or_else(|| Error::DimensionMismatch("empty mixture".into()))
}

/// Loss `sum_j g_j ln(g_j / P^_j)` and analytic gradients through softmax,
/// softplus, mixing and normalisation.
pub fn loss_and_gradient(
    weights_raw: &[f64],
    bias_raw: f64,
    features: &HeadFeatures,
    gold: &GoldDistribution,
) -> (f64, Vec<f64>, f64) {
    let w = softmax(weights_raw);
    let smoothing = softplus(bias_raw);
    let phi = mix_scores(&w, smoothing, features);
    let z: f64 = phi.iter().sum();
    let support = features.support();

    let mut loss = 0.0;
    // d loss / d phi_j on open words
    let mut dphi = vec![0.0; phi.len()];
    for j in 0..phi.len() {
        if !support[j] {
            continue;
        }
        let g = gold.probs()[j];
        dphi[j] = 1.0 / z;
        if g > 0.0 {
            loss += g * (g.ln() - phi[j].ln() + z.ln());
            dphi[j] -= g / phi[j];
        }
    }
    let dw: Vec<f64> = (0..w.len())
        .map(|k| features.head(k).iter().zip(&dphi).map(|(f, d)| f * d).sum())
        .collect();
    let d_smoothing: f64 = dphi.iter().sum();
    let mean: f64 = w.iter().zip(&dw).map(|(a, b)| a * b).sum();
    let du = w.iter().zip(&dw).map(|(wk, dk)| wk * (dk - mean)).collect();
    (loss, du, d_smoothing * sigmoid(bias_raw))
}

fn accuracy(model: &LinearModel, set: &[(&ProbeInstance, HeadFeatures)], opts: ProbeOptions) -> Result<f64> {
    let mut hits = 0usize;
    for (pi, f) in set {
        let dist = model.mix(f)?;
        let pred = argmax_where(dist.probs(), |j| opts.allows(pi, j)).expect("open word");
        hits += acc(pred, pi.span()) as usize;
    }
    Ok(hits as f64 / set.len() as f64)
}

fn featurize(set: Vec<&ProbeInstance>, opts: ProbeOptions) -> Result<Vec<(&ProbeInstance, HeadFeatures)>> {
    set.into_iter()
        .map(|pi| {
            opts.check_predictable(pi)?;
            Ok((pi, HeadFeatures::build(pi, opts.view)?))
        })
        .collect()
}

/// Train a mixture probe for `role`.
///
/// Each epoch visits the training instances in a freshly shuffled order,
/// then scores the development instances; the parameters from the epoch
/// with the best development accuracy are returned (earliest on ties).
/// With no development instances the training accuracy is used instead.
/// Per-epoch training statistics, parameters taken at the end of the epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_acc: f64,
    /// Dev accuracy, or training accuracy when there is no dev data.
    pub selection_acc: f64,
    pub weights_raw: Vec<f64>,
    pub bias_raw: f64,
}

/// Train on `role` and return the parameters of the epoch with the highest
/// dev accuracy (earlier epoch on ties).
pub fn train_linear<'a>(
    train: impl IntoIterator<Item = &'a ProbeInstance>,
    dev: impl IntoIterator<Item = &'a ProbeInstance>,
    role: &str,
    cfg: &TrainConfig,
    opts: ProbeOptions,
) -> Result<LinearModel> {
    train_linear_traced(train, dev, role, cfg, opts).map(|(m, _)| m)
}

/// [`train_linear`] plus the per-epoch history.
pub fn train_linear_traced<'a>(
    train: impl IntoIterator<Item = &'a ProbeInstance>,
    dev: impl IntoIterator<Item = &'a ProbeInstance>,
    role: &str,
    cfg: &TrainConfig,
    opts: ProbeOptions,
) -> Result<(LinearModel, Vec<EpochSummary>)> {
    cfg.validate()?;
    let train: Vec<&ProbeInstance> = train.into_iter().filter(|p| p.role() == role).collect();
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet { role: role.to_string() });
    }
    let dev: Vec<&ProbeInstance> = dev.into_iter().filter(|p| p.role() == role).collect();
    let (l, h) = dims(train.iter().chain(&dev).copied())?.expect("non-empty");

    let train = featurize(train, opts)?;
    let dev = featurize(dev, opts)?;
    let golds: Vec<GoldDistribution> = train
        .iter()
        .map(|(pi, f)| GoldDistribution::on_support(pi.span(), f.support()))
        .collect();

    let mut model = LinearModel::new(role, l, h, cfg, opts.view);
    let n = model.weights_raw.len();
    let mut params: Vec<f64> = model.weights_raw.iter().copied().chain([model.bias_raw]).collect();
    let mut adam = Adam::new(n + 1, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grads = vec![0.0; n + 1];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut history = Vec::with_capacity(cfg.max_epochs);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let (pi, features) = &train[i];
            let (loss, du, db) = loss_and_gradient(&params[..n], params[n], features, &golds[i]);
            if !loss.is_finite() || !db.is_finite() || du.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { instance: pi.id() });
            }
            epoch_loss += loss;
            grads[..n].copy_from_slice(&du);
            grads[n] = db;
            adam.step(&mut params, &grads);
        }
        model.weights_raw.copy_from_slice(&params[..n]);
        model.bias_raw = params[n];
        let train_acc = accuracy(&model, &train, opts)?;
        let score = if dev.is_empty() {
            train_acc
        } else {
            accuracy(&model, &dev, opts)?
        };
        history.push(EpochSummary {
            epoch,
            mean_loss: epoch_loss / train.len() as f64,
            train_acc,
            selection_acc: score,
            weights_raw: model.weights_raw.clone(),
            bias_raw: model.bias_raw,
        });
        log::debug!(
            "{role}: epoch {epoch} mean loss {:.5} selection acc {:.4}",
            epoch_loss / train.len() as f64,
            score
        );
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, params.clone()));
        }
    }

    let (score, snapshot) = best.expect("at least one epoch");
    model.weights_raw.copy_from_slice(&snapshot[..n]);
    model.bias_raw = snapshot[n];
    model.epochs = cfg.max_epochs;
    model.dev_acc = score;
    Ok((model, history))
}

/// [`train_linear`] on cross-sentence instances with the trigger sentence occluded.
pub fn train_linear_cso<'a>(
    train: impl IntoIterator<Item = &'a ProbeInstance>,
    dev: impl IntoIterator<Item = &'a ProbeInstance>,
    role: &str,
    cfg: &TrainConfig,
    exclude_trigger: bool,
) -> Result<LinearModel> {
    let train: Vec<&ProbeInstance> = train
        .into_iter()
        .filter(|p| p.role() == role && p.is_cross_sentence())
        .collect();
    if train.is_empty() {
        return Err(Error::NoCrossSentenceInstances { role: role.to_string() });
    }
    let dev = dev.into_iter().filter(|p| p.is_cross_sentence());
    train_linear(
        train,
        dev,
        role,
        cfg,
        ProbeOptions {
            view: HeadView::Cso,
            exclude_trigger,
        },
    )
}
