//! Training loops: plain SGD baselines and stochastic blockwise coordinated
//! gradient descent (SBCGD) with group pruning.
//!
//! One SBCGD epoch visits the live groups in a seeded random order. For group
//! `i` it runs a pass of mini-batches; each batch
//!
//! 1. evaluates `loss1 = φ(f(X'), y')` and `loss2 = φ(f_ī(X̄'_i), y')` (group
//!    `i` disconnected),
//! 2. records `max(loss2 − loss1, 0)`,
//! 3. takes an SGD step on `loss1 + λ τ_i` that moves only `θ_i` and the
//!    layers above the first one.
//!
//! After the pass the group is pruned when the sample-weighted mean of the
//! recorded gaps is strictly below `λ` (or `λ τ_i` in
//! [`PruneThreshold::LambdaTimesTau`] mode). Clamping negative gaps to zero
//! biases that mean upward. Pruned groups are never visited again.
//!
//! Version B ([`Algorithm::SbcgdB`]) splits the pass in two: all updates
//! first, then an update-free measurement pass.
//!
//! Only `θ_i` moves during group `i`'s pass, even though the other groups'
//! first-layer gradients are available; the deferred one-time update of the
//! other blocks is not implemented.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grouping::{
    group_regularizer, masked_forward, masked_output_from_pass, prune_group, regularizer_subgradient,
    total_regularizer, GroupPartition, SparsityMask,
};
use crate::loss::{loss_and_grad, loss_value, LossSpec};
use crate::matrix::Matrix;
use crate::nn::{FirstLayerRows, ForwardPass, Gradients, Network};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Plain mini-batch SGD on `φ`.
    #[serde(rename = "SGD")]
    Sgd,
    /// Plain mini-batch SGD on `φ + λτ`.
    #[serde(rename = "SGD_TAU")]
    SgdTau,
    #[serde(rename = "SBCGD")]
    Sbcgd,
    #[serde(rename = "SBCGD_B")]
    SbcgdB,
}

impl Algorithm {
    pub fn is_blockwise(self) -> bool {
        matches!(self, Algorithm::Sbcgd | Algorithm::SbcgdB)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneThreshold {
    /// Prune when `mean(gaps) < λ`.
    #[default]
    LambdaFlat,
    /// Prune when `mean(gaps) < λ τ_i`, with `τ_i` taken at test time.
    LambdaTimesTau,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda: f64,
    pub batch_size: usize,
    pub lr: f64,
    /// Multiplicative learning-rate factor applied every `decay_every` epochs.
    pub decay: f64,
    #[serde(default = "one")]
    pub decay_every: usize,
    pub epochs: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    #[serde(default)]
    pub prune_threshold: PruneThreshold,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.0,
            batch_size: 100,
            lr: 0.1,
            decay: 1.0,
            decay_every: 1,
            epochs: 1,
            algorithm: Algorithm::Sbcgd,
            seed: 0,
            prune_threshold: PruneThreshold::LambdaFlat,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid(format!("decay must be in (0, 1], got {}", self.decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if self.decay_every == 0 {
            return Err(Error::invalid("decay_every must be >= 1"));
        }
        Ok(())
    }

    /// Learning rate used during (0-based) `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr * self.decay.powi((epoch / self.decay_every) as i32)
    }

    /// Baseline protocol for comparing SGD runs with SBCGD on `k` groups:
    /// `k` times the epochs, with the decay applied every `k` epochs.
    pub fn with_baseline_scaling(mut self, k: usize) -> Self {
        let k = k.max(1);
        self.epochs *= k;
        self.decay_every *= k;
        self
    }
}

/// What happened during one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub lr: f64,
    /// Order in which groups were considered (empty for SGD).
    pub group_order: Vec<usize>,
    /// Per group: the clamped loss gap of every measured batch.
    pub gaps: Vec<Vec<f64>>,
    /// Per group: sample-weighted mean gap, when the group was measured.
    pub mean_gap: Vec<Option<f64>>,
    /// Groups pruned during this epoch, in pruning order.
    pub pruned: Vec<usize>,
    /// All sparse groups at the end of the epoch.
    pub sparse_groups: Vec<usize>,
    /// Sample-weighted mean of the (unregularized) batch losses seen by the
    /// update steps.
    pub train_loss: f64,
    pub tau: f64,
    /// Parameter update steps taken.
    pub updates: usize,
    /// Full passes over the data (update or measurement).
    pub passes: usize,
}

impl EpochTrace {
    fn new(epoch: usize, lr: f64, k: usize) -> Self {
        EpochTrace {
            epoch,
            lr,
            group_order: Vec::new(),
            gaps: vec![Vec::new(); k],
            mean_gap: vec![None; k],
            pruned: Vec::new(),
            sparse_groups: Vec::new(),
            train_loss: 0.0,
            tau: 0.0,
            updates: 0,
            passes: 0,
        }
    }
}

/// One line of the JSON-lines training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLogRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub tau: f64,
    pub pruned: Vec<usize>,
    pub sparse_groups: Vec<usize>,
    pub updates: usize,
}

impl From<&EpochTrace> for EpochLogRecord {
    fn from(t: &EpochTrace) -> Self {
        EpochLogRecord {
            epoch: t.epoch,
            lr: t.lr,
            train_loss: t.train_loss,
            tau: t.tau,
            pruned: t.pruned.clone(),
            sparse_groups: t.sparse_groups.clone(),
            updates: t.updates,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub mask: SparsityMask,
    pub traces: Vec<EpochTrace>,
}

impl TrainOutcome {
    /// Sparse groups in the order they were pruned.
    pub fn pruning_order(&self) -> Vec<usize> {
        self.traces.iter().flat_map(|t| t.pruned.iter().copied()).collect()
    }

    /// Epoch index at which `group` was pruned.
    pub fn pruned_at(&self, group: usize) -> Option<usize> {
        self.traces.iter().find(|t| t.pruned.contains(&group)).map(|t| t.epoch)
    }
}

/// Result of one group's pass over the data.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupPass {
    /// Clamped loss gap of every batch.
    pub gaps: Vec<f64>,
    /// Sample-weighted mean of `gaps`.
    pub mean_gap: f64,
    /// Sample-weighted mean training loss seen by the update steps.
    pub loss: f64,
    pub samples: usize,
    pub updates: usize,
}

/// Running sums for the per-pass statistics.
#[derive(Default)]
struct PassStats {
    gap_weighted: f64,
    gaps: Vec<f64>,
    loss_weighted: f64,
    samples: usize,
}

/// Owns the per-run state (RNG, epoch counter) of one training run.
pub struct Trainer<'a> {
    data: &'a Dataset,
    loss: &'a LossSpec,
    cfg: TrainConfig,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a Dataset, loss: &'a LossSpec, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if data.n() == 0 {
            return Err(Error::EmptyDataset);
        }
        loss.validate(None)?;
        Ok(Trainer {
            data,
            loss,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn current_lr(&self) -> f64 {
        self.cfg.lr_at(self.epoch)
    }

    fn part(&self) -> &'a GroupPartition {
        self.data.partition()
    }

    fn check(&self, net: &Network, mask: &SparsityMask) -> Result<()> {
        if net.input_dim() != self.data.p() {
            return Err(Error::dims(format!(
                "network takes {} inputs, dataset has {} features",
                net.input_dim(),
                self.data.p()
            )));
        }
        if mask.k() != self.part().k() {
            return Err(Error::dims(format!(
                "mask has {} flags for {} groups",
                mask.k(),
                self.part().k()
            )));
        }
        if net.output_dim() < self.data.num_classes() {
            return Err(Error::dims(format!(
                "network has {} outputs for {} classes",
                net.output_dim(),
                self.data.num_classes()
            )));
        }
        Ok(())
    }

    /// Shuffled sample indices cut into mini-batches; the last may be short.
    fn batches(&mut self) -> Vec<Vec<usize>> {
        let mut idx: Vec<usize> = (0..self.data.n()).collect();
        idx.shuffle(&mut self.rng);
        idx.chunks(self.cfg.batch_size).map(<[usize]>::to_vec).collect()
    }

    fn batch(&self, idx: &[usize]) -> (Matrix, Vec<usize>) {
        let y = idx.iter().map(|&i| self.data.y()[i]).collect();
        (self.data.x().select_rows(idx), y)
    }

    fn finite(&self, v: f64, what: &str) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Diverged(format!("{what} is {v} in epoch {}", self.epoch)))
        }
    }

    /// `max(φ(f_ī(X̄_i)) − φ(f(X)), 0)` for one batch, reusing `loss1`.
    fn gap(&self, net: &Network, group: usize, pass: &ForwardPass, y: &[usize], loss1: f64) -> Result<f64> {
        let masked = masked_output_from_pass(net, self.part(), group, pass)?;
        let loss2 = self.finite(loss_value(self.loss, &masked, y)?, "masked loss")?;
        Ok((loss2 - loss1).max(0.0))
    }

    /// One step on `φ + λ τ_i` restricted to `Θ ∪ θ_i`. Returns `φ`.
    #[allow(clippy::too_many_arguments)]
    fn group_step(
        &self,
        net: &mut Network,
        mask: &SparsityMask,
        group: usize,
        x: &Matrix,
        y: &[usize],
        lr: f64,
        stats: Option<(&mut PassStats, usize)>,
    ) -> Result<f64> {
        let rows = self.part().group(group);
        let pass = net.forward(x)?;
        let (loss1, out_grad) = loss_and_grad(self.loss, pass.output(), y)?;
        let loss1 = self.finite(loss1, "training loss")?;
        if let Some((stats, b)) = stats {
            let gap = self.gap(net, group, &pass, y, loss1)?;
            stats.gaps.push(gap);
            stats.gap_weighted += gap * b as f64;
        }
        let mut grads = net.backward(&pass, &out_grad, FirstLayerRows::Only(rows))?;
        if self.cfg.lambda > 0.0 {
            let sub = regularizer_subgradient(net, self.part(), mask, group)?;
            add_group_block(&mut grads, rows, &sub, self.cfg.lambda);
        }
        net.apply_update(&grads, lr, FirstLayerRows::Only(rows))?;
        Ok(loss1)
    }

    fn finish(
        &self,
        net: &Network,
        mask: &SparsityMask,
        trace: &mut EpochTrace,
        loss_sum: f64,
        loss_n: usize,
    ) -> Result<()> {
        trace.train_loss = if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 };
        trace.tau = total_regularizer(net, self.part())?;
        trace.sparse_groups = mask.sparse_groups();
        if !net.all_finite() {
            return Err(Error::Diverged(format!(
                "non-finite parameters after epoch {}",
                self.epoch
            )));
        }
        Ok(())
    }

    fn prune_test(&self, net: &Network, group: usize, mean_gap: f64) -> Result<bool> {
        let threshold = match self.cfg.prune_threshold {
            PruneThreshold::LambdaFlat => self.cfg.lambda,
            PruneThreshold::LambdaTimesTau => self.cfg.lambda * group_regularizer(net, self.part(), group)?,
        };
        Ok(mean_gap < threshold)
    }

    /// The inner loop for one group at the current learning rate: a shuffled
    /// pass of measured, restricted update steps. Does not prune and does not
    /// advance the epoch.
    pub fn group_pass(&mut self, net: &mut Network, mask: &SparsityMask, group: usize) -> Result<GroupPass> {
        self.check(net, mask)?;
        let lr = self.current_lr();
        self.group_pass_at(net, mask, group, lr)
    }

    fn group_pass_at(&mut self, net: &mut Network, mask: &SparsityMask, group: usize, lr: f64) -> Result<GroupPass> {
        self.part().check_index(group)?;
        if mask.is_sparse(group) {
            return Err(Error::ContractViolation(format!("group {group} is already sparse")));
        }
        let mut stats = PassStats::default();
        let mut updates = 0;
        for idx in self.batches() {
            let (x, y) = self.batch(&idx);
            let loss1 = self.group_step(net, mask, group, &x, &y, lr, Some((&mut stats, idx.len())))?;
            stats.loss_weighted += loss1 * idx.len() as f64;
            stats.samples += idx.len();
            updates += 1;
        }
        Ok(GroupPass {
            mean_gap: stats.gap_weighted / stats.samples as f64,
            loss: stats.loss_weighted / stats.samples as f64,
            gaps: stats.gaps,
            samples: stats.samples,
            updates,
        })
    }

    /// One epoch of unmasked mini-batch SGD on `φ` (plus `λτ` over all live
    /// groups when `include_tau`). Never prunes.
    pub fn sgd_epoch(&mut self, net: &mut Network, mask: &SparsityMask, include_tau: bool) -> Result<EpochTrace> {
        self.check(net, mask)?;
        let lr = self.current_lr();
        let k = self.part().k();
        let mut trace = EpochTrace::new(self.epoch, lr, k);
        let (mut loss_sum, mut loss_n) = (0.0, 0);
        for idx in self.batches() {
            let (x, y) = self.batch(&idx);
            let pass = net.forward(&x)?;
            let (loss, out_grad) = loss_and_grad(self.loss, pass.output(), &y)?;
            loss_sum += self.finite(loss, "training loss")? * idx.len() as f64;
            loss_n += idx.len();
            let mut grads = net.backward(&pass, &out_grad, FirstLayerRows::All)?;
            if include_tau && self.cfg.lambda > 0.0 {
                for g in mask.live_groups() {
                    let sub = regularizer_subgradient(net, self.part(), mask, g)?;
                    add_group_block(&mut grads, self.part().group(g), &sub, self.cfg.lambda);
                }
            }
            net.apply_update(&grads, lr, FirstLayerRows::All)?;
            trace.updates += 1;
        }
        trace.passes = 1;
        self.finish(net, mask, &mut trace, loss_sum, loss_n)?;
        self.epoch += 1;
        Ok(trace)
    }

    /// One epoch of SBCGD (see the module docs).
    pub fn sbcgd_epoch(&mut self, net: &mut Network, mask: &mut SparsityMask) -> Result<EpochTrace> {
        self.check(net, mask)?;
        let lr = self.current_lr();
        let k = self.part().k();
        let mut trace = EpochTrace::new(self.epoch, lr, k);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut self.rng);
        let (mut loss_sum, mut loss_n) = (0.0, 0);
        for &group in &order {
            if mask.is_sparse(group) {
                continue;
            }
            trace.group_order.push(group);
            let pass = self.group_pass_at(net, mask, group, lr)?;
            trace.updates += pass.updates;
            trace.passes += 1;
            loss_sum += pass.loss * pass.samples as f64;
            loss_n += pass.samples;
            let mean_gap = pass.mean_gap;
            trace.mean_gap[group] = Some(mean_gap);
            trace.gaps[group] = pass.gaps;
            if self.prune_test(net, group, mean_gap)? {
                prune_group(net, self.part(), mask, group)?;
                trace.pruned.push(group);
            }
        }
        self.finish(net, mask, &mut trace, loss_sum, loss_n)?;
        self.epoch += 1;
        Ok(trace)
    }

    /// One epoch of SBCGD version B: per live group, a full update pass and
    /// then a separate update-free measurement pass before the prune test.
    pub fn sbcgd_b_epoch(&mut self, net: &mut Network, mask: &mut SparsityMask) -> Result<EpochTrace> {
        self.check(net, mask)?;
        let lr = self.current_lr();
        let k = self.part().k();
        let mut trace = EpochTrace::new(self.epoch, lr, k);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut self.rng);
        let (mut loss_sum, mut loss_n) = (0.0, 0);
        for &group in &order {
            if mask.is_sparse(group) {
                continue;
            }
            trace.group_order.push(group);
            for idx in self.batches() {
                let (x, y) = self.batch(&idx);
                let loss = self.group_step(net, mask, group, &x, &y, lr, None)?;
                loss_sum += loss * idx.len() as f64;
                loss_n += idx.len();
                trace.updates += 1;
            }
            let mut stats = PassStats::default();
            for idx in self.batches() {
                let (x, y) = self.batch(&idx);
                let pass = net.forward(&x)?;
                let loss1 = self.finite(loss_value(self.loss, pass.output(), &y)?, "training loss")?;
                let gap = self.gap(net, group, &pass, &y, loss1)?;
                stats.gaps.push(gap);
                stats.gap_weighted += gap * idx.len() as f64;
                stats.samples += idx.len();
            }
            trace.passes += 2;
            let mean_gap = stats.gap_weighted / stats.samples as f64;
            trace.mean_gap[group] = Some(mean_gap);
            trace.gaps[group] = stats.gaps;
            if self.prune_test(net, group, mean_gap)? {
                prune_group(net, self.part(), mask, group)?;
                trace.pruned.push(group);
            }
        }
        self.finish(net, mask, &mut trace, loss_sum, loss_n)?;
        self.epoch += 1;
        Ok(trace)
    }

    /// Runs one epoch of the configured algorithm.
    pub fn run_epoch(&mut self, net: &mut Network, mask: &mut SparsityMask) -> Result<EpochTrace> {
        match self.cfg.algorithm {
            Algorithm::Sgd => self.sgd_epoch(net, mask, false),
            Algorithm::SgdTau => self.sgd_epoch(net, mask, true),
            Algorithm::Sbcgd => self.sbcgd_epoch(net, mask),
            Algorithm::SbcgdB => self.sbcgd_b_epoch(net, mask),
        }
    }
}

fn add_group_block(grads: &mut Gradients, rows: &[usize], block: &Matrix, scale: f64) {
    let gw = grads.weights_mut(0);
    for (k, &r) in rows.iter().enumerate() {
        gw.row_mut(r)
            .iter_mut()
            .zip(block.row(k))
            .for_each(|(g, s)| *g += scale * s);
    }
}

/// Trains `net` in place for `cfg.epochs` epochs. Groups whose rows are
/// already pruned in `net` start out sparse. When `log` is given, one JSON
/// object per epoch is written to it.
pub fn train(
    net: &mut Network,
    data: &Dataset,
    loss: &LossSpec,
    cfg: &TrainConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(data, loss, cfg.clone())?;
    let mut mask = SparsityMask::from_network(net, data.partition())?;
    let mut traces = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let trace = trainer.run_epoch(net, &mut mask)?;
        if let Some(w) = log.as_deref_mut() {
            serde_json::to_writer(&mut *w, &EpochLogRecord::from(&trace))?;
            w.write_all(b"\n")?;
        }
        traces.push(trace);
    }
    Ok(TrainOutcome { mask, traces })
}

/// Both sides of the pruning proposition, evaluated full-batch:
///
/// * `lhs`: `E[φ(f_ī(X̄_i))] − E[φ(f(X))] < λ τ_i`
/// * `rhs`: `J(β̄_i) < J(β)`, with `J = φ + λτ` and `β̄_i` equal to `β` with
///   `θ_i = 0`.
pub fn proposition_check(
    net: &Network,
    data: &Dataset,
    loss: &LossSpec,
    group: usize,
    lambda: f64,
) -> Result<(bool, bool)> {
    let part = data.partition();
    part.check_index(group)?;
    let plain = loss_value(loss, &net.predict(data.x())?, data.y())?;
    let masked = loss_value(loss, &masked_forward(net, part, group, data.x())?, data.y())?;
    let taus = (0..part.k())
        .map(|j| group_regularizer(net, part, j))
        .collect::<Result<Vec<_>>>()?;
    let lhs = masked - plain < lambda * taus[group];
    let tau_all: f64 = taus.iter().sum();
    let tau_without: f64 = taus
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != group)
        .map(|(_, t)| t)
        .sum();
    let rhs = masked + lambda * tau_without < plain + lambda * tau_all;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_parity;
    use crate::nn::Activation;

    fn cfg(algorithm: Algorithm, lambda: f64) -> TrainConfig {
        TrainConfig {
            lambda,
            batch_size: 32,
            lr: 0.1,
            decay: 0.99,
            epochs: 2,
            algorithm,
            seed: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn geometric_schedule() {
        let c = TrainConfig {
            lr: 0.1,
            decay: 0.5,
            ..TrainConfig::default()
        };
        assert!((c.lr_at(3) - 0.0125).abs() < 1e-18);
        let scaled = c.clone().with_baseline_scaling(5);
        assert_eq!(scaled.decay_every, 5);
        assert_eq!(scaled.lr_at(4), 0.1);
        assert_eq!(scaled.lr_at(5), 0.05);
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig {
                lr: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                decay: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                decay: 1.5,
                ..TrainConfig::default()
            },
            TrainConfig {
                batch_size: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                lambda: -1.0,
                ..TrainConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn zero_epochs_leaves_net_unchanged() {
        let data = gen_parity(64, 0).unwrap();
        let mut net = Network::init(&[10, 6, 2], Activation::Relu, 1).unwrap();
        let before = net.clone();
        let c = TrainConfig {
            epochs: 0,
            ..cfg(Algorithm::Sbcgd, 0.1)
        };
        let out = train(&mut net, &data, &LossSpec::cross_entropy(), &c, None).unwrap();
        assert_eq!(net, before);
        assert!(out.traces.is_empty());
    }

    #[test]
    fn lambda_zero_never_prunes() {
        let data = gen_parity(200, 1).unwrap();
        for alg in [Algorithm::Sbcgd, Algorithm::SbcgdB] {
            let mut net = Network::init(&[10, 6, 2], Activation::Relu, 2).unwrap();
            let out = train(&mut net, &data, &LossSpec::cross_entropy(), &cfg(alg, 0.0), None).unwrap();
            assert_eq!(out.mask.num_sparse(), 0);
        }
    }

    #[test]
    fn tau_with_zero_lambda_matches_plain_sgd() {
        let data = gen_parity(100, 3).unwrap();
        let init = Network::init(&[10, 6, 2], Activation::Relu, 5).unwrap();
        let (mut a, mut b) = (init.clone(), init);
        train(
            &mut a,
            &data,
            &LossSpec::cross_entropy(),
            &cfg(Algorithm::Sgd, 0.0),
            None,
        )
        .unwrap();
        train(
            &mut b,
            &data,
            &LossSpec::cross_entropy(),
            &cfg(Algorithm::SgdTau, 0.0),
            None,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let data = gen_parity(10, 0).unwrap();
        let empty = data.subset(&[]);
        assert!(matches!(
            Trainer::new(&empty, &LossSpec::cross_entropy(), cfg(Algorithm::Sbcgd, 0.1)),
            Err(Error::EmptyDataset)
        ));
        let mut net = Network::init(&[9, 4, 2], Activation::Relu, 0).unwrap();
        assert!(train(
            &mut net,
            &data,
            &LossSpec::cross_entropy(),
            &cfg(Algorithm::Sbcgd, 0.1),
            None
        )
        .is_err());
    }

    #[test]
    fn log_lines_per_epoch() {
        let data = gen_parity(50, 0).unwrap();
        let mut net = Network::init(&[10, 4, 2], Activation::Relu, 0).unwrap();
        let mut buf = Vec::new();
        train(
            &mut net,
            &data,
            &LossSpec::cross_entropy(),
            &cfg(Algorithm::Sbcgd, 1e-4),
            Some(&mut buf),
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let rec: EpochLogRecord = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(rec.epoch, 1);
        assert!((rec.lr - 0.099).abs() < 1e-15);
    }

    #[test]
    fn zero_group_makes_both_sides_false() {
        let data = gen_parity(40, 2).unwrap();
        let mut net = Network::init(&[10, 5, 2], Activation::Relu, 3).unwrap();
        for &r in data.partition().group(1) {
            net.layer_mut(0).weights_mut().row_mut(r).fill(0.0);
        }
        assert_eq!(
            proposition_check(&net, &data, &LossSpec::cross_entropy(), 1, 0.3).unwrap(),
            (false, false)
        );
    }

    #[test]
    fn huge_lambda_makes_both_sides_true() {
        let data = gen_parity(40, 2).unwrap();
        let net = Network::init(&[10, 5, 2], Activation::Relu, 3).unwrap();
        assert_eq!(
            proposition_check(&net, &data, &LossSpec::cross_entropy(), 0, 1e6).unwrap(),
            (true, true)
        );
    }
}
