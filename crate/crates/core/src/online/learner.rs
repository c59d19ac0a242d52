use super::buffer::SlotBuffer;
use super::config::OnlineMetaConfig;
use crate::datasets::SamplePair;
use crate::error::{Error, Result};
use crate::nn::{loss_and_grads, sgd_step, AdamState, Mode, Model};
use crate::numerics::RandomStream;
use crate::offline::{outer_update, train_joint, weighted_outer_gradient, worker_pool, TrainConfig};

/// `steps` full-parameter gradient-descent steps at rate `beta` on one slot's
/// pairs. BN runs in train mode; the updated running statistics belong to
/// the returned copy only.
pub fn adapt_on_slot(model: &Model, batch: &[SamplePair], steps: usize, beta: f64) -> Result<Model> {
    let mut out = model.clone();
    for step in 0..steps {
        let (loss, grads, stats) = loss_and_grads(&out, &out.params, batch, Mode::Train, |_| true)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(step));
        }
        out.params = sgd_step(&out.params, &grads, beta)?;
        out.running.update(&stats, out.config.bn_momentum);
    }
    Ok(out)
}

/// Learner state carried across slots.
pub struct OnlineMetaState {
    /// Shared parameters `θ_t`; never replaced by a slot's adapted copy.
    pub theta: Model,
    pub buffer: SlotBuffer,
    pub config: OnlineMetaConfig,
    adam: AdamState,
    rng: RandomStream,
    pool: Option<rayon::ThreadPool>,
}

/// Outcome of one slot's update.
pub struct SlotUpdate {
    /// Parameters adapted to the current slot, used for its predictions.
    pub adapted: Model,
    /// `Z_k` of every minibatch, indexed by past slot.
    pub counts: Vec<Vec<usize>>,
    /// Weighted validation loss `Σ Z_k Loss_val(φ_k)` per outer iteration.
    pub outer_losses: Vec<f64>,
}

impl OnlineMetaState {
    pub fn new(init: Model, config: OnlineMetaConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            adam: AdamState::new(&init.params),
            theta: init,
            buffer: SlotBuffer::new(),
            pool: worker_pool(config.workers)?,
            config,
            rng: RandomStream::new(seed, 21),
        })
    }

    /// Stores a slot's pairs without training (slot 0).
    pub fn observe(&mut self, batch: Vec<SamplePair>) {
        self.buffer.push(batch);
    }
}

fn draw(rng: &mut RandomStream, from: &[SamplePair], n: usize) -> Vec<SamplePair> {
    rng.sample_without_replacement(from.len(), n.min(from.len())).into_iter().map(|i| from[i].clone()).collect()
}

/// One slot of online meta-learning.
///
/// Trains `θ_t` on minibatches of past slots (weighted by their appearance
/// counts), adapts a copy to `batch`, then stores `batch` in the history.
/// The history must already hold at least one slot.
pub fn online_meta_step(state: &mut OnlineMetaState, batch: Vec<SamplePair>) -> Result<SlotUpdate> {
    if state.buffer.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let cfg = state.config.clone();
    let mut counts = Vec::with_capacity(cfg.outer_iters);
    let mut outer_losses = Vec::with_capacity(cfg.outer_iters);
    for iter in 0..cfg.outer_iters {
        let z = state.buffer.sample_counts(cfg.n_task, &mut state.rng);
        let mut sets = Vec::new();
        for (k, &zk) in z.iter().enumerate().filter(|(_, zk)| **zk > 0) {
            let slot = state.buffer.slot(k);
            let tr = draw(&mut state.rng, slot, cfg.n_tr);
            let val = draw(&mut state.rng, slot, cfg.n_val);
            sets.push((tr, val, zk as f64));
        }
        let tasks: Vec<(&[SamplePair], &[SamplePair], f64)> =
            sets.iter().map(|(tr, val, w)| (tr.as_slice(), val.as_slice(), *w)).collect();
        let theta = &state.theta;
        let outer =
            weighted_outer_gradient(theta, &theta.params, &tasks, cfg.n_in, cfg.beta, cfg.first_order, state.pool.as_ref())?;
        if !outer.loss.is_finite() {
            return Err(Error::NonFiniteLoss(iter));
        }
        state.theta.params = outer_update(&state.theta.params, &outer.grads, &mut state.adam, cfg.optimizer, cfg.alpha)?;
        for s in &outer.stats {
            state.theta.running.update(s, state.theta.config.bn_momentum);
        }
        counts.push(z);
        outer_losses.push(outer.loss);
    }
    let adapted = adapt_on_slot(&state.theta, &batch, cfg.n_ad, cfg.beta)?;
    state.buffer.push(batch);
    Ok(SlotUpdate { adapted, counts, outer_losses })
}

/// Follow-the-leader step: `epochs` warm-started passes over every stored
/// slot, then adaptation of a copy to the current slot's pairs.
///
/// Returns the leader (carried to the next slot) and the adapted copy.
pub fn ftl_update(
    history: &SlotBuffer,
    leader: &Model,
    current: &[SamplePair],
    epochs: usize,
    train: &TrainConfig,
    n_ad: usize,
    beta: f64,
) -> Result<(Model, Model)> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let data = history.collect(0..history.len());
    let cfg = TrainConfig { max_epochs: epochs.max(1), validation_fraction: 0.0, ..train.clone() };
    let (leader, _) = train_joint(&data, leader.clone(), &cfg, "ftl")?;
    let adapted = adapt_on_slot(&leader, current, n_ad, beta)?;
    Ok((leader, adapted))
}
