use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{OuterOptimizer, TrainConfig};
use super::metrics::MetricsLog;
use crate::balancing::recover_downlink;
use crate::datasets::{SamplePair, TaskDataset};
use crate::error::{Error, Result};
use crate::nn::{
    adam_step, adam_step_masked, batch_loss, loss_and_grads, output_to_power, sgd_step, AdamState, BnBatchStats,
    Graph, Mode, Model, NetworkConfig, NodeId, ParameterSet, Standardization, Tensor,
};
use crate::numerics::{linear_to_db, RandomStream};

const SPLIT_STREAM: u64 = 11;
const SHUFFLE_STREAM: u64 = 12;
const INIT_STREAM: u64 = 13;
const EVAL_CHUNK: usize = 512;

/// Fresh parameters with input statistics fitted on `pool`.
pub fn initial_model(net: &NetworkConfig, pool: &[SamplePair], seed: u64) -> Model {
    let std = Standardization::fit(net, pool.iter().map(|p| &p.instance));
    Model::new(net.clone(), std, &mut RandomStream::new(seed, INIT_STREAM))
}

/// Mean eval-mode loss of `params` over `data`.
pub fn dataset_loss(model: &Model, params: &ParameterSet, data: &[SamplePair]) -> Result<f64> {
    let mut total = 0.0;
    for chunk in data.chunks(EVAL_CHUNK) {
        let mut g = Graph::new();
        let loss = g.no_grad(|g| {
            let leaves = Model::leaves(g, params, |_| false);
            batch_loss(g, model, &leaves, chunk, Mode::Eval).map(|(l, _)| g.value(l).item())
        })?;
        total += loss * chunk.len() as f64;
    }
    Ok(total / data.len().max(1) as f64)
}

fn check_finite(loss: f64, step: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss(step))
    }
}

/// True once the best value of the last `window` entries improves on the
/// best before them by less than `tol`.
fn plateaued(history: &[f64], window: usize, tol: f64) -> bool {
    if history.len() <= window {
        return false;
    }
    let split = history.len() - window;
    let before = history[..split].iter().copied().fold(f64::INFINITY, f64::min);
    let recent = history[split..].iter().copied().fold(f64::INFINITY, f64::min);
    before - recent < tol
}

/// Minimizes the MSE loss over `pool` with Adam at rate `alpha`, updating BN
/// running statistics. Stops on the validation plateau rule or the epoch
/// cap and returns the parameters with the best validation loss.
pub fn train_joint(pool: &[SamplePair], mut model: Model, cfg: &TrainConfig, stage: &str) -> Result<(Model, MetricsLog)> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::InvalidConfig("training pool is empty".into()));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    RandomStream::new(cfg.seed, SPLIT_STREAM).shuffle(&mut order);
    let n_val = (pool.len() as f64 * cfg.validation_fraction).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);
    let train: Vec<SamplePair> = train_idx.iter().map(|i| pool[*i].clone()).collect();
    let val: Vec<SamplePair> = val_idx.iter().map(|i| pool[*i].clone()).collect();

    let mut rng = RandomStream::new(cfg.seed, SHUFFLE_STREAM);
    let mut adam = AdamState::new(&model.params);
    let mut log = MetricsLog::default();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, model.clone());
    let mut step = 0;
    let mut idx: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.max_epochs {
        rng.shuffle(&mut idx);
        let mut epoch_loss = 0.0;
        for chunk in idx.chunks(cfg.batch_size) {
            let batch: Vec<SamplePair> = chunk.iter().map(|i| train[*i].clone()).collect();
            let (loss, grads, stats) = loss_and_grads(&model, &model.params, &batch, Mode::Train, |_| true)?;
            check_finite(loss, step)?;
            model.params = adam_step(&mut adam, &model.params, &grads, cfg.alpha)?;
            check_finite(if model.params.is_finite() { loss } else { f64::NAN }, step)?;
            model.running.update(&stats, model.config.bn_momentum);
            epoch_loss += loss * batch.len() as f64;
            step += 1;
        }
        let train_loss = epoch_loss / train.len() as f64;
        let monitored = if val.is_empty() { dataset_loss(&model, &model.params, &train)? } else { dataset_loss(&model, &model.params, &val)? };
        check_finite(monitored, step)?;
        log.push(stage, epoch, train_loss, Some(monitored));
        if monitored < best.0 {
            best = (monitored, model.clone());
        }
        history.push(monitored);
        if plateaued(&history, cfg.plateau_epochs, cfg.plateau_tol) {
            break;
        }
    }
    Ok((best.1, log))
}

/// Joint training on the mixed source pool (the first stage of transfer learning).
pub fn pretrain(pool: &[SamplePair], model: Model, cfg: &TrainConfig) -> Result<(Model, MetricsLog)> {
    train_joint(pool, model, cfg, "pretrain")
}

/// `adapt_steps` Adam steps at rate `beta` on the fully connected layer
/// only. The frozen layers run in eval mode, so every other tensor and the
/// BN running statistics stay bitwise unchanged.
pub fn fine_tune(model: &Model, adapt: &[SamplePair], cfg: &TrainConfig) -> Result<(Model, MetricsLog)> {
    if adapt.is_empty() {
        return Err(Error::InvalidConfig("adaptation set is empty".into()));
    }
    let fc = model.params.fc_indices();
    let trainable = |i: usize| fc.contains(&i);
    let mut out = model.clone();
    let mut adam = AdamState::new(&out.params);
    let mut log = MetricsLog::default();
    for step in 0..cfg.adapt_steps {
        let (loss, grads, _) = loss_and_grads(&out, &out.params, adapt, Mode::Eval, trainable)?;
        check_finite(loss, step)?;
        out.params = adam_step_masked(&mut adam, &out.params, &grads, cfg.beta, trainable)?;
        check_finite(if out.params.is_finite() { loss } else { f64::NAN }, step)?;
        log.push("fine-tune", step, loss, None);
    }
    Ok((out, log))
}

/// `adapt_steps` full-parameter Adam steps at rate `beta`, in train mode so
/// BN running statistics move toward the adaptation data.
pub fn meta_adapt(model: &Model, adapt: &[SamplePair], cfg: &TrainConfig) -> Result<(Model, MetricsLog)> {
    if adapt.is_empty() {
        return Err(Error::InvalidConfig("adaptation set is empty".into()));
    }
    let mut out = model.clone();
    let mut adam = AdamState::new(&out.params);
    let mut log = MetricsLog::default();
    for step in 0..cfg.adapt_steps {
        let (loss, grads, stats) = loss_and_grads(&out, &out.params, adapt, Mode::Train, |_| true)?;
        check_finite(loss, step)?;
        out.params = adam_step(&mut adam, &out.params, &grads, cfg.beta)?;
        check_finite(if out.params.is_finite() { loss } else { f64::NAN }, step)?;
        out.running.update(&stats, out.config.bn_momentum);
        log.push("meta-adapt", step, loss, None);
    }
    Ok((out, log))
}

/// Query loss after `inner_steps` gradient steps on `support`, and its
/// gradient with respect to the starting parameters.
///
/// Inner gradients are recorded unless `first_order`, so the returned
/// gradient includes the Hessian-vector terms. The BN statistics returned are
/// those of the first forward pass at the starting parameters.
pub fn task_meta_gradient(
    model: &Model,
    params: &ParameterSet,
    support: &[SamplePair],
    query: &[SamplePair],
    inner_steps: usize,
    beta: f64,
    first_order: bool,
) -> Result<(f64, ParameterSet, Vec<BnBatchStats>)> {
    let mut g = Graph::new();
    let theta = Model::leaves(&mut g, params, |_| true);
    let mut phi = theta.clone();
    let mut first_stats = None;
    for _ in 0..inner_steps {
        let (ls, stats) = batch_loss(&mut g, model, &phi, support, Mode::Train)?;
        first_stats.get_or_insert(stats);
        let grads = g.grad(ls, &phi, !first_order)?;
        phi = phi
            .iter()
            .zip(&grads)
            .map(|(p, gr)| {
                let step = g.scale(*gr, -beta)?;
                g.add(*p, step)
            })
            .collect::<Result<Vec<NodeId>>>()?;
    }
    let (lq, stats) = batch_loss(&mut g, model, &phi, query, Mode::Train)?;
    let grads = g.grad(lq, &theta, false)?;
    let tensors: Vec<Tensor> = grads.iter().map(|id| g.value(*id).clone()).collect();
    Ok((g.value(lq).item(), ParameterSet::new(params.names().to_vec(), tensors)?, first_stats.unwrap_or(stats)))
}

/// Weighted sum of per-task meta-gradients, reduced in task order.
pub struct OuterGradient {
    pub loss: f64,
    pub grads: ParameterSet,
    pub stats: Vec<Vec<BnBatchStats>>,
}

/// `Σ_k w_k ∇_θ Loss_query(φ_k)` over `(support, query, weight)` triples.
pub fn weighted_outer_gradient(
    model: &Model,
    params: &ParameterSet,
    tasks: &[(&[SamplePair], &[SamplePair], f64)],
    inner_steps: usize,
    beta: f64,
    first_order: bool,
    pool: Option<&rayon::ThreadPool>,
) -> Result<OuterGradient> {
    let run = |t: &(&[SamplePair], &[SamplePair], f64)| task_meta_gradient(model, params, t.0, t.1, inner_steps, beta, first_order);
    let per_task: Vec<Result<(f64, ParameterSet, Vec<BnBatchStats>)>> = match pool {
        Some(p) => p.install(|| tasks.par_iter().map(run).collect()),
        None => tasks.iter().map(run).collect(),
    };
    let mut sum = params.zeros_like();
    let mut loss = 0.0;
    let mut stats = Vec::with_capacity(tasks.len());
    for (res, task) in per_task.into_iter().zip(tasks) {
        let (l, g, s) = res?;
        let w = task.2;
        loss += w * l;
        for (acc, gi) in sum.tensors_mut().iter_mut().zip(g.tensors()) {
            for (a, b) in acc.data_mut().iter_mut().zip(gi.data()) {
                *a += w * b;
            }
        }
        stats.push(s);
    }
    Ok(OuterGradient { loss, grads: sum, stats })
}

/// Outer gradient of `Σ_k Loss_query(φ_k)` for a batch of tasks.
pub fn meta_outer_gradient(
    model: &Model,
    params: &ParameterSet,
    tasks: &[&TaskDataset],
    cfg: &TrainConfig,
    pool: Option<&rayon::ThreadPool>,
) -> Result<OuterGradient> {
    let triples: Vec<(&[SamplePair], &[SamplePair], f64)> =
        tasks.iter().map(|t| (t.support.as_slice(), t.query.as_slice(), 1.0)).collect();
    weighted_outer_gradient(model, params, &triples, cfg.inner_steps, cfg.beta, cfg.first_order_meta, pool)
}

pub(crate) fn worker_pool(workers: usize) -> Result<Option<rayon::ThreadPool>> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

pub(crate) fn outer_update(
    params: &ParameterSet,
    grads: &ParameterSet,
    adam: &mut AdamState,
    optimizer: OuterOptimizer,
    lr: f64,
) -> Result<ParameterSet> {
    match optimizer {
        OuterOptimizer::Adam => adam_step(adam, params, grads, lr),
        OuterOptimizer::Sgd => sgd_step(params, grads, lr),
    }
}

/// Cross-task training over batches of `batch_size` tasks, sampled without
/// replacement within each epoch. Stops when the mean query loss over the
/// last `meta_window` outer steps no longer improves by `plateau_tol`, at
/// `max_outer_steps`, or at the epoch cap.
pub fn meta_train(tasks: &[TaskDataset], mut model: Model, cfg: &TrainConfig) -> Result<(Model, MetricsLog)> {
    cfg.validate()?;
    if tasks.is_empty() {
        return Err(Error::InvalidConfig("no meta-training tasks".into()));
    }
    let pool = worker_pool(cfg.workers)?;
    let mut rng = RandomStream::new(cfg.seed, SHUFFLE_STREAM);
    let mut adam = AdamState::new(&model.params);
    let mut log = MetricsLog::default();
    let mut history: Vec<f64> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    let mut step = 0;
    'epochs: for _ in 0..cfg.max_epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TaskDataset> = chunk.iter().map(|i| &tasks[*i]).collect();
            let outer = meta_outer_gradient(&model, &model.params, &batch, cfg, pool.as_ref())?;
            check_finite(outer.loss, step)?;
            model.params = outer_update(&model.params, &outer.grads, &mut adam, cfg.meta_optimizer, cfg.alpha)?;
            check_finite(if model.params.is_finite() { 0.0 } else { f64::NAN }, step)?;
            for s in &outer.stats {
                model.running.update(s, model.config.bn_momentum);
            }
            let mean = outer.loss / batch.len() as f64;
            history.push(mean);
            log.push("meta", step, mean, None);
            step += 1;
            let w = cfg.meta_window;
            if history.len() % w == 0 {
                means.push(history[history.len() - w..].iter().sum::<f64>() / w as f64);
                if means.len() >= 2 && means[means.len() - 2] - means[means.len() - 1] < cfg.plateau_tol {
                    break 'epochs;
                }
            }
            if step >= cfg.max_outer_steps {
                break 'epochs;
            }
        }
    }
    Ok((model, log))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    /// Mean over instances of the min-SINR in dB.
    pub mean_min_sinr_db: f64,
    pub optimal_mean_min_sinr_db: f64,
    /// Mean over instances of (achieved min-SINR / optimal), linear.
    pub mean_ratio_to_optimal: f64,
    pub min_ratio_to_optimal: f64,
    /// Prediction plus recovery time per channel.
    pub per_channel_ms: f64,
}

/// Runs `predict` (uplink powers per instance) through beamformer recovery
/// and compares the resulting min-SINR to the optimum stored in the labels.
pub fn evaluate_with(
    test: &[SamplePair],
    mut predict: impl FnMut(&[SamplePair]) -> Result<Vec<Vec<f64>>>,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidConfig("test set is empty".into()));
    }
    let (mut db, mut opt_db, mut ratio, mut min_ratio, mut elapsed) = (0.0, 0.0, 0.0, f64::INFINITY, 0.0);
    for chunk in test.chunks(EVAL_CHUNK) {
        let t0 = Instant::now();
        let q = predict(chunk)?;
        let achieved: Vec<f64> = chunk
            .iter()
            .zip(&q)
            .map(|(p, q)| recover_downlink(&p.instance, q).map(|d| d.min_sinr()))
            .collect::<Result<_>>()?;
        elapsed += t0.elapsed().as_secs_f64();
        for (p, a) in chunk.iter().zip(achieved) {
            let q_opt: Vec<f64> = p.label.iter().map(|f| f * p.instance.power).collect();
            let opt = recover_downlink(&p.instance, &q_opt)?.min_sinr();
            db += linear_to_db(a);
            opt_db += linear_to_db(opt);
            ratio += a / opt;
            min_ratio = min_ratio.min(a / opt);
        }
    }
    let n = test.len() as f64;
    Ok(EvalReport {
        count: test.len(),
        mean_min_sinr_db: db / n,
        optimal_mean_min_sinr_db: opt_db / n,
        mean_ratio_to_optimal: ratio / n,
        min_ratio_to_optimal: min_ratio,
        per_channel_ms: elapsed * 1e3 / n,
    })
}

pub fn evaluate(model: &Model, test: &[SamplePair]) -> Result<EvalReport> {
    evaluate_with(test, |chunk| {
        let refs: Vec<_> = chunk.iter().map(|p| &p.instance).collect();
        let s = model.predict(&refs)?;
        Ok(s.iter().zip(chunk).map(|(s, p)| output_to_power(s, p.instance.power)).collect())
    })
}
