use rayon::prelude::*;

use super::file::{DatasetFile, DatasetHeader, SamplePair, DATASET_VERSION};
use crate::balancing::{recover_downlink, solve_balancing, BalancingOptions};
use crate::channels::{draw_instance, ChannelInstance, ScenarioConfig};
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// Largest tolerated share of records that needed a redraw.
pub const MAX_REDRAW_RATE: f64 = 0.01;
const MAX_ATTEMPTS_PER_RECORD: usize = 100;
const SELF_CHECK_TOL: f64 = 1e-4;

/// Rescales every `(h_k, σ_k)` to `(h_k/σ_k, 1)`.
pub fn canonicalize(instance: &ChannelInstance<f64>) -> ChannelInstance<f64> {
    instance.noise_normalized()
}

/// Solves one canonical instance and returns its label, or `None` when the
/// solver fails or the stored label does not reproduce the optimum.
fn label_instance(inst: &ChannelInstance<f64>) -> Result<Option<Vec<f64>>> {
    let (up, _) = match solve_balancing(inst, &BalancingOptions::default()) {
        Ok(sol) => sol,
        Err(Error::NoConvergence(_) | Error::NotPositiveDefinite { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let label: Vec<f64> = up.q.iter().map(|q| q / inst.power).collect();
    let q: Vec<f64> = label.iter().map(|f| f * inst.power).collect();
    let ok = match recover_downlink(inst, &q) {
        Ok(d) => (d.min_sinr() - up.balanced_sinr).abs() <= SELF_CHECK_TOL * up.balanced_sinr,
        Err(Error::NoConvergence(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(ok.then_some(label))
}

/// Draws and labels one record from its own sub-stream; returns the pair and
/// the number of redraws it took.
pub fn generate_record(cfg: &ScenarioConfig, index: usize, stream: &RandomStream) -> Result<(SamplePair, usize)> {
    let mut rng = stream.substream(index as u64);
    for attempt in 0..MAX_ATTEMPTS_PER_RECORD {
        let inst = canonicalize(&draw_instance(cfg, &mut rng)?);
        if let Some(label) = label_instance(&inst)? {
            return Ok((SamplePair { id: index, instance: inst, label }, attempt));
        }
    }
    Err(Error::RedrawRateExceeded { redraws: MAX_ATTEMPTS_PER_RECORD, count: 1 })
}

/// Generates `count` labelled records; the output is identical for every `workers` value.
pub fn generate_dataset(cfg: &ScenarioConfig, count: usize, stream: &RandomStream, workers: usize) -> Result<DatasetFile> {
    if count == 0 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let results: Vec<Result<(SamplePair, usize)>> =
        pool.install(|| (0..count).into_par_iter().map(|i| generate_record(cfg, i, stream)).collect());

    let mut records = Vec::with_capacity(count);
    let mut redraws = 0;
    for r in results {
        let (pair, n) = r?;
        redraws += n;
        records.push(pair);
    }
    if redraws as f64 > MAX_REDRAW_RATE * count as f64 {
        return Err(Error::RedrawRateExceeded { redraws, count });
    }
    let header = DatasetHeader {
        version: DATASET_VERSION,
        m: cfg.m,
        k: cfg.k,
        p_dbm: cfg.p_dbm,
        scenario: cfg.clone(),
        count,
        seed: stream.seed(),
        stream: stream.stream_id(),
        redraws,
    };
    Ok(DatasetFile { header, records })
}

/// Disjoint adaptation and test sets drawn from the same scenario.
pub fn split_adaptation(
    cfg: &ScenarioConfig,
    n_ad: usize,
    n_test: usize,
    stream: &RandomStream,
    workers: usize,
) -> Result<(Vec<SamplePair>, Vec<SamplePair>)> {
    if n_ad == 0 || n_test == 0 {
        return Err(Error::InvalidConfig("adaptation and test sizes must be at least 1".into()));
    }
    let mut all = generate_dataset(cfg, n_ad + n_test, stream, workers)?.records;
    let test = all.split_off(n_ad);
    Ok((all, test))
}
