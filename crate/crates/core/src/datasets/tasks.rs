use super::file::SamplePair;
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// One meta-learning task: disjoint support and query sets from a shared pool.
#[derive(Clone, Debug)]
pub struct TaskDataset {
    pub task_id: usize,
    pub support: Vec<SamplePair>,
    pub query: Vec<SamplePair>,
}

/// Builds `k_mt` tasks, each with `n_s + n_q` distinct pairs drawn without replacement.
pub fn build_tasks(
    pool: &[SamplePair],
    k_mt: usize,
    n_s: usize,
    n_q: usize,
    rng: &mut RandomStream,
) -> Result<Vec<TaskDataset>> {
    let needed = n_s + n_q;
    if pool.len() < needed {
        return Err(Error::PoolTooSmall { needed, available: pool.len() });
    }
    Ok((0..k_mt)
        .map(|task_id| {
            let picks = rng.sample_without_replacement(pool.len(), needed);
            let mut pairs = picks.into_iter().map(|i| pool[i].clone());
            let support = pairs.by_ref().take(n_s).collect();
            let query = pairs.collect();
            TaskDataset { task_id, support, query }
        })
        .collect())
}

/// Concatenates pools and renumbers ids so they are unique in the merged pool.
pub fn merge_pools(pools: impl IntoIterator<Item = Vec<SamplePair>>) -> Vec<SamplePair> {
    let mut merged: Vec<SamplePair> = pools.into_iter().flatten().collect();
    for (i, p) in merged.iter_mut().enumerate() {
        p.id = i;
    }
    merged
}
