use serde::{Deserialize, Serialize};

use crate::channels::{ModelId, ScenarioConfig};
use crate::error::{Error, Result};
use crate::offline::{OuterOptimizer, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineMetaConfig {
    /// Tasks per minibatch, drawn with replacement from past slots.
    pub n_task: usize,
    pub n_tr: usize,
    pub n_val: usize,
    pub n_in: usize,
    pub n_ad: usize,
    /// Outer updates per slot.
    pub outer_iters: usize,
    pub alpha: f64,
    pub beta: f64,
    pub optimizer: OuterOptimizer,
    pub first_order: bool,
    pub workers: usize,
}

impl Default for OnlineMetaConfig {
    fn default() -> Self {
        Self {
            n_task: 20,
            n_tr: 4,
            n_val: 4,
            n_in: 20,
            n_ad: 20,
            outer_iters: 50,
            alpha: 0.001,
            beta: 0.01,
            optimizer: OuterOptimizer::Sgd,
            first_order: false,
            workers: 1,
        }
    }
}

impl OnlineMetaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_task == 0 || self.n_tr == 0 || self.n_val == 0 {
            return Err(Error::InvalidConfig("n_task, n_tr and n_val must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("learning rates must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub scenario: ScenarioConfig,
    pub slots: usize,
}

/// Budgets of the baselines that retrain on accumulated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    /// Warm-started epochs over the full history per slot (online joint).
    pub ftl_epochs: usize,
    pub ftl: TrainConfig,
    /// Meta-training run at every refresh (offline periodic).
    pub periodic: TrainConfig,
    pub periodic_tasks: usize,
    pub periodic_support: usize,
    pub periodic_query: usize,
    /// Matched-pool size per scenario (offline upper bound).
    pub upper_bound_pool: usize,
    pub upper_bound: TrainConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            ftl_epochs: 200,
            ftl: TrainConfig { validation_fraction: 0.0, ..TrainConfig::default() },
            periodic: TrainConfig::default(),
            periodic_tasks: 60,
            periodic_support: 5,
            periodic_query: 5,
            upper_bound_pool: 5000,
            upper_bound: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub segments: Vec<Segment>,
    /// Adaptation pairs received per slot.
    #[serde(default = "ScheduleConfig::default_arrivals")]
    pub arrivals: usize,
    #[serde(default = "ScheduleConfig::default_test")]
    pub test_per_slot: usize,
    #[serde(default = "ScheduleConfig::default_refresh")]
    pub refresh_period: usize,
    #[serde(default)]
    pub meta: OnlineMetaConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "ScheduleConfig::default_workers")]
    pub workers: usize,
}

impl ScheduleConfig {
    fn default_arrivals() -> usize {
        5
    }
    fn default_test() -> usize {
        10
    }
    fn default_refresh() -> usize {
        60
    }
    fn default_workers() -> usize {
        1
    }

    /// Outdoor, then urban vehicular, then freeway, `slots` each.
    pub fn mobility(m: usize, k: usize, p_dbm: f64, slots: usize) -> Self {
        let seg = |model| Segment { scenario: ScenarioConfig::preset(model, m, k, p_dbm), slots };
        Self {
            segments: vec![seg(ModelId::WinnerOutdoor), seg(ModelId::V2iUrban), seg(ModelId::V2iFreeway)],
            arrivals: Self::default_arrivals(),
            test_per_slot: Self::default_test(),
            refresh_period: Self::default_refresh(),
            meta: OnlineMetaConfig::default(),
            baselines: BaselineConfig::default(),
            seed: 0,
            workers: 1,
        }
    }

    pub fn total_slots(&self) -> usize {
        self.segments.iter().map(|s| s.slots).sum()
    }

    /// Segment index of `slot`.
    pub fn segment_of(&self, slot: usize) -> usize {
        let mut end = 0;
        for (i, s) in self.segments.iter().enumerate() {
            end += s.slots;
            if slot < end {
                return i;
            }
        }
        self.segments.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() || self.segments.iter().any(|s| s.slots == 0) {
            return Err(Error::InvalidConfig("schedule needs segments of at least one slot".into()));
        }
        if self.arrivals == 0 || self.test_per_slot == 0 || self.refresh_period == 0 {
            return Err(Error::InvalidConfig("arrivals, test_per_slot and refresh_period must be at least 1".into()));
        }
        let (m, k) = (self.segments[0].scenario.m, self.segments[0].scenario.k);
        for s in &self.segments {
            s.scenario.validate()?;
            if (s.scenario.m, s.scenario.k) != (m, k) {
                return Err(Error::InvalidConfig("all segments must share M and K".into()));
            }
        }
        self.meta.validate()?;
        self.baselines.ftl.validate()?;
        self.baselines.periodic.validate()?;
        self.baselines.upper_bound.validate()
    }
}
