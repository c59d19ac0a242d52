use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ScheduleConfig;
use super::learner::{adapt_on_slot, ftl_update, online_meta_step, OnlineMetaState};
use super::buffer::SlotBuffer;
use crate::datasets::{build_tasks, generate_dataset, SamplePair};
use crate::error::{Error, Result};
use crate::nn::Model;
use crate::numerics::RandomStream;
use crate::offline::{evaluate, initial_model, meta_train, train_joint};

const SLOT_STREAM: u64 = 31;
const MATCHED_STREAM: u64 = 32;
const TASK_STREAM: u64 = 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    OnlineMeta,
    OnlineJoint,
    OfflineMetaPeriodic,
    OfflineUpperBound,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::OnlineMeta, Strategy::OnlineJoint, Strategy::OfflineMetaPeriodic, Strategy::OfflineUpperBound];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::OnlineMeta => "online-meta",
            Strategy::OnlineJoint => "online-joint",
            Strategy::OfflineMetaPeriodic => "offline-meta-periodic",
            Strategy::OfflineUpperBound => "offline-upper-bound",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub slot: usize,
    pub scenario: String,
    pub strategy: Strategy,
    pub mean_min_sinr_db: f64,
    pub adaptation_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentMean {
    pub segment: usize,
    pub scenario: String,
    pub strategy: Strategy,
    pub mean_min_sinr_db: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub rows: Vec<SlotRow>,
}

impl ScheduleReport {
    /// `slot,scenario,strategy,mean-min-SINR-dB,adaptation-ms`; the timing
    /// column is left empty unless `timings` is set so reruns compare equal.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from("slot,scenario,strategy,mean-min-SINR-dB,adaptation-ms\n");
        for r in &self.rows {
            let ms = if timings { format!("{:.3}", r.adaptation_ms) } else { String::new() };
            out.push_str(&format!("{},{},{},{},{}\n", r.slot, r.scenario, r.strategy, r.mean_min_sinr_db, ms));
        }
        out
    }

    pub fn series(&self, strategy: Strategy) -> Vec<f64> {
        self.rows.iter().filter(|r| r.strategy == strategy).map(|r| r.mean_min_sinr_db).collect()
    }

    pub fn segment_means(&self, schedule: &ScheduleConfig) -> Vec<SegmentMean> {
        let mut out = Vec::new();
        let strategies: Vec<Strategy> = Strategy::ALL.into_iter().filter(|s| self.rows.iter().any(|r| r.strategy == *s)).collect();
        for strategy in strategies {
            let series = self.series(strategy);
            let mut start = 0;
            for (i, seg) in schedule.segments.iter().enumerate() {
                let end = (start + seg.slots).min(series.len());
                if end > start {
                    let mean = series[start..end].iter().sum::<f64>() / (end - start) as f64;
                    out.push(SegmentMean {
                        segment: i,
                        scenario: seg.scenario.model.as_str().to_string(),
                        strategy,
                        mean_min_sinr_db: mean,
                    });
                }
                start += seg.slots;
            }
        }
        out
    }
}

/// Adaptation and test pairs of `slot`, shared by every strategy.
pub fn slot_data(schedule: &ScheduleConfig, slot: usize) -> Result<(Vec<SamplePair>, Vec<SamplePair>)> {
    let scenario = &schedule.segments[schedule.segment_of(slot)].scenario;
    let stream = RandomStream::new(schedule.seed, SLOT_STREAM).substream(slot as u64);
    let mut records =
        generate_dataset(scenario, schedule.arrivals + schedule.test_per_slot, &stream, schedule.workers)?.records;
    for (i, r) in records.iter_mut().enumerate() {
        r.id = slot * (schedule.arrivals + schedule.test_per_slot) + i;
    }
    let test = records.split_off(schedule.arrivals);
    Ok((records, test))
}

/// Scenario-matched models, one per segment, trained on fresh pools.
fn matched_models(schedule: &ScheduleConfig, template: &Model) -> Result<Vec<Model>> {
    let b = &schedule.baselines;
    schedule
        .segments
        .iter()
        .enumerate()
        .map(|(i, seg)| {
            let stream = RandomStream::new(schedule.seed, MATCHED_STREAM).substream(i as u64);
            let pool = generate_dataset(&seg.scenario, b.upper_bound_pool, &stream, schedule.workers)?.records;
            let init = initial_model(&template.config, &pool, b.upper_bound.seed);
            Ok(train_joint(&pool, init, &b.upper_bound, "upper-bound")?.0)
        })
        .collect()
}

/// Simulates the slot stream for each strategy from the offline checkpoint
/// `init`. Slot `t` predictions use only pairs received in slots `0..=t`.
pub fn run_schedule(schedule: &ScheduleConfig, strategies: &[Strategy], init: &Model) -> Result<ScheduleReport> {
    schedule.validate()?;
    if strategies.is_empty() {
        return Err(Error::InvalidConfig("no strategies selected".into()));
    }
    let total = schedule.total_slots();
    let data: Vec<(Vec<SamplePair>, Vec<SamplePair>)> = (0..total).map(|t| slot_data(schedule, t)).collect::<Result<_>>()?;
    let scenario = |t: usize| schedule.segments[schedule.segment_of(t)].scenario.model.as_str().to_string();
    let meta = &schedule.meta;
    let b = &schedule.baselines;
    let mut report = ScheduleReport::default();
    for &strategy in strategies {
        let mut rows = Vec::with_capacity(total);
        match strategy {
            Strategy::OnlineMeta => {
                let mut state = OnlineMetaState::new(init.clone(), meta.clone(), schedule.seed)?;
                for (t, (adapt, test)) in data.iter().enumerate() {
                    let clock = Instant::now();
                    let model = if t == 0 {
                        state.observe(adapt.clone());
                        adapt_on_slot(&state.theta, adapt, meta.n_ad, meta.beta)?
                    } else {
                        online_meta_step(&mut state, adapt.clone())?.adapted
                    };
                    rows.push((t, clock.elapsed(), evaluate(&model, test)?.mean_min_sinr_db));
                }
            }
            Strategy::OnlineJoint => {
                let mut history = SlotBuffer::new();
                let mut leader = init.clone();
                for (t, (adapt, test)) in data.iter().enumerate() {
                    let clock = Instant::now();
                    let model = if t == 0 {
                        adapt_on_slot(&leader, adapt, meta.n_ad, meta.beta)?
                    } else {
                        let (next, adapted) = ftl_update(&history, &leader, adapt, b.ftl_epochs, &b.ftl, meta.n_ad, meta.beta)?;
                        leader = next;
                        adapted
                    };
                    history.push(adapt.clone());
                    rows.push((t, clock.elapsed(), evaluate(&model, test)?.mean_min_sinr_db));
                }
            }
            Strategy::OfflineMetaPeriodic => {
                let mut history = SlotBuffer::new();
                let mut offline = init.clone();
                for (t, (adapt, test)) in data.iter().enumerate() {
                    let clock = Instant::now();
                    if t > 0 && t % schedule.refresh_period == 0 {
                        let window = history.collect(t - schedule.refresh_period..t);
                        let mut rng = RandomStream::new(schedule.seed, TASK_STREAM).substream(t as u64);
                        let tasks = build_tasks(&window, b.periodic_tasks, b.periodic_support, b.periodic_query, &mut rng)?;
                        offline = meta_train(&tasks, offline, &b.periodic)?.0;
                    }
                    let model = adapt_on_slot(&offline, adapt, meta.n_ad, meta.beta)?;
                    history.push(adapt.clone());
                    rows.push((t, clock.elapsed(), evaluate(&model, test)?.mean_min_sinr_db));
                }
            }
            Strategy::OfflineUpperBound => {
                let models = matched_models(schedule, init)?;
                for (t, (_, test)) in data.iter().enumerate() {
                    let model = &models[schedule.segment_of(t)];
                    rows.push((t, std::time::Duration::ZERO, evaluate(model, test)?.mean_min_sinr_db));
                }
            }
        }
        report.rows.extend(rows.into_iter().map(|(slot, took, db)| SlotRow {
            slot,
            scenario: scenario(slot),
            strategy,
            mean_min_sinr_db: db,
            adaptation_ms: took.as_secs_f64() * 1e3,
        }));
    }
    Ok(report)
}
