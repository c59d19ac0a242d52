//! Online adaptation over a stream of time slots whose channel scenario
//! changes over time, with follow-the-leader and offline baselines.

mod buffer;
mod config;
mod learner;
mod schedule;

pub use buffer::SlotBuffer;
pub use config::{BaselineConfig, OnlineMetaConfig, ScheduleConfig, Segment};
pub use learner::{adapt_on_slot, ftl_update, online_meta_step, OnlineMetaState, SlotUpdate};
pub use schedule::{run_schedule, slot_data, ScheduleReport, SegmentMean, SlotRow, Strategy};
