//! Labelled sample pairs, their on-disk format, and meta-task construction.

mod file;
mod generate;
mod tasks;

pub use file::{DatasetFile, DatasetHeader, SamplePair, DATASET_VERSION};
pub use generate::{canonicalize, generate_dataset, generate_record, split_adaptation, MAX_REDRAW_RATE};
pub use tasks::{build_tasks, merge_pools, TaskDataset};
