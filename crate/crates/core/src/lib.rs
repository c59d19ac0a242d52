//! Max-min SINR downlink beamforming via uplink-downlink duality, a compact
//! CNN that predicts uplink power allocations, and transfer, meta and online
//! adaptation of that CNN to new channel distributions.

pub mod balancing;
pub mod channels;
pub mod datasets;
pub mod error;
pub mod nn;
pub mod numerics;
pub mod offline;
pub mod online;

pub use error::{Error, Result};

pub type ComplexMatrix = numerics::ComplexMatrix<f64>;
pub type RealMatrix = numerics::RealMatrix<f64>;
pub type ChannelInstance = channels::ChannelInstance<f64>;
pub type UplinkAllocation = balancing::UplinkAllocation<f64>;
pub type DownlinkSolution = balancing::DownlinkSolution<f64>;
