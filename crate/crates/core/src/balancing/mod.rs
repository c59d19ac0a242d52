//! Exact max-min SINR balancing and beamformer recovery from uplink powers.

mod mmse;
mod sinr;
mod solver;

pub use mmse::mmse_filters;
pub use sinr::{downlink_sinr, gain_matrix, uplink_sinr};
pub use solver::{
    extended_coupling_matrix, recover_downlink, recover_downlink_with, solve_balancing, BalancingOptions,
    DownlinkSolution, UplinkAllocation,
};
