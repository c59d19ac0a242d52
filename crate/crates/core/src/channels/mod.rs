//! Channel generation for every training and testing scenario.

mod config;
mod fading;
mod instance;
mod mobility;
mod pathloss;

pub use config::{ModelId, ScenarioConfig, WinnerB1Constants, KMH};
pub use fading::{clarke_fading, max_doppler_hz, smallscale_sample, ClarkeProcess, FadingParams, CLARKE_SINUSOIDS, SPEED_OF_LIGHT};
pub use instance::{draw_instance, place_vehicle, ChannelInstance};
pub use mobility::{mobility_step, Freeway, Heading, ManhattanGrid, MoveLog, VehicleState};
pub use pathloss::{pathloss_db, placement_range, shadowing_track};
