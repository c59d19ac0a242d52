use super::config::{ModelId, ScenarioConfig};
use super::mobility::{Freeway, ManhattanGrid};
use crate::error::{Error, Result};
use crate::numerics::RandomStream;

/// Distance range (metres) in which users of a scenario are placed.
pub fn placement_range(cfg: &ScenarioConfig) -> (f64, f64) {
    match cfg.model {
        ModelId::Rayleigh | ModelId::Rician | ModelId::Nakagami => (0.0, f64::INFINITY),
        ModelId::LargeScale | ModelId::WinnerIndoor | ModelId::WinnerOutdoor => (cfg.min_distance_m, cfg.cell_radius_m),
        ModelId::V2iUrban => (0.0, ManhattanGrid::from_config(cfg).max_distance_to_bs()),
        ModelId::V2iFreeway => (0.0, Freeway::from_config(cfg).max_distance_to_bs()),
    }
}

/// Pathloss in dB at distance `d` metres.
///
/// Small-scale families have no pathloss and return 0 dB.
pub fn pathloss_db(model: ModelId, d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    let (min, max) = placement_range(&ScenarioConfig { model, ..cfg.clone() });
    // Placement ranges are closed; allow rounding at the boundary.
    let slack = 1e-9 * max.max(1.0);
    if d < min - slack || d > max + slack {
        return Err(Error::OutOfRange { distance: d, min, max });
    }
    let fc_term = (cfg.carrier_frequency_hz / 5e9).log10();
    Ok(match model {
        ModelId::Rayleigh | ModelId::Rician | ModelId::Nakagami => 0.0,
        ModelId::LargeScale | ModelId::V2iUrban | ModelId::V2iFreeway => 128.1 + 37.6 * (d / 1000.0).log10(),
        ModelId::WinnerIndoor => {
            43.8 + 36.8 * d.log10() + 20.0 * fc_term + 5.0 * (cfg.n_walls as f64 - 1.0)
        }
        ModelId::WinnerOutdoor => {
            let b1 = &cfg.winner_b1;
            b1.slope_db * d.log10() + b1.intercept_db + b1.freq_coeff_db * fc_term
        }
    })
}

/// Log-normal shadowing (dB) along a sequence of positions.
///
/// Consecutive samples follow a first-order Gauss-Markov chain with
/// correlation `exp(-Δd / decorrelation)`; a zero decorrelation distance
/// gives independent draws.
pub fn shadowing_track(std_db: f64, decorrelation_m: f64, positions: &[(f64, f64)], rng: &mut RandomStream) -> Vec<f64> {
    let mut out = Vec::with_capacity(positions.len());
    let mut prev: Option<(f64, (f64, f64))> = None;
    for &p in positions {
        let z = rng.normal();
        let s = match prev {
            None => std_db * z,
            Some((s_prev, q)) => {
                let rho = if decorrelation_m > 0.0 {
                    let dd = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
                    (-dd / decorrelation_m).exp()
                } else {
                    0.0
                };
                rho * s_prev + (1.0 - rho * rho).sqrt() * std_db * z
            }
        };
        out.push(s);
        prev = Some((s, p));
    }
    out
}
