use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::config::{ModelId, ScenarioConfig};
use super::fading::{clarke_fading, smallscale_sample, FadingParams};
use super::mobility::{Freeway, ManhattanGrid, VehicleState};
use super::pathloss::{pathloss_db, shadowing_track};
use crate::error::{Error, Result};
use crate::numerics::{db_to_linear, dbm_to_watts, ComplexMatrix, RandomStream, Real};

/// One problem instance: row `k` of `h` is user `k`'s channel `h_kᴴ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelInstance<T> {
    pub h: ComplexMatrix<T>,
    pub sigma2: Vec<T>,
    pub power: T,
}

impl<T: Real> ChannelInstance<T> {
    pub fn new(h: ComplexMatrix<T>, sigma2: Vec<T>, power: T) -> Result<Self> {
        let inst = Self { h, sigma2, power };
        inst.validate()?;
        Ok(inst)
    }

    pub fn users(&self) -> usize {
        self.h.rows()
    }

    pub fn antennas(&self) -> usize {
        self.h.cols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma2.len() != self.h.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} noise powers for {} users",
                self.sigma2.len(),
                self.h.rows()
            )));
        }
        if !self.sigma2.iter().all(|s| *s > T::zero() && s.is_finite()) {
            return Err(Error::InvalidConfig("noise powers must be positive and finite".into()));
        }
        if !(self.power > T::zero() && self.power.is_finite()) {
            return Err(Error::InvalidConfig("power budget must be positive and finite".into()));
        }
        if !self.h.is_finite() {
            return Err(Error::InvalidConfig("channel entries must be finite".into()));
        }
        Ok(())
    }

    /// Rescales every `(h_k, σ_k)` to `(h_k/σ_k, 1)`; all SINRs are unchanged.
    pub fn noise_normalized(&self) -> Self {
        let mut h = self.h.clone();
        for (k, s2) in self.sigma2.iter().enumerate() {
            if *s2 != T::one() {
                h.scale_row(k, T::one() / s2.sqrt());
            }
        }
        Self { h, sigma2: vec![T::one(); self.sigma2.len()], power: self.power }
    }

    /// Channel of user `k` as a column vector `h_k`.
    pub fn user_channel(&self, k: usize) -> Vec<Complex<T>> {
        self.h.row(k).iter().map(|z| z.conj()).collect()
    }
}

impl ChannelInstance<f64> {
    pub fn cast<U: Real>(&self) -> ChannelInstance<U> {
        let h = ComplexMatrix::from_fn(self.h.rows(), self.h.cols(), |r, c| {
            let z = self.h[(r, c)];
            Complex::new(U::lit(z.re), U::lit(z.im))
        });
        ChannelInstance { h, sigma2: self.sigma2.iter().map(|s| U::lit(*s)).collect(), power: U::lit(self.power) }
    }
}

fn fading_params(cfg: &ScenarioConfig) -> FadingParams {
    FadingParams { rician_factor: cfg.rician_factor, nakagami_m: cfg.nakagami_m, nakagami_omega: cfg.nakagami_omega }
}

fn annulus_distance(min: f64, max: f64, rng: &mut RandomStream) -> f64 {
    (min * min + (max * max - min * min) * rng.uniform()).sqrt()
}

/// Large-scale gain (dB) and Rayleigh/Clarke small-scale row for one user.
fn user_link(cfg: &ScenarioConfig, rng: &mut RandomStream) -> Result<(f64, Vec<Complex<f64>>)> {
    let m = cfg.m;
    match cfg.model {
        ModelId::LargeScale | ModelId::WinnerIndoor | ModelId::WinnerOutdoor => {
            let d = annulus_distance(cfg.min_distance_m, cfg.cell_radius_m, rng);
            let pl = pathloss_db(cfg.model, d, cfg)?;
            let std = if cfg.model == ModelId::WinnerOutdoor { cfg.winner_b1.shadowing_std_db } else { cfg.shadowing_std_db };
            let shadow = std * rng.normal();
            let row = (0..m).map(|_| rng.complex_normal()).collect();
            Ok((-pl + shadow, row))
        }
        ModelId::V2iUrban | ModelId::V2iFreeway => {
            let (state, d, pos) = place_vehicle(cfg, rng);
            let pl = pathloss_db(cfg.model, d, cfg)?;
            let shadow = shadowing_track(cfg.shadowing_std_db, cfg.decorrelation_distance_m, &[pos], rng)[0];
            let t0 = rng.uniform();
            let fading = clarke_fading(state.velocity, cfg.carrier_frequency_hz, &[t0], m, 1, rng);
            let gains = cfg.bs_antenna_gain_dbi + cfg.ue_antenna_gain_dbi;
            Ok((-pl + shadow + gains, fading[0].row(0).to_vec()))
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Random vehicle on the scenario's road layout: state, BS distance, position.
pub fn place_vehicle(cfg: &ScenarioConfig, rng: &mut RandomStream) -> (VehicleState, f64, (f64, f64)) {
    if cfg.model == ModelId::V2iFreeway {
        let road = Freeway::from_config(cfg);
        let s = road.random_state(cfg.velocity_mps, rng);
        (s, road.distance_to_bs(&s), road.physical_position(&s))
    } else {
        let grid = ManhattanGrid::from_config(cfg);
        let s = grid.random_state(cfg.velocity_mps, rng);
        (s, grid.distance_to_bs(&s), grid.physical_position(&s))
    }
}

/// Draws one channel instance of the configured scenario.
pub fn draw_instance(cfg: &ScenarioConfig, rng: &mut RandomStream) -> Result<ChannelInstance<f64>> {
    cfg.validate()?;
    let (m, k) = (cfg.m, cfg.k);
    let h = if cfg.model.is_small_scale() {
        smallscale_sample(cfg.model, m, k, &fading_params(cfg), rng)?
    } else {
        let mut h = ComplexMatrix::zeros(k, m);
        for user in 0..k {
            let (gain_db, row) = user_link(cfg, rng)?;
            let amp = db_to_linear(gain_db).sqrt();
            for (dst, z) in h.row_mut(user).iter_mut().zip(row) {
                // Rows hold h_kᴴ.
                *dst = z.conj() * amp;
            }
        }
        h
    };
    let sigma2 = vec![dbm_to_watts(cfg.noise_power_dbm()); k];
    ChannelInstance::new(h, sigma2, dbm_to_watts(cfg.p_dbm))
}
