use std::f64::consts::PI;

use num_complex::Complex;
use rand_distr::{Distribution, Gamma};

use super::config::ModelId;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RandomStream};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Sinusoids per Clarke fading process.
pub const CLARKE_SINUSOIDS: usize = 64;

/// Parameters of the small-scale fading families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FadingParams {
    /// Linear LOS-to-scattered power ratio.
    pub rician_factor: f64,
    pub nakagami_m: f64,
    pub nakagami_omega: f64,
}

impl Default for FadingParams {
    fn default() -> Self {
        Self { rician_factor: 3.0, nakagami_m: 5.0, nakagami_omega: 2.0 }
    }
}

/// Draws a `k × m` small-scale fading matrix.
pub fn smallscale_sample(
    model: ModelId,
    m: usize,
    k: usize,
    params: &FadingParams,
    rng: &mut RandomStream,
) -> Result<ComplexMatrix<f64>> {
    match model {
        ModelId::Rayleigh => Ok(ComplexMatrix::from_fn(k, m, |_, _| rng.complex_normal())),
        ModelId::Rician => {
            let kf = params.rician_factor;
            if !(kf >= 0.0) {
                return Err(Error::InvalidConfig("rician factor must be non-negative".into()));
            }
            let los = (kf / (kf + 1.0)).sqrt();
            let nlos = (1.0 / (kf + 1.0)).sqrt();
            Ok(ComplexMatrix::from_fn(k, m, |_, _| Complex::new(los, 0.0) + rng.complex_normal() * nlos))
        }
        ModelId::Nakagami => {
            let (shape, omega) = (params.nakagami_m, params.nakagami_omega);
            let gamma = Gamma::new(shape, omega / shape)
                .map_err(|e| Error::InvalidConfig(format!("nakagami parameters: {e}")))?;
            Ok(ComplexMatrix::from_fn(k, m, |_, _| {
                let power: f64 = gamma.sample(rng);
                let phase = 2.0 * PI * rng.uniform();
                Complex::from_polar(power.sqrt(), phase)
            }))
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

pub fn max_doppler_hz(velocity_mps: f64, carrier_hz: f64) -> f64 {
    velocity_mps * carrier_hz / SPEED_OF_LIGHT
}

/// One Clarke-model process per antenna/user pair, realized as a
/// sum of equally spaced arrival angles with random phases.
#[derive(Clone, Debug)]
pub struct ClarkeProcess {
    doppler_hz: f64,
    cosines: Vec<f64>,
    phases: Vec<f64>,
}

impl ClarkeProcess {
    pub fn new(doppler_hz: f64, rng: &mut RandomStream) -> Self {
        let n = CLARKE_SINUSOIDS as f64;
        let rotation = 2.0 * PI * rng.uniform();
        let cosines = (0..CLARKE_SINUSOIDS).map(|i| ((2.0 * PI * i as f64 + rotation) / n).cos()).collect();
        let phases = (0..CLARKE_SINUSOIDS).map(|_| 2.0 * PI * rng.uniform()).collect();
        Self { doppler_hz, cosines, phases }
    }

    pub fn at(&self, t: f64) -> Complex<f64> {
        let w = 2.0 * PI * self.doppler_hz * t;
        let sum = self
            .cosines
            .iter()
            .zip(&self.phases)
            .fold(Complex::new(0.0, 0.0), |acc, (c, p)| acc + Complex::from_polar(1.0, w * c + p));
        sum / (CLARKE_SINUSOIDS as f64).sqrt()
    }
}

/// Temporally correlated unit-power fading, one `k × m` matrix per slot time.
pub fn clarke_fading(
    velocity_mps: f64,
    carrier_hz: f64,
    slot_times: &[f64],
    m: usize,
    k: usize,
    rng: &mut RandomStream,
) -> Vec<ComplexMatrix<f64>> {
    let fd = max_doppler_hz(velocity_mps, carrier_hz);
    let procs: Vec<ClarkeProcess> = (0..k * m).map(|_| ClarkeProcess::new(fd, rng)).collect();
    slot_times
        .iter()
        .map(|&t| ComplexMatrix::from_fn(k, m, |r, c| procs[r * m + c].at(t)))
        .collect()
}
