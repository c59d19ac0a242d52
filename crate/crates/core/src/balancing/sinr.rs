use num_complex::Complex;

use crate::channels::ChannelInstance;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, Real};

/// `g[k][j] = |h_kᴴ w_j|²` for every user `k` and beam `j`.
pub fn gain_matrix<T: Real>(inst: &ChannelInstance<T>, w: &ComplexMatrix<T>) -> Result<Vec<Vec<T>>> {
    let (k, m) = (inst.users(), inst.antennas());
    if w.rows() != m || w.cols() != k {
        return Err(Error::DimensionMismatch(format!(
            "beamformers are {}x{}, expected {m}x{k}",
            w.rows(),
            w.cols()
        )));
    }
    let mut g = vec![vec![T::zero(); k]; k];
    for (user, row) in g.iter_mut().enumerate() {
        let h = inst.h.row(user);
        for (beam, out) in row.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, hz) in h.iter().enumerate() {
                acc += *hz * w[(a, beam)];
            }
            *out = acc.norm_sqr();
        }
    }
    Ok(g)
}

/// Downlink SINR of every user under beamforming matrix `w` (M×K).
pub fn downlink_sinr<T: Real>(inst: &ChannelInstance<T>, w: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let g = gain_matrix(inst, w)?;
    Ok((0..inst.users())
        .map(|k| {
            let interference = (0..inst.users()).filter(|j| *j != k).fold(T::zero(), |acc, j| acc + g[k][j]);
            g[k][k] / (interference + inst.sigma2[k])
        })
        .collect())
}

/// Uplink SINR of every user with powers `q` and unit-norm receive filters `w_norm`.
pub fn uplink_sinr<T: Real>(inst: &ChannelInstance<T>, q: &[T], w_norm: &ComplexMatrix<T>) -> Result<Vec<T>> {
    if q.len() != inst.users() {
        return Err(Error::DimensionMismatch(format!("{} powers for {} users", q.len(), inst.users())));
    }
    let g = gain_matrix(inst, w_norm)?;
    Ok((0..inst.users())
        .map(|k| {
            let interference =
                (0..inst.users()).filter(|j| *j != k).fold(T::zero(), |acc, j| acc + q[j] * g[j][k]);
            q[k] * g[k][k] / (interference + inst.sigma2[k])
        })
        .collect())
}
