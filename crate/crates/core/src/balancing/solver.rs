use serde::{Deserialize, Serialize};

use super::mmse::mmse_filters;
use super::sinr::{downlink_sinr, gain_matrix};
use crate::channels::ChannelInstance;
use crate::error::{Error, Result};
use crate::numerics::{dominant_eigenpair, ComplexMatrix, Real, RealMatrix};

/// Uplink power vector and the balanced SINR level it attains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UplinkAllocation<T> {
    pub q: Vec<T>,
    pub balanced_sinr: T,
    pub iterations: usize,
}

/// Downlink beamformers `W = W̃ diag(√p)` and the resulting per-user SINRs.
#[derive(Clone, Debug, PartialEq)]
pub struct DownlinkSolution<T> {
    pub w: ComplexMatrix<T>,
    pub w_normalized: ComplexMatrix<T>,
    pub p: Vec<T>,
    pub sinr: Vec<T>,
    /// `1/λ` of the downlink extended coupling matrix.
    pub balanced_level: T,
}

impl<T: Real> DownlinkSolution<T> {
    pub fn min_sinr(&self) -> T {
        self.sinr.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn total_power(&self) -> T {
        self.w.as_slice().iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BalancingOptions<T> {
    /// Relative change of the balanced level that ends the outer loop.
    pub tol: T,
    pub max_outer: usize,
    pub eig_tol: T,
    pub eig_max_iter: usize,
}

impl<T: Real> Default for BalancingOptions<T> {
    fn default() -> Self {
        let floor = T::epsilon() * T::lit(64.0);
        Self {
            tol: T::lit(1e-8).max(floor),
            max_outer: 500,
            eig_tol: T::lit(1e-10).max(floor),
            eig_max_iter: 10_000,
        }
    }
}

/// Extended coupling matrix of size `(K+1)×(K+1)`.
///
/// `cross[k][j]` is the coupling from user `j` into user `k`; the downlink
/// uses `cross[k][j] = |h_kᴴ w̃_j|²` and the uplink its transpose.
pub fn extended_coupling_matrix<T: Real>(gains: &[Vec<T>], sigma2: &[T], power: T, uplink: bool) -> RealMatrix<T> {
    let k = gains.len();
    let mut ups = RealMatrix::zeros(k + 1, k + 1);
    let inv_p = T::one() / power;
    for r in 0..k {
        let d = T::one() / gains[r][r];
        for c in 0..k {
            if c == r {
                continue;
            }
            let cross = if uplink { gains[c][r] } else { gains[r][c] };
            ups[(r, c)] = d * cross;
        }
        ups[(r, k)] = d * sigma2[r];
    }
    for c in 0..=k {
        let col_sum = (0..k).fold(T::zero(), |acc, r| acc + ups[(r, c)]);
        ups[(k, c)] = col_sum * inv_p;
    }
    ups
}

fn check_channels<T: Real>(inst: &ChannelInstance<T>) -> Result<()> {
    for k in 0..inst.users() {
        if inst.h.row(k).iter().all(|z| z.norm_sqr() == T::zero()) {
            return Err(Error::DegenerateInstance(k));
        }
    }
    Ok(())
}

/// Perron pair of a coupling matrix, with the residual tolerance made
/// relative to the eigenvalue. Coupling matrices of canonical instances span
/// many orders of magnitude (entries near 1e-12 at high SNR, and λ far below
/// the ∞-norm when one user is much weaker), so the matrix is rescaled until
/// its dominant eigenvalue is close to one.
fn perron<T: Real>(a: RealMatrix<T>, opts: &BalancingOptions<T>) -> Result<(T, Vec<T>)> {
    let mut s = a.norm_inf();
    if !(s > T::zero() && s.is_finite()) {
        return Err(Error::NoConvergence(0));
    }
    let mut result = None;
    for _ in 0..4 {
        let mut scaled = a.clone();
        scaled.scale(T::one() / s);
        let (mu, v) = dominant_eigenpair(&scaled, opts.eig_tol, opts.eig_max_iter)?;
        result = Some((mu * s, v));
        if mu > T::lit(0.5) {
            break;
        }
        s = s * mu;
    }
    Ok(result.expect("at least one pass"))
}

fn powers_from_eigenvector<T: Real>(v: &[T], power: T) -> Vec<T> {
    let k = v.len() - 1;
    let sum = v[..k].iter().fold(T::zero(), |a, b| a + *b);
    v[..k].iter().map(|x| *x * power / sum).collect()
}

/// Downlink powers and beamformers for an arbitrary feasible uplink power vector.
///
/// Filters are built on the noise-normalized instance (see [`solve_balancing`]).
pub fn recover_downlink<T: Real>(inst: &ChannelInstance<T>, q: &[T]) -> Result<DownlinkSolution<T>> {
    recover_downlink_with(inst, q, &BalancingOptions::default())
}

pub fn recover_downlink_with<T: Real>(
    inst: &ChannelInstance<T>,
    q: &[T],
    opts: &BalancingOptions<T>,
) -> Result<DownlinkSolution<T>> {
    check_channels(inst)?;
    let canon = inst.noise_normalized();
    let w_normalized = mmse_filters(&canon, q)?;
    let gains = gain_matrix(&canon, &w_normalized)?;
    let ups = extended_coupling_matrix(&gains, &canon.sigma2, canon.power, false);
    let (lambda, v) = perron(ups, opts)?;
    let p = powers_from_eigenvector(&v, inst.power);
    let mut w = w_normalized.clone();
    for (col, pk) in p.iter().enumerate() {
        let s = pk.sqrt();
        for row in 0..w.rows() {
            let z = w[(row, col)] * s;
            w[(row, col)] = z;
        }
    }
    let sinr = downlink_sinr(inst, &w)?;
    Ok(DownlinkSolution { w, w_normalized, p, sinr, balanced_level: T::one() / lambda })
}

/// Max-min SINR balancing by alternating MMSE filters and uplink power updates.
///
/// The uplink is solved on the noise-normalized instance, whose sum-power
/// uplink is the exact dual of the downlink even when users see different
/// noise powers. With equal noise powers this is the literal uplink problem.
pub fn solve_balancing<T: Real>(
    inst: &ChannelInstance<T>,
    opts: &BalancingOptions<T>,
) -> Result<(UplinkAllocation<T>, DownlinkSolution<T>)> {
    check_channels(inst)?;
    let inst = &inst.noise_normalized();
    let k = inst.users();
    let mut q = vec![inst.power / T::from_usize(k).unwrap(); k];
    let mut level_prev = T::zero();
    for it in 1..=opts.max_outer {
        let w_norm = mmse_filters(inst, &q)?;
        let gains = gain_matrix(inst, &w_norm)?;
        let lam = extended_coupling_matrix(&gains, &inst.sigma2, inst.power, true);
        let (lambda, v) = perron(lam, opts)?;
        q = powers_from_eigenvector(&v, inst.power);
        let level = T::one() / lambda;
        if (level - level_prev).abs() <= opts.tol * level {
            let downlink = recover_downlink_with(inst, &q, opts)?;
            return Ok((UplinkAllocation { q, balanced_sinr: level, iterations: it }, downlink));
        }
        level_prev = level;
    }
    Err(Error::NoConvergence(opts.max_outer))
}
