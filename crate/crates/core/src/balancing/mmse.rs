use num_complex::Complex;

use crate::channels::ChannelInstance;
use crate::error::{Error, Result};
use crate::numerics::{norm2, Cholesky, ComplexMatrix, Real};

/// Unit-norm MMSE receive filters `(σ_k² I + Σ_j q_j h_j h_jᴴ)⁻¹ h_k`, one column per user.
pub fn mmse_filters<T: Real>(inst: &ChannelInstance<T>, q: &[T]) -> Result<ComplexMatrix<T>> {
    let (k, m) = (inst.users(), inst.antennas());
    if q.len() != k {
        return Err(Error::DimensionMismatch(format!("{} powers for {k} users", q.len())));
    }
    if let Some(bad) = q.iter().position(|x| !(*x >= T::zero())) {
        return Err(Error::InvalidConfig(format!("uplink power {bad} is negative or NaN")));
    }
    for user in 0..k {
        if inst.h.row(user).iter().all(|z| z.norm_sqr() == T::zero()) {
            return Err(Error::DegenerateInstance(user));
        }
    }

    // Σ_j q_j h_j h_jᴴ with h_j = conj(row j).
    let mut cov = ComplexMatrix::zeros(m, m);
    for (j, qj) in q.iter().enumerate() {
        if *qj == T::zero() {
            continue;
        }
        let row = inst.h.row(j);
        for a in 0..m {
            let ha = row[a].conj() * *qj;
            for b in 0..m {
                let v = cov[(a, b)] + ha * row[b];
                cov[(a, b)] = v;
            }
        }
    }

    let mut w = ComplexMatrix::zeros(m, k);
    let mut factored: Vec<(T, Cholesky<T>)> = Vec::new();
    for user in 0..k {
        let s2 = inst.sigma2[user];
        let idx = match factored.iter().position(|(s, _)| *s == s2) {
            Some(i) => i,
            None => {
                let mut a = cov.clone();
                for d in 0..m {
                    a[(d, d)] += Complex::new(s2, T::zero());
                }
                factored.push((s2, Cholesky::factor(&a)?));
                factored.len() - 1
            }
        };
        let h = inst.user_channel(user);
        let x = factored[idx].1.solve(&h)?;
        let n = norm2(&x);
        let col: Vec<Complex<T>> = x.iter().map(|z| *z / n).collect();
        w.set_column(user, &col);
    }
    Ok(w)
}
