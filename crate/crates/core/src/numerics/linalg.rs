use num_complex::Complex;

use super::matrix::{ComplexMatrix, RealMatrix};
use super::Real;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᴴ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<Complex<T>>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &ComplexMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.rows(), a.cols())));
        }
        let scale = a.max_abs();
        let herm_tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0)) * scale.max(T::min_positive_value());
        for i in 0..n {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)].conj()).norm() > herm_tol {
                    return Err(Error::NotHermitian);
                }
            }
            if a[(i, i)].im.abs() > herm_tol {
                return Err(Error::NotHermitian);
            }
        }

        let zero = Complex::new(T::zero(), T::zero());
        let mut l = vec![zero; n * n];
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d.to_f64().unwrap_or(f64::NAN) });
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex::new(djj, T::zero());
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs length {} for {n}x{n} system", b.len())));
        }
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l[k * n + i].conj() * y[k];
            }
            y[i] = s / l[i * n + i].re;
        }
        Ok(y)
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn hermitian_solve<T: Real>(a: &ComplexMatrix<T>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    Cholesky::factor(a)?.solve(b)
}

/// Perron eigenpair of a nonnegative square matrix by plain power iteration.
///
/// The iterate starts from a fixed, non-uniform positive vector. Convergence is
/// declared when `‖Av − λv‖ ≤ tol·‖v‖`; the returned eigenvector is scaled so
/// its last entry equals one. Matrices whose dominant eigenvalue is not unique
/// in modulus (periodic matrices) surface as `NoConvergence`.
pub fn dominant_eigenpair<T: Real>(a: &RealMatrix<T>, tol: T, max_iter: usize) -> Result<(T, Vec<T>)> {
    let n = a.rows();
    if a.cols() != n || n == 0 {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let nf = T::from_usize(n).unwrap();
    let mut v: Vec<T> = (0..n).map(|i| T::one() + T::from_usize(i).unwrap() / nf).collect();
    normalize_inf(&mut v);

    for _ in 0..max_iter {
        let av = a.mul_vec(&v);
        let lambda = rayleigh(&v, &av);
        let resid = av
            .iter()
            .zip(&v)
            .fold(T::zero(), |acc, (x, y)| acc + (*x - lambda * *y).powi(2))
            .sqrt();
        let vnorm = v.iter().fold(T::zero(), |acc, x| acc + x.powi(2)).sqrt();
        if resid <= tol * vnorm && lambda > T::zero() {
            let last = v[n - 1];
            if !(last > T::zero()) {
                return Err(Error::NoConvergence(max_iter));
            }
            let v: Vec<T> = v.iter().map(|x| *x / last).collect();
            return Ok((lambda, v));
        }
        v = av;
        if !normalize_inf(&mut v) {
            return Err(Error::NoConvergence(max_iter));
        }
    }
    Err(Error::NoConvergence(max_iter))
}

fn rayleigh<T: Real>(v: &[T], av: &[T]) -> T {
    let num = v.iter().zip(av).fold(T::zero(), |acc, (x, y)| acc + *x * *y);
    let den = v.iter().fold(T::zero(), |acc, x| acc + *x * *x);
    num / den
}

fn normalize_inf<T: Real>(v: &mut [T]) -> bool {
    let m = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if !(m > T::zero()) || !m.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x = *x / m;
    }
    true
}
