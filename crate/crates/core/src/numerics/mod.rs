//! Dense complex linear algebra, the Perron eigensolver, and seeded random streams.

mod linalg;
mod matrix;
mod random;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

pub use linalg::{dominant_eigenpair, hermitian_solve, Cholesky};
pub use matrix::{inner, norm2, ComplexMatrix, RealMatrix};
pub use random::RandomStream;

/// Scalar bound for the linear-algebra and balancing code.
pub trait Real: Float + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static {}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}
