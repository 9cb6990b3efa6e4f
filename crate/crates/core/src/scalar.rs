//! Scalar abstraction for the numeric parts of the crate.
//!
//! The simulator and the entropy oracles are written once against [`Real`]
//! and instantiated for `f64` (the default everywhere else in the crate) and
//! `f32`. Each type carries its own tolerance set so that checks stay
//! meaningful at reduced precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable by the simulator and the entropy code.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Unit-norm, Hermiticity and trace tolerance.
    const NORM_TOL: f64;
    /// Smallest eigenvalue still accepted as positive semidefinite is `-PSD_TOL`.
    const PSD_TOL: f64;
    /// Eigenvalues at or below this count as zero when computing a rank.
    const RANK_TOL: f64;

    /// Lossy conversion from `f64`; every literal in the crate goes through here.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline]
    fn norm_tol() -> Self {
        Self::of(Self::NORM_TOL)
    }
}

impl Real for f64 {
    const NORM_TOL: f64 = 1e-9;
    const PSD_TOL: f64 = 1e-9;
    const RANK_TOL: f64 = 1e-7;
}

impl Real for f32 {
    const NORM_TOL: f64 = 1e-4;
    const PSD_TOL: f64 = 1e-4;
    const RANK_TOL: f64 = 1e-3;
}
