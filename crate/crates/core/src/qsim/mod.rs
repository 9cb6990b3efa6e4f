//! Small-scale qubit register simulator.
//!
//! Honest BB84 traffic is kept as per-qubit product factors so that registers
//! with thousands of qubits are cheap. Blocks only densify when an isometry
//! entangles them (adversaries) or when EPR pairs are prepared.

mod density;
mod state;
mod strings;

pub use density::{trace_distance, DensityMatrix};
pub use state::{QuantumState, Record, DEFAULT_DENSE_CAP, DENSITY_CAP};
pub use strings::{pack_bits, unpack_bits, Basis, BasisString, BitString};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QsimError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("state error: {0}")]
    State(String),
    #[error("resource error: {0}")]
    Resource(String),
}

use crate::linalg::{CMatrix, C};
use crate::scalar::Real;

/// Single-qubit amplitudes of `|bit>_basis`.
pub fn bb84_amplitudes<T: Real>(bit: u8, basis: Basis) -> [C<T>; 2] {
    let zero = C::new(T::zero(), T::zero());
    let one = C::new(T::one(), T::zero());
    match basis {
        Basis::Plus if bit == 0 => [one, zero],
        Basis::Plus => [zero, one],
        Basis::Times => {
            let h = T::FRAC_1_SQRT_2();
            let sign = if bit == 0 { h } else { -h };
            [C::new(h, T::zero()), C::new(sign, T::zero())]
        }
    }
}

/// The Hadamard gate, which maps the computational basis onto the diagonal one.
pub fn hadamard<T: Real>() -> CMatrix<T> {
    let h = T::FRAC_1_SQRT_2();
    CMatrix::from_rows(
        2,
        2,
        vec![C::new(h, T::zero()), C::new(h, T::zero()), C::new(h, T::zero()), C::new(-h, T::zero())],
    )
}

/// CNOT with the first qubit as control.
pub fn cnot<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(4, 4);
    let one = C::new(T::one(), T::zero());
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(2, 3)] = one;
    m[(3, 2)] = one;
    m
}
