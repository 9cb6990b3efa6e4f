//! Simulation toolkit for a commit-and-test compiler that lifts BB84-type
//! two-party protocols from security against benign receivers to
//! computational security against arbitrary receivers.
//!
//! The crate is layered bottom-up: [`qsim`] and [`infotheory`] provide the
//! quantum and entropic machinery, [`commit`] the dual-mode commitments,
//! [`protocol`] the message-passing runtime, [`compiler`] the transform
//! itself, [`apps`] oblivious transfer and identification, [`adversaries`]
//! receiver strategies, and [`harness`] the experiment drivers behind the
//! command-line tool.
//!
//! Numeric code is generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`.

pub mod adversaries;
pub mod apps;
pub mod commit;
pub mod compiler;
pub mod harness;
pub mod infotheory;
pub mod linalg;
pub mod protocol;
pub mod qsim;
pub mod scalar;

pub type QuantumState = qsim::QuantumState<f64>;
pub type DensityMatrix = qsim::DensityMatrix<f64>;
pub type CMatrix = linalg::CMatrix<f64>;
pub type Complex = linalg::C<f64>;
pub type QuantumState32 = qsim::QuantumState<f32>;
pub type DensityMatrix32 = qsim::DensityMatrix<f32>;
