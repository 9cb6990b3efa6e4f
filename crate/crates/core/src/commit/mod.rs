//! Dual-mode keyed commitments.
//!
//! Keys come from one of two generators with identical output shape. Under a
//! hiding key a commitment is statistically independent of the message; under
//! a binding key the matching secret key extracts the message. The lattice
//! sizes here are for simulation only and provide no real-world security.

mod lwe;
mod sigma;
pub mod wire;

pub use lwe::{
    commit, commit_bits, decrypt_bit, encrypt_bit, extract, extract_bits, gen_binding, gen_hiding, hiding_distance,
    is_prime, pair_bits, verify_open, verify_open_bits, Ciphertext, CommitKey, Commitment, KeyMode, LweParams,
    Randomness, SecretKey, MAX_ENUMERATED_SAMPLES,
};
pub use sigma::{
    encoded_len, equivocation_search, special_soundness, tcommit, tequivocate, textract, topen, trapdoor_gen,
    Extracted, Graph, Permutation, SigmaInstance, TrapCommitment, TrapOpening,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommitError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("invalid commitment: {0}")]
    InvalidCommitment(String),
    #[error("decode error: {0}")]
    Decode(String),
}
