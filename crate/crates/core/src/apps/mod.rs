//! Oblivious transfer and password identification on top of BB84 qubits,
//! with the hash, code and MAC primitives they need.

mod code;
mod hash;
mod mac;
mod qid;
mod qot;

pub use code::{repetition_code, PasswordCode};
pub use hash::{toeplitz_hash, Family, HashSeed};
pub use mac::{coefficients, extractor_mac_tag, gf_mul, verify_tag, MacKey};
pub use qid::{
    index_set, mac_input, qid_alice, qid_bob, qid_spec, qid_unshifted_spec, qid_with_mac, random_password, QidAlice,
    QidBob, QidBobMode,
};
pub use qot::{
    decode_partition, encode_partition, is_partition, partition_distribution, qot_alice, qot_bob, qot_spec,
    random_strings, simulator_choice, QotAlice, QotBob,
};
