use super::ProtocolError;
use crate::qsim::BitString;

/// Receiver gets `s_k`; the sender learns nothing.
pub fn ideal_ot(s0: &BitString, s1: &BitString, k: u8) -> Result<BitString, ProtocolError> {
    if s0.len() != s1.len() {
        return Err(ProtocolError::Argument(format!("string lengths {} and {} differ", s0.len(), s1.len())));
    }
    Ok(if k & 1 == 0 { s0.clone() } else { s1.clone() })
}

/// `None` stands for the bottom password a dishonest Alice may submit.
pub fn ideal_id(w_a: Option<usize>, w_b: usize) -> bool {
    w_a == Some(w_b)
}
